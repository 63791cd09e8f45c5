"""End-to-end pipeline walkthrough on the bundled synthetic fixture.

Generates a tiny corpus, trains a frozen-backbone classifier, hardens it
with a two-budget FGSM sweep, evaluates, and writes Grad-CAM artifacts —
everything the real pipeline does, at desk scale.

Run: python demos/walkthrough.py [output_dir]
"""

import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from leaflife import synthetic
from leaflife.adversarial import AdversarialConfig, epsilon_sweep
from leaflife.dataset import PreprocessingMode, load_and_preprocess, scan_dataset, stratified_split
from leaflife.evaluation import comparison_table, evaluate
from leaflife.explain import grad_cam, save_explanation
from leaflife.modeling import TrainConfig, build_classifier, train


def main(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = synthetic.generate_corpus(out_dir / "corpus")
    manifest = scan_dataset(corpus)
    print(f"scanned {manifest.total} images across {manifest.classes}")

    split = stratified_split(manifest, (0.70, 0.20, 0.10), seed=42)
    split.save(out_dir / "split.json")

    config = TrainConfig(
        backbone="xception",
        num_classes=manifest.num_classes,
        batch_size=8,
        learning_rate=0.01,
        max_epochs=20,
        early_stop_patience=20,
        seed=11,
        freeze_backbone=True,
    )
    artifact, history = train(build_classifier(config), split, manifest, config)
    artifact.save(out_dir / "model")
    history.to_csv(out_dir / "history.csv")
    best = history.best_record()
    print(f"trained {artifact.model_id}: best epoch {history.best_epoch}, "
          f"val_acc {best.val_acc:.3f}")

    report = evaluate(artifact, split, manifest, output_dir=out_dir / "eval")
    print(f"test accuracy {report.accuracy:.3f}, macro F1 {report.macro_f1:.3f}")
    print(comparison_table([report]))

    # keep the FGSM row cheap: every mixed batch backpropagates to the input
    sweep_base = replace(config, max_epochs=3, early_stop_patience=3)
    adv = AdversarialConfig(base_train=sweep_base, epsilons=(0.0, 0.1), adv_fraction=0.5)
    rows = epsilon_sweep(split, manifest, adv, output_csv=out_dir / "sweep.csv")
    for row in rows:
        print(f"eps={row.epsilon:g}: val_acc {row.val_accuracy:.3f} "
              f"(best epoch {row.optimal_epochs})")

    sample_path = corpus / manifest.entries[0][0]
    image = load_and_preprocess(sample_path, PreprocessingMode.SCALE_SYMMETRIC)
    explanation = grad_cam(artifact, image)
    from PIL import Image

    with Image.open(sample_path) as original:
        files = save_explanation(
            explanation, out_dir / "explain", stem=sample_path.stem,
            original=original.convert("RGB").resize((224, 224), Image.BILINEAR),
        )
    print("explanation files:", ", ".join(str(p) for p in files.values()))


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="leaflife-demo-"))
    main(target)
    print(f"all outputs under {target}")
