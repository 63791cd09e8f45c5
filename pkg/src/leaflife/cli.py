"""Command-line entry point: every pipeline stage as a subcommand.

Experiments are described by one TOML config file; flags override config
values. Every run writes its outputs plus a run.json provenance record
under ``<output_dir>/<run_id>/``. Exit codes: 0 success, 1 domain error,
2 usage error.
"""

from __future__ import annotations

import datetime as _dt
import functools
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import click

from .dataset import DatasetManifest, SplitAssignment, scan_dataset, stratified_split
from .errors import InvalidConfigError, LeafLifeError

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

logger = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment, parsed from TOML."""

    dataset_root: Optional[Path]
    ratios: tuple[float, float, float]
    split_seed: int
    train: dict
    adversarial: Optional[dict]
    output_dir: Path
    raw: dict

    @classmethod
    def from_toml(cls, path: "Path | str") -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise InvalidConfigError(f"config file does not exist: {path}")
        try:
            raw = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise InvalidConfigError(f"config {path} is not valid TOML: {exc}") from exc

        dataset = raw.get("dataset", {})
        split = raw.get("split", {})
        ratios = tuple(split.get("ratios", (0.70, 0.20, 0.10)))
        if len(ratios) != 3:
            raise InvalidConfigError("split.ratios: expected three fractions")
        return cls(
            dataset_root=Path(dataset["root"]) if "root" in dataset else None,
            ratios=tuple(float(r) for r in ratios),
            split_seed=int(split.get("seed", 42)),
            train=dict(raw.get("train", {})),
            adversarial=dict(raw["adversarial"]) if "adversarial" in raw else None,
            output_dir=Path(raw.get("output", {}).get("dir", "runs")),
            raw=raw,
        )

    def train_config(self, num_classes: Optional[int] = None):
        from .modeling import TrainConfig

        params = dict(self.train)
        if num_classes is not None:
            params.setdefault("num_classes", num_classes)
        try:
            config = TrainConfig(**params)
        except TypeError as exc:
            raise InvalidConfigError(f"train section: {exc}") from exc
        config.validate()
        return config

    def adversarial_config(self, num_classes: Optional[int] = None):
        from .adversarial import AdversarialConfig

        if self.adversarial is None:
            raise InvalidConfigError("config has no [adversarial] section")
        params = dict(self.adversarial)
        try:
            config = AdversarialConfig(base_train=self.train_config(num_classes), **params)
        except TypeError as exc:
            raise InvalidConfigError(f"adversarial section: {exc}") from exc
        config.validate()
        return config

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True, default=str).encode()).hexdigest()


def domain_errors(fn):
    """Map LeafLifeError to exit code 1 with a one-line diagnostic."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LeafLifeError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _prepare_run_dir(output_dir: Path, run_id: str, overwrite: bool) -> Path:
    run_dir = output_dir / run_id
    if (run_dir / "run.json").exists() and not overwrite:
        raise InvalidConfigError(
            f"run directory {run_dir} already has outputs; pass --overwrite to replace them"
        )
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _write_run_record(run_dir: Path, command: str, digest: str, seed: Optional[int], started: str):
    record = {
        "command": command,
        "config_digest": digest,
        "seed": seed,
        "started_at": started,
        "finished_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    (run_dir / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _resolve_manifest(
    manifest_path: Optional[str],
    config: Optional[ExperimentConfig],
    root: Optional[str] = None,
) -> DatasetManifest:
    dataset_root = Path(root) if root else (config.dataset_root if config else None)
    if manifest_path:
        return DatasetManifest.load(manifest_path, dataset_root)
    if dataset_root is not None:
        return scan_dataset(dataset_root)
    raise InvalidConfigError("provide --manifest/--root or a config with dataset.root")


def _resolve_split(
    split_path: Optional[str], config: Optional[ExperimentConfig], manifest: DatasetManifest
) -> SplitAssignment:
    if split_path:
        return SplitAssignment.load(split_path)
    if config:
        return stratified_split(manifest, config.ratios, config.split_seed)
    raise InvalidConfigError("provide --split or a config with a [split] section")


@click.group()
def cli():
    """Grape leaf disease pipeline: scan, split, train, evaluate, harden, explain, serve."""


@cli.command()
@click.option("--root", type=click.Path(), help="Dataset root (class-per-folder).")
@click.option("--config", "config_path", type=click.Path(), help="Experiment TOML.")
@click.option("--out", type=click.Path(), help="Output directory root.")
@click.option("--run-id", default="scan", show_default=True)
@click.option("--overwrite", is_flag=True)
@domain_errors
def scan(root, config_path, out, run_id, overwrite):
    """Inventory the image corpus into manifest.json."""
    started = _now()
    config = ExperimentConfig.from_toml(config_path) if config_path else None
    root = Path(root) if root else (config.dataset_root if config else None)
    if root is None:
        raise InvalidConfigError("provide --root or a config with dataset.root")
    out_dir = Path(out) if out else (config.output_dir if config else Path("runs"))
    run_dir = _prepare_run_dir(out_dir, run_id, overwrite)

    manifest = scan_dataset(root)
    manifest.save(run_dir / "manifest.json")
    _write_run_record(run_dir, "scan", config.digest() if config else "", None, started)
    click.echo(f"{manifest.total} images in {manifest.num_classes} classes -> {run_dir / 'manifest.json'}")


@cli.command()
@click.option("--manifest", "manifest_path", type=click.Path(), help="manifest.json from scan.")
@click.option("--config", "config_path", type=click.Path(), help="Experiment TOML.")
@click.option("--ratios", nargs=3, type=float, help="train val test fractions.")
@click.option("--seed", type=int, help="Shuffle seed.")
@click.option("--out", type=click.Path())
@click.option("--run-id", default="split", show_default=True)
@click.option("--overwrite", is_flag=True)
@domain_errors
def split(manifest_path, config_path, ratios, seed, out, run_id, overwrite):
    """Deterministic stratified train/val/test split."""
    started = _now()
    config = ExperimentConfig.from_toml(config_path) if config_path else None
    manifest = _resolve_manifest(manifest_path, config)
    ratios = tuple(ratios) if ratios else (config.ratios if config else (0.70, 0.20, 0.10))
    seed = seed if seed is not None else (config.split_seed if config else 42)
    out_dir = Path(out) if out else (config.output_dir if config else Path("runs"))
    run_dir = _prepare_run_dir(out_dir, run_id, overwrite)

    assignment = stratified_split(manifest, ratios, seed)
    assignment.save(run_dir / "split.json")
    _write_run_record(run_dir, "split", config.digest() if config else "", seed, started)
    click.echo(f"split written -> {run_dir / 'split.json'}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--manifest", "manifest_path", type=click.Path())
@click.option("--split", "split_path", type=click.Path())
@click.option("--root", type=click.Path(), help="Dataset root override.")
@click.option("--seed", type=int, help="Override the configured training seed.")
@click.option("--max-epochs", type=int, help="Override the configured epoch cap.")
@click.option("--out", type=click.Path())
@click.option("--run-id", default="train", show_default=True)
@click.option("--overwrite", is_flag=True)
@domain_errors
def train(config_path, manifest_path, split_path, root, seed, max_epochs, out, run_id, overwrite):
    """Train the configured classifier; writes the artifact and history.csv."""
    from .modeling import build_classifier, train as train_model

    started = _now()
    config = ExperimentConfig.from_toml(config_path)
    manifest = _resolve_manifest(manifest_path, config, root)
    assignment = _resolve_split(split_path, config, manifest)
    train_config = config.train_config(num_classes=manifest.num_classes)
    if seed is not None:
        train_config.seed = seed
    if max_epochs is not None:
        train_config.max_epochs = max_epochs
    train_config.validate()
    out_dir = Path(out) if out else config.output_dir
    run_dir = _prepare_run_dir(out_dir, run_id, overwrite)

    model = build_classifier(train_config)
    artifact, history = train_model(model, assignment, manifest, train_config)
    artifact.save(run_dir / "model")
    history.to_csv(run_dir / "history.csv")
    manifest.save(run_dir / "manifest.json")
    assignment.save(run_dir / "split.json")
    _write_run_record(run_dir, "train", config.digest(), train_config.seed, started)
    best = history.best_record()
    click.echo(
        f"trained {artifact.model_id}: best epoch {history.best_epoch} "
        f"(val_loss {best.val_loss:.4f}, val_acc {best.val_acc:.4f}) -> {run_dir}"
    )


@cli.command("eval")
@click.option("--model", "model_dir", type=click.Path(), required=True)
@click.option("--manifest", "manifest_path", type=click.Path())
@click.option("--split", "split_path", type=click.Path())
@click.option("--root", type=click.Path(), help="Dataset root override.")
@click.option("--config", "config_path", type=click.Path())
@click.option("--out", type=click.Path())
@click.option("--run-id", default="eval", show_default=True)
@click.option("--overwrite", is_flag=True)
@domain_errors
def eval_cmd(model_dir, manifest_path, split_path, root, config_path, out, run_id, overwrite):
    """Score the TEST subset; writes report.json and confusion renderings."""
    from .evaluation import evaluate
    from .modeling import TrainedModelArtifact

    started = _now()
    config = ExperimentConfig.from_toml(config_path) if config_path else None
    manifest = _resolve_manifest(manifest_path, config, root)
    assignment = _resolve_split(split_path, config, manifest)
    out_dir = Path(out) if out else (config.output_dir if config else Path("runs"))
    run_dir = _prepare_run_dir(out_dir, run_id, overwrite)

    artifact = TrainedModelArtifact.load(model_dir)
    report = evaluate(artifact, assignment, manifest, output_dir=run_dir)
    _write_run_record(run_dir, "eval", config.digest() if config else "", None, started)
    click.echo(f"accuracy {report.accuracy:.4f}, macro F1 {report.macro_f1:.4f} -> {run_dir}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--manifest", "manifest_path", type=click.Path())
@click.option("--split", "split_path", type=click.Path())
@click.option("--out", type=click.Path())
@click.option("--run-id", default="sweep", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True,
              help="Parallel worker processes, one perturbation budget each.")
@click.option("--save-artifacts", is_flag=True, help="Persist each budget's trained model.")
@click.option("--root", type=click.Path(), help="Dataset root override.")
@click.option("--overwrite", is_flag=True)
@domain_errors
def sweep(config_path, manifest_path, split_path, out, run_id, workers, save_artifacts, root, overwrite):
    """Adversarial-training sweep over the configured perturbation budgets."""
    from .adversarial import epsilon_sweep

    started = _now()
    config = ExperimentConfig.from_toml(config_path)
    manifest = _resolve_manifest(manifest_path, config, root)
    assignment = _resolve_split(split_path, config, manifest)
    adv_config = config.adversarial_config(num_classes=manifest.num_classes)
    out_dir = Path(out) if out else config.output_dir
    run_dir = _prepare_run_dir(out_dir, run_id, overwrite)

    rows = epsilon_sweep(
        assignment, manifest, adv_config,
        output_csv=run_dir / "sweep.csv",
        artifact_dir=(run_dir / "artifacts") if save_artifacts else None,
        workers=workers,
    )
    _write_run_record(run_dir, "sweep", config.digest(), adv_config.base_train.seed, started)
    for row in rows:
        click.echo(
            f"eps={row.epsilon:g}: val_loss {row.val_loss:.4f}, "
            f"val_acc {row.val_accuracy:.4f}, best epoch {row.optimal_epochs}"
        )
    click.echo(f"sweep table -> {run_dir / 'sweep.csv'}")


@cli.command()
@click.option("--model", "model_dir", type=click.Path(), required=True)
@click.option("--image", "image_path", type=click.Path(), required=True)
@click.option("--method", type=click.Choice(["gradcam", "occlusion"]), default="gradcam",
              show_default=True)
@click.option("--target", default="auto", show_default=True,
              help="Class index to explain, or 'auto' for the argmax.")
@click.option("--alpha", type=float, default=0.4, show_default=True)
@click.option("--patch-size", type=int, default=32, show_default=True)
@click.option("--stride", type=int, default=16, show_default=True)
@click.option("--out", type=click.Path())
@click.option("--run-id", default="explain", show_default=True)
@click.option("--overwrite", is_flag=True)
@domain_errors
def explain(model_dir, image_path, method, target, alpha, patch_size, stride, out, run_id, overwrite):
    """Heatmap files for one image: grayscale map, overlay, sidecar JSON."""
    from PIL import Image

    from .dataset import load_and_preprocess
    from .explain import grad_cam, occlusion_sensitivity, save_explanation
    from .modeling import TrainedModelArtifact

    started = _now()
    out_dir = Path(out) if out else Path("runs")
    run_dir = _prepare_run_dir(out_dir, run_id, overwrite)

    artifact = TrainedModelArtifact.load(model_dir)
    pre = load_and_preprocess(image_path, artifact.preprocessing_mode)
    target_class = "auto" if target == "auto" else int(target)
    if method == "gradcam":
        explanation = grad_cam(artifact, pre, target_class=target_class)
    else:
        explanation = occlusion_sensitivity(
            artifact, pre, target_class=None if target == "auto" else int(target),
            patch_size=patch_size, stride=stride,
        )
    with Image.open(image_path) as img:
        original = img.convert("RGB").resize(pre.pixels.shape[:2][::-1], Image.BILINEAR)
        written = save_explanation(
            explanation, run_dir, stem=Path(image_path).stem, original=original, alpha=alpha
        )
    _write_run_record(run_dir, "explain", "", None, started)
    click.echo("\n".join(f"{kind}: {path}" for kind, path in written.items()))


@cli.command()
@click.option("--model", "model_dir", type=click.Path(), envvar="LEAFLIFE_MODEL_DIR",
              required=True, help="Artifact directory (env LEAFLIFE_MODEL_DIR).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, envvar="LEAFLIFE_PORT", default=8080, show_default=True)
@click.option("--max-upload-mb", type=int, envvar="LEAFLIFE_MAX_UPLOAD_MB", default=10,
              show_default=True)
@click.option("--cors-origin", "cors_origins", multiple=True, envvar="LEAFLIFE_CORS_ORIGINS",
              help="Allowed CORS origin; repeatable.")
@domain_errors
def serve(model_dir, host, port, max_upload_mb, cors_origins):
    """Serve the artifact over HTTP (endpoints: /health, /model-info, /predict)."""
    from .service import serve as run_service

    run_service(
        model_dir, bind_address=host, port=port,
        max_upload_mb=max_upload_mb, cors_origins=cors_origins,
    )


@cli.command()
@click.option("--report", "report_paths", type=click.Path(), multiple=True, required=True)
@click.option("--literature", "literature_path", type=click.Path())
@click.option("--out", type=click.Path())
@click.option("--run-id", default="report", show_default=True)
@click.option("--overwrite", is_flag=True)
@domain_errors
def report(report_paths, literature_path, out, run_id, overwrite):
    """Comparison table of evaluated models against prior-work rows."""
    import csv as _csv

    from .evaluation import EvaluationReport, comparison_rows, format_comparison_table

    started = _now()
    reports = [EvaluationReport.load(p) for p in report_paths]
    rows = comparison_rows(reports, literature_path)
    table = format_comparison_table(rows)
    click.echo(table)
    if out:
        run_dir = _prepare_run_dir(Path(out), run_id, overwrite)
        (run_dir / "comparison.txt").write_text(table + "\n")
        with open(run_dir / "comparison.csv", "w", newline="") as fh:
            writer = _csv.DictWriter(
                fh, fieldnames=["author", "method", "accuracy_percent", "computed"]
            )
            writer.writeheader()
            writer.writerows(rows)
        _write_run_record(run_dir, "report", "", None, started)


def main():
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    cli()


if __name__ == "__main__":
    main()
