"""FGSM perturbation, adversarial training, and the perturbation-budget sweep.

All budgets are L-infinity bounds in the [0, 1] pixel space; images are
converted to the backbone's [-1, 1] space only for the forward pass. The
attack is isolated behind ``fgsm_perturb`` so an iterative variant could be
slotted in without touching the sweep machinery.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import tensorflow as tf

from .dataset import DatasetManifest, SplitAssignment, unit_to_symmetric
from .errors import InvalidConfigError, InvalidEpsilonError, ModeMismatchError
from .modeling import (
    TrainConfig,
    TrainedModelArtifact,
    TrainingHistory,
    build_classifier,
    build_metadata,
    fit_model,
)

logger = logging.getLogger(__name__)

SWEEP_CSV_HEADER = "epsilon,val_loss,val_accuracy,optimal_epochs"


@dataclass
class AdversarialConfig:
    """Perturbation budgets plus the base training recipe they modify."""

    base_train: TrainConfig
    epsilons: tuple[float, ...] = (0.0, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2)
    adv_fraction: float = 0.5

    def __post_init__(self) -> None:
        self.epsilons = tuple(float(e) for e in self.epsilons)

    def validate(self) -> None:
        self.base_train.validate()
        if any(e < 0 for e in self.epsilons):
            raise InvalidEpsilonError("all epsilons must be >= 0")
        if len(set(self.epsilons)) != len(self.epsilons):
            raise InvalidConfigError("duplicate epsilons are forbidden")
        if not 0.0 <= self.adv_fraction <= 1.0:
            raise InvalidConfigError("adv_fraction must lie in [0, 1]")


@dataclass
class SweepRow:
    epsilon: float
    val_loss: float
    val_accuracy: float
    optimal_epochs: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.val_accuracy <= 1.0:
            raise ValueError("val_accuracy must lie in [0, 1]")
        if self.optimal_epochs < 1:
            raise ValueError("optimal_epochs must be >= 1")


def fgsm_perturb(
    model: tf.keras.Model,
    images: np.ndarray,
    labels_onehot: np.ndarray,
    epsilon: float,
) -> np.ndarray:
    """One-step sign-of-gradient attack, clipped back into [0, 1].

    ``images`` must live in unit pixel space; the loss is the categorical
    cross-entropy of the model's softmax output after the unit-to-symmetric
    conversion. The result never deviates from the input by more than
    ``epsilon`` in any pixel.
    """
    if epsilon < 0:
        raise InvalidEpsilonError(f"epsilon must be >= 0, got {epsilon}")
    images = np.asarray(images, dtype=np.float32)
    if images.size and (images.min() < -1e-6 or images.max() > 1.0 + 1e-6):
        raise ModeMismatchError("fgsm_perturb expects images in [0, 1] unit space")
    if epsilon == 0:
        return images.copy()

    x = tf.constant(images)
    y = tf.constant(np.asarray(labels_onehot, dtype=np.float32))
    with tf.GradientTape() as tape:
        tape.watch(x)
        probs = model(unit_to_symmetric(x), training=False)
        loss = tf.reduce_mean(tf.keras.losses.categorical_crossentropy(y, probs))
    grads = tape.gradient(loss, x)
    adv = x + epsilon * tf.sign(grads)
    return tf.clip_by_value(adv, 0.0, 1.0).numpy()


def adversarial_train(
    split: SplitAssignment,
    manifest: DatasetManifest,
    config: AdversarialConfig,
    epsilon: float,
) -> tuple[TrainedModelArtifact, TrainingHistory]:
    """Train from a fresh seeded initialization with FGSM-mixed batches.

    The leading ``adv_fraction`` of each training batch is replaced by FGSM
    examples generated against the current weights; validation always uses
    clean images. At epsilon 0 (or adv_fraction 0) this is exactly plain
    training.
    """
    if epsilon < 0:
        raise InvalidEpsilonError(f"epsilon must be >= 0, got {epsilon}")
    config.validate()
    model = build_classifier(config.base_train)
    history = fit_model(
        model, split, manifest, config.base_train,
        epsilon=epsilon,
        adv_fraction=config.adv_fraction,
        perturb_fn=lambda x, y: fgsm_perturb(model, x, y, epsilon),
    )
    metadata = build_metadata(
        config.base_train, manifest.classes,
        pretrained_loaded=getattr(model, "_leaflife_pretrained", False),
        epsilon=epsilon, adv_fraction=config.adv_fraction,
    )
    return TrainedModelArtifact(model, metadata), history


def _sweep_one(
    split: SplitAssignment,
    manifest: DatasetManifest,
    config: AdversarialConfig,
    epsilon: float,
    artifact_dir: Optional[Path],
) -> SweepRow:
    artifact, history = adversarial_train(split, manifest, config, epsilon)
    best = history.best_record()
    if artifact_dir is not None:
        artifact.save(artifact_dir / f"eps_{epsilon:g}")
    return SweepRow(
        epsilon=epsilon,
        val_loss=best.val_loss,
        val_accuracy=best.val_acc,
        optimal_epochs=history.best_epoch,
    )


def _sweep_worker(payload) -> SweepRow:
    split_json, manifest_json, root, train_json, adv_fraction, epsilon, artifact_dir = payload
    split = SplitAssignment.from_json(split_json)
    manifest = DatasetManifest.from_json(manifest_json, root)
    config = AdversarialConfig(
        base_train=TrainConfig.from_json(train_json),
        epsilons=(epsilon,),
        adv_fraction=adv_fraction,
    )
    return _sweep_one(split, manifest, config, epsilon,
                      Path(artifact_dir) if artifact_dir else None)


def epsilon_sweep(
    split: SplitAssignment,
    manifest: DatasetManifest,
    config: AdversarialConfig,
    *,
    output_csv: "Path | str | None" = None,
    artifact_dir: "Path | str | None" = None,
    workers: int = 1,
) -> list[SweepRow]:
    """One adversarial training run per budget, same seed and split throughout.

    Rows come back ordered by epsilon. Each run starts from a fresh seeded
    initialization, so no weights leak between rows. With ``workers`` > 1
    rows run in spawned worker processes.
    """
    config.validate()
    if not config.epsilons:
        raise InvalidConfigError("epsilons must be non-empty")
    epsilons = sorted(config.epsilons)
    artifact_dir = Path(artifact_dir) if artifact_dir else None

    if workers > 1:
        payloads = [
            (split.to_json(), manifest.to_json(), str(manifest.root_path),
             config.base_train.to_json(), config.adv_fraction, eps,
             str(artifact_dir) if artifact_dir else None)
            for eps in epsilons
        ]
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as pool:
            rows = list(pool.map(_sweep_worker, payloads))
    else:
        rows = []
        for eps in epsilons:
            logger.info("sweep: training at epsilon=%g", eps)
            rows.append(_sweep_one(split, manifest, config, eps, artifact_dir))

    if output_csv is not None:
        write_sweep_csv(rows, output_csv)
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: "Path | str") -> None:
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(f"{r.epsilon:g},{r.val_loss:.6f},{r.val_accuracy:.6f},{r.optimal_epochs}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_sweep_csv(path: "Path | str") -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            SweepRow(
                epsilon=float(row["epsilon"]),
                val_loss=float(row["val_loss"]),
                val_accuracy=float(row["val_accuracy"]),
                optimal_epochs=int(row["optimal_epochs"]),
            )
            for row in reader
        ]
