"""Test-set metrics: confusion matrix, per-class precision/recall/F1, reports.

Convention: confusion rows are true classes, columns are predictions, in
the canonical (alphabetical) class order. All metrics are fractions in
[0, 1]; percentage formatting happens only at render time.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import DatasetManifest, ImageStore, SplitAssignment, Subset, unit_to_symmetric
from .errors import (
    ClassOrderMismatchError,
    InvalidLabelError,
    InvalidMatrixError,
    InvalidSplitError,
    LengthMismatchError,
)
from .modeling import TrainedModelArtifact, predict_batch


def confusion_matrix(
    y_true: Sequence[int], y_pred: Sequence[int], num_classes: int
) -> np.ndarray:
    """Count matrix with entry (i, j) = samples of true class i predicted as j."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatchError(
            f"y_true has {len(y_true)} labels but y_pred has {len(y_pred)}"
        )
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        t, p = int(t), int(p)
        if not (0 <= t < num_classes and 0 <= p < num_classes):
            raise InvalidLabelError(f"label pair ({t}, {p}) out of range [0, {num_classes})")
        cm[t, p] += 1
    return cm


@dataclass
class ClassMetrics:
    class_name: str
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: bool  # set when a zero denominator forced a metric to 0

    def to_json(self) -> dict:
        return {
            "class_name": self.class_name,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "degenerate": self.degenerate,
        }


def classification_report(
    confusion: np.ndarray, class_names: Sequence[str]
) -> tuple[list[ClassMetrics], float, float]:
    """Per-class precision/recall/F1 plus (macro_f1, weighted_f1).

    precision_j = cm[j,j] / column_sum_j and recall_j = cm[j,j] / row_sum_j;
    a zero denominator yields 0 with the degenerate flag set instead of NaN.
    """
    confusion = np.asarray(confusion)
    if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
        raise InvalidMatrixError(f"confusion matrix must be square, got {confusion.shape}")
    if (confusion < 0).any():
        raise InvalidMatrixError("confusion matrix entries must be nonnegative")
    if len(class_names) != confusion.shape[0]:
        raise LengthMismatchError(
            f"{len(class_names)} class names for a {confusion.shape[0]}-class matrix"
        )

    per_class: list[ClassMetrics] = []
    for j, name in enumerate(class_names):
        tp = float(confusion[j, j])
        col = float(confusion[:, j].sum())
        row = float(confusion[j, :].sum())
        degenerate = col == 0 or row == 0
        precision = tp / col if col else 0.0
        recall = tp / row if row else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(ClassMetrics(name, precision, recall, f1, int(row), degenerate))

    f1s = np.array([m.f1 for m in per_class])
    supports = np.array([m.support for m in per_class], dtype=float)
    macro_f1 = float(f1s.mean())
    weighted_f1 = float((f1s * supports).sum() / supports.sum()) if supports.sum() else 0.0
    return per_class, macro_f1, weighted_f1


@dataclass
class EvaluationReport:
    model_id: str
    accuracy: float
    confusion: np.ndarray
    per_class: list[ClassMetrics]
    macro_f1: float
    weighted_f1: float

    def __post_init__(self) -> None:
        total = int(self.confusion.sum())
        if total:
            trace = int(np.trace(self.confusion))
            if abs(self.accuracy - trace / total) > 1e-9:
                raise ValueError("accuracy must equal trace(confusion) / total")

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "per_class": [m.to_json() for m in self.per_class],
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
        }

    def save(self, path: "Path | str") -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_json(cls, payload: dict) -> "EvaluationReport":
        return cls(
            model_id=payload["model_id"],
            accuracy=float(payload["accuracy"]),
            confusion=np.asarray(payload["confusion"], dtype=np.int64),
            per_class=[
                ClassMetrics(
                    m["class_name"], m["precision"], m["recall"], m["f1"],
                    m["support"], m["degenerate"],
                )
                for m in payload["per_class"]
            ],
            macro_f1=float(payload["macro_f1"]),
            weighted_f1=float(payload["weighted_f1"]),
        )

    @classmethod
    def load(cls, path: "Path | str") -> "EvaluationReport":
        return cls.from_json(json.loads(Path(path).read_text()))


def report_from_predictions(
    model_id: str,
    y_true: Sequence[int],
    y_pred: Sequence[int],
    class_names: Sequence[str],
) -> EvaluationReport:
    cm = confusion_matrix(y_true, y_pred, len(class_names))
    per_class, macro_f1, weighted_f1 = classification_report(cm, class_names)
    total = int(cm.sum())
    accuracy = float(np.trace(cm)) / total if total else 0.0
    return EvaluationReport(model_id, accuracy, cm, per_class, macro_f1, weighted_f1)


def evaluate(
    artifact: TrainedModelArtifact,
    split: SplitAssignment,
    manifest: DatasetManifest,
    output_dir: "Path | str | None" = None,
    batch_size: int = 32,
) -> EvaluationReport:
    """Score the TEST subset in manifest order and assemble the report.

    When ``output_dir`` is given, writes report.json plus CSV and PNG
    renderings of the confusion matrix.
    """
    if tuple(artifact.class_names) != tuple(manifest.classes):
        raise ClassOrderMismatchError(
            f"artifact classes {artifact.class_names} do not match "
            f"manifest classes {manifest.classes}"
        )
    items = split.subset_items(manifest, Subset.TEST)
    if not items:
        raise InvalidSplitError("TEST subset is empty")
    store = ImageStore(manifest.root_path)
    y_true = [label for _, label in items]
    y_pred: list[int] = []
    for lo in range(0, len(items), batch_size):
        chunk = [p for p, _ in items[lo : lo + batch_size]]
        probs = predict_batch(artifact, unit_to_symmetric(store.batch(chunk)), batch_size)
        y_pred.extend(int(i) for i in probs.argmax(axis=1))

    report = report_from_predictions(artifact.model_id, y_true, y_pred, manifest.classes)
    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        report.save(output_dir / "report.json")
        write_confusion_csv(report.confusion, manifest.classes, output_dir / "confusion.csv")
        render_confusion_png(report.confusion, manifest.classes, output_dir / "confusion.png")
    return report


def write_confusion_csv(
    confusion: np.ndarray, class_names: Sequence[str], path: "Path | str"
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred", *class_names])
        for name, row in zip(class_names, confusion):
            writer.writerow([name, *[int(v) for v in row]])


def render_confusion_png(
    confusion: np.ndarray, class_names: Sequence[str], path: "Path | str"
) -> None:
    """Heat-grid rendering with per-cell counts."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(confusion, cmap="Blues")
    ax.set_xticks(range(len(class_names)), class_names, rotation=45, ha="right")
    ax.set_yticks(range(len(class_names)), class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    threshold = confusion.max() / 2 if confusion.max() else 0
    for i in range(confusion.shape[0]):
        for j in range(confusion.shape[1]):
            ax.text(
                j, i, str(int(confusion[i, j])), ha="center", va="center",
                color="white" if confusion[i, j] > threshold else "black",
            )
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={})
    plt.close(fig)


def load_literature(path: "Path | str | None" = None) -> list[dict]:
    """Static prior-work rows for the comparison table."""
    if path is None:
        text = resources.files("leaflife.data").joinpath("literature.csv").read_text()
        lines = text.strip().splitlines()
    else:
        lines = Path(path).read_text().strip().splitlines()
    reader = csv.DictReader(lines)
    return [
        {
            "author": row["author"],
            "method": row["method"],
            "accuracy_percent": float(row["accuracy_percent"]),
        }
        for row in reader
    ]


def comparison_rows(
    reports: Sequence[EvaluationReport],
    literature_path: "Path | str | None" = None,
) -> list[dict]:
    """Literature rows followed by one computed row per report."""
    if not reports:
        raise ValueError("at least one report is required")
    rows = [dict(r, computed=False) for r in load_literature(literature_path)]
    for report in reports:
        rows.append({
            "author": "this work",
            "method": report.model_id,
            "accuracy_percent": round(report.accuracy * 100, 2),
            "computed": True,
        })
    return rows


def format_comparison_table(rows: Sequence[dict]) -> str:
    widths = (
        max(len(r["author"]) for r in rows),
        max(len(r["method"]) for r in rows),
    )
    lines = [
        f"{'Author'.ljust(widths[0])}  {'Method'.ljust(widths[1])}  Accuracy (%)",
        f"{'-' * widths[0]}  {'-' * widths[1]}  ------------",
    ]
    for r in rows:
        lines.append(
            f"{r['author'].ljust(widths[0])}  {r['method'].ljust(widths[1])}  "
            f"{r['accuracy_percent']:g}"
        )
    return "\n".join(lines)


def comparison_table(
    reports: Sequence[EvaluationReport],
    literature_path: "Path | str | None" = None,
) -> str:
    """Formatted comparison of the computed models against prior work."""
    return format_comparison_table(comparison_rows(reports, literature_path))
