"""Accuracy, confusion matrices and report tables."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Sequence

import numpy as np

N_CLASSES = 3

REPORT_COLUMNS = (
    "model",
    "labeling",
    "batch_size",
    "learning_rate",
    "epochs",
    "avg_train_acc",
    "avg_val_acc",
    "train_time_s",
    "test_acc",
)
_MARKDOWN_HEADERS = {
    "model": "Model",
    "labeling": "Labeling",
    "batch_size": "Batch Size",
    "learning_rate": "Learning Rate",
    "epochs": "Epochs",
    "avg_train_acc": "Avg Training Accuracy",
    "avg_val_acc": "Avg Validation Accuracy",
    "train_time": "Training Time",
    "train_time_s": "Training Time (s)",
    "test_acc": "Test Accuracy",
}
BASELINE_COLUMNS = ("model", "labeling", "train_acc", "cv_acc", "test_acc")
_BASELINE_HEADERS = {
    "model": "ML Baseline Model",
    "labeling": "Labeling",
    "train_acc": "Training Accuracy",
    "cv_acc": "Cross Validation Accuracy",
    "test_acc": "Test Accuracy",
}


def _as_labels(values) -> np.ndarray:
    return np.asarray([int(v) for v in values], dtype=np.int64)


def accuracy(predictions: Sequence[int], golds: Sequence[int]) -> float:
    """Fraction of positions where prediction equals gold.

    With two classes this is exactly (TP + TN) / (TP + TN + FP + FN).
    """
    p, g = _as_labels(predictions), _as_labels(golds)
    if p.shape != g.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {g.size} golds")
    if p.size == 0:
        raise ValueError("accuracy of an empty evaluation is undefined")
    return int(np.count_nonzero(p == g)) / p.size


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold classes, columns predicted classes."""

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def tp(self, cls: int) -> int:
        return int(self.counts[cls, cls])

    def fp(self, cls: int) -> int:
        return int(self.counts[:, cls].sum() - self.counts[cls, cls])

    def fn(self, cls: int) -> int:
        return int(self.counts[cls, :].sum() - self.counts[cls, cls])

    def tn(self, cls: int) -> int:
        return self.total - self.tp(cls) - self.fp(cls) - self.fn(cls)

    def accuracy(self) -> float:
        return int(np.trace(self.counts)) / self.total


def confusion(predictions: Sequence[int], golds: Sequence[int], n_classes: int = N_CLASSES) -> ConfusionMatrix:
    p, g = _as_labels(predictions), _as_labels(golds)
    if p.shape != g.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {g.size} golds")
    for name, arr in (("prediction", p), ("gold", g)):
        bad = arr[(arr < 0) | (arr >= n_classes)]
        if bad.size:
            raise ValueError(f"{name} label {int(bad[0])} outside 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (g, p), 1)
    return ConfusionMatrix(counts)


@dataclass
class RunReport:
    """One fine-tuning cell, a row of a grid table.

    ``avg_train_acc`` and ``avg_val_acc`` are means over epochs of the
    per-epoch accuracies; ``test_acc`` is measured on the best-validation
    snapshot.
    """

    model: str
    labeling: str
    batch_size: int
    learning_rate: float
    epochs: int
    avg_train_acc: float
    avg_val_acc: float
    train_time_s: float
    test_acc: float
    error: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.error is None:
            for name in ("avg_train_acc", "avg_val_acc", "test_acc"):
                v = getattr(self, name)
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass
class BaselineReport:
    model: str
    labeling: str
    train_acc: float
    cv_acc: float
    test_acc: float


def format_accuracy(value: float) -> str:
    """Four decimals, ties to even on the decimal representation."""
    if value != value:  # NaN marks a failed cell
        return "nan"
    return str(Decimal(repr(float(value))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def format_duration(seconds: float) -> str:
    """``"23min 21s"`` style, whole seconds rounded half-even."""
    if seconds != seconds:
        return "nan"
    total = int(round(seconds))
    minutes, secs = divmod(total, 60)
    return f"{minutes:02d}min {secs:02d}s"


def _format_lr(lr: float) -> str:
    return f"{lr:g}"


def _run_cells(row: RunReport) -> dict[str, str]:
    return {
        "model": row.model,
        "labeling": row.labeling,
        "batch_size": str(row.batch_size),
        "learning_rate": _format_lr(row.learning_rate),
        "epochs": str(row.epochs),
        "avg_train_acc": format_accuracy(row.avg_train_acc),
        "avg_val_acc": format_accuracy(row.avg_val_acc),
        "train_time": format_duration(row.train_time_s),
        "train_time_s": f"{row.train_time_s:.3f}",
        "test_acc": format_accuracy(row.test_acc),
    }


def _baseline_cells(row: BaselineReport) -> dict[str, str]:
    return {
        "model": row.model,
        "labeling": row.labeling,
        "train_acc": format_accuracy(row.train_acc),
        "cv_acc": format_accuracy(row.cv_acc),
        "test_acc": format_accuracy(row.test_acc),
    }


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for cells in rows:
        writer.writerow([cells[c] for c in columns])
    return buf.getvalue()


def _markdown(columns, headers, rows) -> str:
    lines = [
        "| " + " | ".join(headers[c] for c in columns) + " |",
        "|" + "|".join("---" for _ in columns) + "|",
    ]
    for cells in rows:
        lines.append("| " + " | ".join(cells[c] for c in columns) + " |")
    return "\n".join(lines) + "\n"


def render_report(rows: Sequence[RunReport], fmt: str = "markdown") -> str:
    """Render fine-tuning reports as CSV (machine header) or a markdown table.

    The markdown table adds a human ``Training Time`` column next to the raw
    seconds; every other cell is the same string in both formats.
    """
    cells = [_run_cells(r) for r in rows]
    if fmt == "csv":
        return _csv(REPORT_COLUMNS, cells)
    if fmt == "markdown":
        cols = list(REPORT_COLUMNS)
        cols.insert(cols.index("train_time_s"), "train_time")
        return _markdown(cols, _MARKDOWN_HEADERS, cells)
    raise ValueError(f"unknown report format {fmt!r}")


def render_baseline_report(rows: Sequence[BaselineReport], fmt: str = "markdown") -> str:
    cells = [_baseline_cells(r) for r in rows]
    if fmt == "csv":
        return _csv(BASELINE_COLUMNS, cells)
    if fmt == "markdown":
        return _markdown(BASELINE_COLUMNS, _BASELINE_HEADERS, cells)
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report_csv(text: str) -> list[RunReport]:
    """Inverse of ``render_report(..., "csv")`` up to the printed precision."""
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in REPORT_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"report CSV lacks column(s) {', '.join(missing)}")
    out = []
    for row in reader:
        accs = [float(row[c]) for c in ("avg_train_acc", "avg_val_acc", "test_acc")]
        out.append(
            RunReport(
                model=row["model"],
                labeling=row["labeling"],
                batch_size=int(row["batch_size"]),
                learning_rate=float(row["learning_rate"]),
                epochs=int(row["epochs"]),
                avg_train_acc=accs[0],
                avg_val_acc=accs[1],
                train_time_s=float(row["train_time_s"]),
                test_acc=accs[2],
                error="failed" if any(a != a for a in accs) else None,
            )
        )
    return out


def report_as_dict(row: RunReport) -> dict:
    return asdict(row)
