"""Classification metrics: top-n accuracy, confusion matrices, per-class
accuracy, one-vs-rest AUC, and the missed-crystal rate.

All computations are pure functions over immutable prediction lists. The
ranking rule is pinned: labels sort by descending activation, ties broken
by ascending label id, so every downstream metric is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import CRYSTAL_IDS, LABELS, NUM_CLASSES, ClassLabel, label_by_name
from .nn import softmax

N_CLASSES = NUM_CLASSES


class MetricsError(ValueError):
    """Raised when a metric is requested over inputs it is undefined for."""


def rank_labels(activations: Sequence[float]) -> tuple[int, ...]:
    """Label ids by descending activation; equal activations keep id order."""
    acts = np.asarray(activations, dtype=np.float64)
    return tuple(int(i) for i in np.argsort(-acts, kind="stable"))


@dataclass(frozen=True)
class PredictionRecord:
    record_id: str
    true_label: ClassLabel
    activations: tuple[float, ...]
    ranked_labels: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        acts = tuple(float(a) for a in self.activations)
        if len(acts) != N_CLASSES:
            raise MetricsError(f"expected {N_CLASSES} activations, got {len(acts)}")
        if not all(np.isfinite(acts)):
            raise MetricsError(f"non-finite activation for {self.record_id!r}")
        object.__setattr__(self, "activations", acts)
        object.__setattr__(self, "ranked_labels", rank_labels(acts))

    @property
    def top1(self) -> int:
        return self.ranked_labels[0]


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[r][c] = images of true class c predicted (top-1) as class r."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (N_CLASSES, N_CLASSES) or (counts < 0).any():
            raise MetricsError("confusion matrix must be 10x10 non-negative counts")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def column_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def total(self) -> int:
        return int(self.counts.sum())

    def empty_columns(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self.column_sums() == 0))

    def column_percentages(self) -> np.ndarray:
        """Each column as percentages of its sum, rounded to one decimal.
        Empty columns come back all-zero; callers flag them via
        empty_columns()."""
        sums = self.column_sums().astype(np.float64)
        safe = np.where(sums == 0, 1.0, sums)
        return np.round(100.0 * self.counts / safe, 1)


def _require_predictions(predictions: Sequence[PredictionRecord]) -> None:
    if not predictions:
        raise MetricsError("empty prediction list")


def topn_accuracy(predictions: Sequence[PredictionRecord], n: int) -> float:
    """Fraction of records whose true label is among the n top-ranked."""
    _require_predictions(predictions)
    if not 1 <= n <= N_CLASSES:
        raise MetricsError(f"n must be in 1..{N_CLASSES}, got {n}")
    hits = sum(p.true_label.id in p.ranked_labels[:n] for p in predictions)
    return hits / len(predictions)


def confusion_matrix(predictions: Sequence[PredictionRecord]) -> ConfusionMatrix:
    _require_predictions(predictions)
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for p in predictions:
        counts[p.top1, p.true_label.id] += 1
    return ConfusionMatrix(counts)


def per_class_accuracy(matrix: ConfusionMatrix, *, allow_empty: bool = False
                       ) -> tuple[tuple[Optional[float], ...], float]:
    """Diagonal over column sum per class, plus the unweighted class average.

    A class with no test images has no defined accuracy. By default that is
    an error; with allow_empty the class comes back None and the average runs
    over the defined classes only (they coincide when all classes appear)."""
    sums = matrix.column_sums()
    empty = matrix.empty_columns()
    if empty and not allow_empty:
        names = ", ".join(LABELS[c].name for c in empty)
        raise MetricsError(f"no test images for class(es): {names}")
    ratios = tuple(
        None if sums[c] == 0 else float(matrix.counts[c, c] / sums[c])
        for c in range(N_CLASSES))
    defined = [r for r in ratios if r is not None]
    if not defined:
        raise MetricsError("confusion matrix is empty")
    return ratios, float(np.mean(defined))


def roc_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Exact Mann-Whitney AUC: (wins + 0.5*ties) / (positives*negatives)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise MetricsError("scores and labels must be equal-length vectors")
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise MetricsError("AUC needs at least one positive and one negative")
    # rank-sum identity; average ranks contribute the half-credit for ties
    ranks = rankdata(scores, method="average")
    return float((ranks[labels].sum() - pos * (pos + 1) / 2) / (pos * neg))


def one_vs_rest_auc(predictions: Sequence[PredictionRecord],
                    *, allow_undefined: bool = False
                    ) -> tuple[Optional[float], ...]:
    """Per-class AUC where the class-c score is its softmax probability.

    A class every record belongs to (or none does) has no defined AUC;
    allow_undefined reports those as None instead of raising."""
    _require_predictions(predictions)
    acts = np.array([p.activations for p in predictions], dtype=np.float64)
    probs = softmax(acts)
    true_ids = np.array([p.true_label.id for p in predictions])
    out = []
    for c in range(N_CLASSES):
        labels = true_ids == c
        if allow_undefined and (labels.all() or not labels.any()):
            out.append(None)
        else:
            out.append(roc_auc(probs[:, c], labels))
    return tuple(out)


def missed_crystal_rate(predictions: Sequence[PredictionRecord], n: int) -> float:
    """Fraction of crystal-bearing images whose top-n labels contain no
    crystal class. Confusing one crystal class for another is not a miss."""
    _require_predictions(predictions)
    if not 1 <= n <= N_CLASSES:
        raise MetricsError(f"n must be in 1..{N_CLASSES}, got {n}")
    crystal_true = [p for p in predictions if p.true_label.is_crystal]
    if not crystal_true:
        raise MetricsError("no crystal-bearing records to score")
    missed = sum(CRYSTAL_IDS.isdisjoint(p.ranked_labels[:n]) for p in crystal_true)
    return missed / len(crystal_true)


@dataclass(frozen=True)
class EvalReport:
    top_n_accuracy: dict[int, float]
    per_class_accuracy: tuple[Optional[float], ...]
    class_average_accuracy: float
    confusion: ConfusionMatrix
    auc: tuple[Optional[float], ...]
    missed_crystal_rate: dict[int, Optional[float]]

    def to_json(self) -> dict:
        return {
            "top_n_accuracy": {str(n): v for n, v in self.top_n_accuracy.items()},
            "per_class_accuracy": {
                LABELS[c].name: self.per_class_accuracy[c] for c in range(N_CLASSES)
            },
            "class_average_accuracy": self.class_average_accuracy,
            "confusion_counts": self.confusion.counts.tolist(),
            "confusion_column_percentages": self.confusion.column_percentages().tolist(),
            "confusion_empty_columns": list(self.confusion.empty_columns()),
            "auc": {LABELS[c].name: self.auc[c] for c in range(N_CLASSES)},
            "missed_crystal_rate": {
                str(n): v for n, v in self.missed_crystal_rate.items()
            },
        }


def report(predictions: Sequence[PredictionRecord]) -> EvalReport:
    """Assemble every metric. Fields a sparse prediction set cannot define
    (classes with no examples, AUC without both sides, missed-crystal rate
    without crystal-bearing records) come back None rather than failing, so
    a live report over a few annotations stays usable."""
    _require_predictions(predictions)
    matrix = confusion_matrix(predictions)
    ratios, average = per_class_accuracy(matrix, allow_empty=True)
    any_crystal = any(p.true_label.is_crystal for p in predictions)
    return EvalReport(
        top_n_accuracy={n: topn_accuracy(predictions, n) for n in (1, 2, 3)},
        per_class_accuracy=ratios,
        class_average_accuracy=average,
        confusion=matrix,
        auc=one_vs_rest_auc(predictions, allow_undefined=True),
        missed_crystal_rate={
            n: missed_crystal_rate(predictions, n) if any_crystal else None
            for n in (1, 2, 3)
        },
    )


def write_report(rep: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(rep.to_json(), indent=2) + "\n")


def write_predictions(predictions: Iterable[PredictionRecord],
                      path: str | Path) -> None:
    with open(path, "w") as fh:
        for p in predictions:
            fh.write(json.dumps({
                "record_id": p.record_id,
                "true_label": p.true_label.name,
                "activations": list(p.activations),
            }) + "\n")


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    predictions = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                predictions.append(PredictionRecord(
                    record_id=raw["record_id"],
                    true_label=label_by_name(raw["true_label"]),
                    activations=tuple(raw["activations"]),
                ))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise MetricsError(f"{path}:{lineno}: bad prediction line: {exc}")
    return predictions
