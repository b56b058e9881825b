"""Confusion-matrix rates, precision/recall/F1, ROC curve and AUC.

Phishing is the positive class throughout. Metrics are stored as fractions
in [0, 1]; the x100 percent rendering happens only at serialization time.
Ratios with a zero denominator are reported as absent (None), never as 0.
FNR is FN/(FN+TP), the complement of TPR.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    tpr: float | None
    fnr: float | None
    tnr: float | None
    fpr: float | None


@dataclass(frozen=True)
class RocCurve:
    points: list[tuple[float, float]]      # (fpr, tpr), fpr non-decreasing
    thresholds: list[float]                # score cut for each point; inf first
    auc: float


def _as_int_labels(values) -> np.ndarray:
    arr = np.asarray([int(v) for v in values], dtype=np.int64)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise DataError("labels must be 0 (legitimate) or 1 (phishing)")
    return arr


def confusion(labels, predictions) -> ConfusionMatrix:
    y = _as_int_labels(labels)
    p = _as_int_labels(predictions)
    if y.size == 0:
        raise DataError("cannot build a confusion matrix from zero samples")
    if y.size != p.size:
        raise DataError(f"{y.size} labels vs {p.size} predictions")
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def report(cm: ConfusionMatrix) -> MetricsReport:
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(
        accuracy=_ratio(cm.tp + cm.tn, cm.total),
        precision=precision,
        recall=recall,
        f1=f1,
        tpr=recall,
        fnr=_ratio(cm.fn, cm.fn + cm.tp),
        tnr=_ratio(cm.tn, cm.tn + cm.fp),
        fpr=_ratio(cm.fp, cm.fp + cm.tn),
    )


def roc_auc(scores, labels) -> RocCurve:
    """Threshold sweep over descending unique scores; tied scores move as one
    group, so the AUC equals the Mann-Whitney statistic with half credit for
    ties."""
    s = np.asarray(scores, dtype=np.float64)
    y = _as_int_labels(labels)
    if s.size != y.size or s.size == 0:
        raise DataError("scores and labels must be a non-empty aligned pair")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    points = [(0.0, 0.0)]
    thresholds = [float("inf")]
    tp = fp = 0
    i = 0
    while i < s_sorted.size:
        j = i
        while j < s_sorted.size and s_sorted[j] == s_sorted[i]:
            j += 1
        tp += int(y_sorted[i:j].sum())
        fp += (j - i) - int(y_sorted[i:j].sum())
        points.append((fp / n_neg, tp / n_pos))
        thresholds.append(float(s_sorted[i]))
        i = j
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=points, thresholds=thresholds, auc=float(auc))


def _pct(value: float | None) -> str:
    return "n/a" if value is None else f"{100.0 * value:.2f}%"


def _frac(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.6f}"


def render_report(cm: ConfusionMatrix) -> str:
    """Plain-text report: fractions, percents, and per-class averages.

    Per-class precision/recall/F1 are emitted alongside their macro and
    support-weighted averages, labeled, since published tables rarely say
    which averaging they used.
    """
    rep = report(cm)
    pos_support = cm.tp + cm.fn
    neg_support = cm.tn + cm.fp
    precision_neg = _ratio(cm.tn, cm.tn + cm.fn)
    recall_neg = rep.tnr
    if precision_neg is None or recall_neg is None or precision_neg + recall_neg == 0:
        f1_neg = None
    else:
        f1_neg = 2 * precision_neg * recall_neg / (precision_neg + recall_neg)

    def avg(a: float | None, b: float | None, weighted: bool) -> float | None:
        if a is None or b is None:
            return None
        if weighted:
            return (a * pos_support + b * neg_support) / cm.total
        return (a + b) / 2.0

    lines = [
        "confusion matrix (phishing positive)",
        f"  tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn} total={cm.total}",
        "overall",
        f"  accuracy  {_frac(rep.accuracy)}  ({_pct(rep.accuracy)})",
        f"  tpr       {_frac(rep.tpr)}  ({_pct(rep.tpr)})",
        f"  fnr       {_frac(rep.fnr)}  ({_pct(rep.fnr)})",
        f"  tnr       {_frac(rep.tnr)}  ({_pct(rep.tnr)})",
        f"  fpr       {_frac(rep.fpr)}  ({_pct(rep.fpr)})",
        "per class (precision / recall / f1)",
        f"  phishing    {_frac(rep.precision)} / {_frac(rep.recall)} / {_frac(rep.f1)}"
        f"  support={pos_support}",
        f"  legitimate  {_frac(precision_neg)} / {_frac(recall_neg)} / {_frac(f1_neg)}"
        f"  support={neg_support}",
        "averages",
        f"  macro     {_frac(avg(rep.precision, precision_neg, False))} / "
        f"{_frac(avg(rep.recall, recall_neg, False))} / {_frac(avg(rep.f1, f1_neg, False))}",
        f"  weighted  {_frac(avg(rep.precision, precision_neg, True))} / "
        f"{_frac(avg(rep.recall, recall_neg, True))} / {_frac(avg(rep.f1, f1_neg, True))}",
    ]
    return "\n".join(lines) + "\n"


def write_roc_csv(curve: RocCurve, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for threshold, (fpr, tpr) in zip(curve.thresholds, curve.points):
            writer.writerow([repr(threshold), repr(fpr), repr(tpr)])
