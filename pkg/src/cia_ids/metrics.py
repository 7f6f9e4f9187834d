"""Confusion matrix, derived rates, ROC curve and trapezoidal AUC."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidArgumentError, ShapeError


def _ratio(num, den):
    return num / den if den > 0 else float("nan")


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    f1: float
    fpr: float
    fnr: float
    tpr: float
    tnr: float
    auc: float
    threshold: float = 0.5
    roc_points: list = field(default_factory=list)        # (fpr, tpr), descending threshold
    roc_thresholds: list = field(default_factory=list)
    inference_time_per_window: float | None = None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("roc_points")
        d.pop("roc_thresholds")
        return d

    def to_json(self, path) -> None:
        d = self.summary()
        # wall-clock timing varies run to run
        d["nondeterministic_fields"] = ["inference_time_per_window"]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(d, fh, indent=1, sort_keys=True)
            fh.write("\n")

    def roc_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("threshold,fpr,tpr\n")
            for thr, (x, y) in zip(self.roc_thresholds, self.roc_points):
                fh.write(f"{thr!r},{x!r},{y!r}\n")


def roc_curve(scores, truth):
    """ROC points over all distinct score thresholds.

    Returns ``(fpr, tpr, thresholds)``; the first point is (0, 0) at
    threshold +inf and the last is (1, 1). Tied scores move both rates in a
    single step.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth).astype(np.int64)
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], truth[order]
    pos = y.sum()
    neg = len(y) - pos
    # last index of each run of equal scores
    cut = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1] if len(s) else np.zeros(0, int)
    tps = np.cumsum(y)[cut]
    fps = (cut + 1) - tps
    tpr = np.r_[0.0, tps / pos] if pos else np.r_[0.0, np.full(len(cut), np.nan)]
    fpr = np.r_[0.0, fps / neg] if neg else np.r_[0.0, np.full(len(cut), np.nan)]
    thresholds = np.r_[np.inf, s[cut]]
    return fpr, tpr, thresholds


def trapezoid_auc(fpr, tpr) -> float:
    fpr, tpr = np.asarray(fpr), np.asarray(tpr)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def evaluate(scores, truth, threshold: float = 0.5) -> EvalReport:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    if len(scores) != len(truth):
        raise ShapeError(f"{len(scores)} scores but {len(truth)} labels")
    if len(scores) == 0:
        raise InvalidArgumentError("need at least one score")
    if not np.all(np.isin(truth, (0, 1))):
        raise InvalidArgumentError("truth labels must be 0 or 1")
    truth = truth.astype(np.int64)

    pred = scores >= threshold
    tp = int(np.sum(pred & (truth == 1)))
    fp = int(np.sum(pred & (truth == 0)))
    tn = int(np.sum(~pred & (truth == 0)))
    fn = int(np.sum(~pred & (truth == 1)))
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    if tp == 0 or np.isnan(precision) or np.isnan(recall):
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)

    fpr_pts, tpr_pts, thr = roc_curve(scores, truth)
    auc = trapezoid_auc(fpr_pts, tpr_pts) if 0 < truth.sum() < len(truth) else float("nan")
    return EvalReport(
        tp=tp, fp=fp, tn=tn, fn=fn,
        accuracy=(tp + tn) / len(truth),
        precision=precision,
        f1=f1,
        fpr=_ratio(fp, fp + tn),
        fnr=_ratio(fn, fn + tp),
        tpr=recall,
        tnr=_ratio(tn, tn + fp),
        auc=auc,
        threshold=threshold,
        roc_points=list(zip(fpr_pts.tolist(), tpr_pts.tolist())),
        roc_thresholds=thr.tolist(),
    )
