"""Train/test splitting and the window-size sweep."""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .capture import CaptureSet
from .errors import CiaError, ExperimentError, InvalidArgumentError
from .features import WindowMatrix, make_windows, normalize
from .gru import GruParams, TrainConfig, init_params, predict, train
from .metrics import EvalReport, evaluate

log = logging.getLogger(__name__)

# 3, 23, ..., 243, then the operating point 255
DEFAULT_SWEEP = tuple(range(3, 256, 20)) + (255,)
SWEEP_HEADER = "window,accuracy,f1,auc,train_s,infer_ms_per_window"


class StratificationWarning(UserWarning):
    pass


def split(dataset: WindowMatrix, train_fraction: float = 0.8, seed: int = 0):
    """Shuffle whole windows and cut them into train and test parts.

    The train side gets ``floor(n * train_fraction)`` windows.
    """
    if not 0 < train_fraction < 1:
        raise InvalidArgumentError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(dataset)
    n_train = math.floor(n * train_fraction + 1e-9)
    order = np.random.default_rng(seed).permutation(n)
    train_idx, test_idx = np.sort(order[:n_train]), np.sort(order[n_train:])
    tr, te = dataset.subset(train_idx), dataset.subset(test_idx)
    for name, part in (("train", tr), ("test", te)):
        present = set(np.unique(part.truth()).tolist())
        if present != {0, 1}:
            warnings.warn(f"{name} split has classes {sorted(present)}; expected both 0 and 1",
                          StratificationWarning, stacklevel=2)
    return tr, te


def class_counts(part: WindowMatrix) -> dict[int, int]:
    t = part.truth()
    return {0: int(np.sum(t == 0)), 1: int(np.sum(t == 1))}


@dataclass
class SizeResult:
    window: int
    report: EvalReport
    train_s: float
    history: list
    params: GruParams

    def row(self) -> str:
        r = self.report
        return (f"{self.window},{r.accuracy!r},{r.f1!r},{r.auc!r},{self.train_s:.6f},"
                f"{r.inference_time_per_window * 1e3:.6f}")


def _cap_windows(wm: WindowMatrix, max_windows: int | None, seed: int) -> WindowMatrix:
    if not max_windows or len(wm) <= max_windows:
        return wm
    keep = np.sort(np.random.default_rng(seed).permutation(len(wm))[:max_windows])
    return wm.subset(keep)


def run_size(captures: Sequence[CaptureSet], window: int, hyper: TrainConfig,
             train_fraction: float = 0.8, stride: int | None = None,
             max_windows: int | None = None, threshold: float = 0.5) -> SizeResult:
    """Featurize, split, train and evaluate at one window size."""
    wm = _cap_windows(make_windows(captures, window, stride), max_windows, hyper.seed)
    tr, te = split(wm, train_fraction, hyper.seed)
    tr = normalize(tr)
    te = normalize(te, tr.bounds)

    t0 = time.perf_counter()
    params, history = train(init_params(hyper.hidden, hyper.seed), tr, hyper)
    train_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    scores = predict(params, te.data)
    infer = (time.perf_counter() - t0) / max(len(te), 1)
    report = evaluate(scores, te.truth(), threshold)
    report.inference_time_per_window = infer
    return SizeResult(window, report, train_s, history, params)


@dataclass
class ExperimentConfig:
    windows: Sequence[int] = DEFAULT_SWEEP
    train: TrainConfig = field(default_factory=TrainConfig)
    train_fraction: float = 0.8
    stride: int | None = None           # None: stride equals the window size
    max_windows: int | None = None      # subsample per size to bound runtime
    threshold: float = 0.5
    out_dir: str | Path | None = None


@dataclass
class ExperimentResult:
    results: list[SizeResult]
    report: EvalReport                  # operating point: last size in the sweep
    sweep_csv: Path | None = None
    roc_csv: Path | None = None
    report_json: Path | None = None

    def rows(self) -> list[str]:
        return [r.row() for r in self.results]


def run_experiment(config: ExperimentConfig, captures: Sequence[CaptureSet]) -> ExperimentResult:
    """Retrain and evaluate the detector at every window size of the sweep."""
    sizes = sorted(config.windows)
    if not sizes:
        raise InvalidArgumentError("empty window sweep")
    results = []
    for w in sizes:
        try:
            res = run_size(captures, w, config.train, config.train_fraction, config.stride,
                           config.max_windows, config.threshold)
        except CiaError as exc:
            raise ExperimentError(w, exc) from exc
        log.info("window %d: acc=%.4f f1=%.4f auc=%.4f", w, res.report.accuracy,
                 res.report.f1, res.report.auc)
        results.append(res)

    out = ExperimentResult(results, results[-1].report)
    if config.out_dir is not None:
        d = Path(config.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        out.sweep_csv = d / "sweep.csv"
        with open(out.sweep_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(SWEEP_HEADER + "\n")
            fh.writelines(row + "\n" for row in out.rows())
        out.roc_csv = d / "roc.csv"
        out.report.roc_csv(out.roc_csv)
        out.report_json = d / "report.json"
        out.report.to_json(out.report_json)
    return out
