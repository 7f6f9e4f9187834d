"""Single-layer GRU classifier over scalar sequences, written in numpy.

Each step reads one scalar ``x_t`` and the previous state ``h_{t-1}``::

    r_t  = sigmoid(W_r [h_{t-1}, x_t] + b_r)
    z_t  = sigmoid(W_z [h_{t-1}, x_t] + b_z)
    c_t  = tanh(W_h [r_t * h_{t-1}, x_t] + b_h)
    h_t  = z_t * h_{t-1} + (1 - z_t) * c_t

Note the update gate weights the *old* state. After the last step the
score is ``sigmoid(w_out . h_T + b_out)``, trained with binary
cross-entropy against the window label.

Weight matrices are ``H x (H + 1)``: the first ``H`` columns act on the
state, the last column on the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import (InvalidArgumentError, ModelFormatError, NumericError, ShapeError,
                     TrainingDivergedError)

PARAM_NAMES = ("W_r", "b_r", "W_z", "b_z", "W_h", "b_h", "w_out", "b_out")
MODEL_MAGIC = "cia-gru v1"


@dataclass
class GruParams:
    W_r: np.ndarray
    b_r: np.ndarray
    W_z: np.ndarray
    b_z: np.ndarray
    W_h: np.ndarray
    b_h: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    # not trained; carried along so a saved model knows its input format
    window: int | None = field(default=None, compare=False)
    bounds: tuple[float, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        H = self.hidden
        shapes = self.shapes(H)
        for name in PARAM_NAMES:
            if getattr(self, name).shape != shapes[name]:
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, "
                                 f"expected {shapes[name]} for H={H}")

    @staticmethod
    def shapes(H: int) -> dict[str, tuple[int, ...]]:
        return {"W_r": (H, H + 1), "b_r": (H,), "W_z": (H, H + 1), "b_z": (H,),
                "W_h": (H, H + 1), "b_h": (H,), "w_out": (H,), "b_out": ()}

    @property
    def hidden(self) -> int:
        return len(self.b_r)

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def map(self, fn, *others: "GruParams") -> "GruParams":
        """Apply ``fn`` tensor-wise across this and ``others``."""
        return replace(self, **{n: fn(getattr(self, n), *(getattr(o, n) for o in others))
                                for n in PARAM_NAMES})

    def copy(self) -> "GruParams":
        return self.map(np.copy)

    def flat(self) -> np.ndarray:
        return np.concatenate([getattr(self, n).ravel() for n in PARAM_NAMES])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, n))) for n in PARAM_NAMES)

    def __eq__(self, other):
        if not isinstance(other, GruParams):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in PARAM_NAMES)


def zeros(H: int, window: int | None = None) -> GruParams:
    return GruParams(**{n: np.zeros(s) for n, s in GruParams.shapes(H).items()},
                     window=window)


def init_params(H: int, seed: int = 0, window: int | None = None) -> GruParams:
    """Uniform(-k, k) init with k = 1/sqrt(H + 1)."""
    if H < 1:
        raise InvalidArgumentError("hidden size must be >= 1")
    rng = np.random.default_rng(seed)
    k = 1.0 / np.sqrt(H + 1)
    return GruParams(**{n: rng.uniform(-k, k, size=s) for n, s in GruParams.shapes(H).items()},
                     window=window)


@dataclass
class StepCache:
    h_prev: np.ndarray
    x: np.ndarray
    r: np.ndarray
    z: np.ndarray
    c: np.ndarray
    a_r: np.ndarray
    a_z: np.ndarray
    a_c: np.ndarray


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite value in GRU input")


def cell_step(params: GruParams, h_prev, x):
    """One GRU update. ``h_prev`` is ``(H,)`` or ``(B, H)``; ``x`` scalar or ``(B,)``."""
    h_prev = np.asarray(h_prev, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check_finite(h_prev, x)
    H = params.hidden
    xc = x[..., None]
    a_r = h_prev @ params.W_r[:, :H].T + xc * params.W_r[:, H] + params.b_r
    a_z = h_prev @ params.W_z[:, :H].T + xc * params.W_z[:, H] + params.b_z
    r = expit(a_r)
    z = expit(a_z)
    a_c = (r * h_prev) @ params.W_h[:, :H].T + xc * params.W_h[:, H] + params.b_h
    c = np.tanh(a_c)
    h = z * h_prev + (1.0 - z) * c
    return h, StepCache(h_prev, x, r, z, c, a_r, a_z, a_c)


@dataclass
class SequenceCache:
    X: np.ndarray       # (B, T)
    hs: np.ndarray      # (T + 1, B, H), hs[0] = 0
    rs: np.ndarray      # (T, B, H)
    zs: np.ndarray
    cs: np.ndarray
    logits: np.ndarray  # (B,)


def _as_batch(params: GruParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a (batch, window) array, got shape {X.shape}")
    if params.window is not None and X.shape[1] != params.window:
        raise ShapeError(f"model expects windows of {params.window}, got {X.shape[1]}")
    _check_finite(X)
    return X


def forward_batch(params: GruParams, X, keep_cache: bool = True):
    """Scores for a batch of windows ``X`` of shape ``(B, T)``.

    Returns ``(scores, cache)``; ``cache`` is None when ``keep_cache`` is
    false, which keeps memory flat for inference.
    """
    X = _as_batch(params, X)
    B, T = X.shape
    H = params.hidden
    W_rz_h = np.concatenate([params.W_r[:, :H], params.W_z[:, :H]]).T   # (H, 2H)
    w_rz_x = np.concatenate([params.W_r[:, H], params.W_z[:, H]])
    b_rz = np.concatenate([params.b_r, params.b_z])
    W_hh = params.W_h[:, :H].T
    w_hx, b_h = params.W_h[:, H], params.b_h

    h = np.zeros((B, H))
    if keep_cache:
        hs = np.empty((T + 1, B, H))
        hs[0] = h
        rs, zs, cs = np.empty((T, B, H)), np.empty((T, B, H)), np.empty((T, B, H))
    for t in range(T):
        xt = X[:, t, None]
        rz = expit(h @ W_rz_h + xt * w_rz_x + b_rz)
        r, z = rz[:, :H], rz[:, H:]
        c = np.tanh((r * h) @ W_hh + xt * w_hx + b_h)
        h = z * h + (1.0 - z) * c
        if keep_cache:
            rs[t], zs[t], cs[t], hs[t + 1] = r, z, c, h
    logits = h @ params.w_out + params.b_out
    scores = expit(logits)
    if not keep_cache:
        return scores, None
    return scores, SequenceCache(X, hs, rs, zs, cs, logits)


def forward(params: GruParams, window):
    """Score of a single window (1-D array of normalized lengths)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise ShapeError(f"expected a 1-D window, got shape {window.shape}")
    scores, cache = forward_batch(params, window[None, :])
    return float(scores[0]), cache


def predict(params: GruParams, X, batch_size: int = 2048) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = [forward_batch(params, X[i:i + batch_size], keep_cache=False)[0]
           for i in range(0, len(X), batch_size)]
    return np.concatenate(out) if out else np.zeros(0)


def bce(logits: np.ndarray, targets: np.ndarray) -> float:
    """Mean binary cross-entropy computed from logits (stable for large |logit|)."""
    return float(np.mean(np.logaddexp(0.0, logits) - targets * logits))


def _check_targets(targets, n):
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if len(targets) != n:
        raise ShapeError(f"{n} windows but {len(targets)} targets")
    if np.any((targets < 0) | (targets > 1)) or not np.all(np.isfinite(targets)):
        raise InvalidArgumentError("targets must lie in [0, 1]")
    return targets


def loss_and_gradients(params: GruParams, X, targets):
    """Mean BCE over the batch and its gradient w.r.t. every parameter (BPTT)."""
    scores, cache = forward_batch(params, X)
    X = cache.X
    B, T = X.shape
    H = params.hidden
    y = _check_targets(targets, B)
    loss = bce(cache.logits, y)

    dlogit = (scores - y) / B
    g_w_out = cache.hs[T].T @ dlogit
    g_b_out = np.asarray(dlogit.sum())

    W_rz_h = np.concatenate([params.W_r[:, :H], params.W_z[:, :H]])   # (2H, H)
    W_hh = params.W_h[:, :H]
    d_ac = np.empty((T, B, H))
    d_arz = np.empty((T, B, 2 * H))
    dh = dlogit[:, None] * params.w_out
    for t in range(T - 1, -1, -1):
        h_prev, r, z, c = cache.hs[t], cache.rs[t], cache.zs[t], cache.cs[t]
        dz = dh * (h_prev - c)
        dc = dh * (1.0 - z)
        dh_prev = dh * z
        dac = dc * (1.0 - c * c)
        drh = dac @ W_hh
        dr = drh * h_prev
        dh_prev += drh * r
        darz = np.concatenate([dr * r * (1.0 - r), dz * z * (1.0 - z)], axis=1)
        dh_prev += darz @ W_rz_h
        d_ac[t], d_arz[t] = dac, darz
        dh = dh_prev

    hs_prev = cache.hs[:T]
    Xt = X.T                                                     # (T, B)
    g_Wh = np.empty((H, H + 1))
    g_Wh[:, :H] = np.tensordot(d_ac, cache.rs * hs_prev, axes=([0, 1], [0, 1]))
    g_Wh[:, H] = np.einsum("tbh,tb->h", d_ac, Xt)
    g_rz_h = np.tensordot(d_arz, hs_prev, axes=([0, 1], [0, 1]))  # (2H, H)
    g_rz_x = np.einsum("tbk,tb->k", d_arz, Xt)
    g_rz_b = d_arz.sum(axis=(0, 1))

    grads = GruParams(
        W_r=np.column_stack([g_rz_h[:H], g_rz_x[:H]]), b_r=g_rz_b[:H],
        W_z=np.column_stack([g_rz_h[H:], g_rz_x[H:]]), b_z=g_rz_b[H:],
        W_h=g_Wh, b_h=d_ac.sum(axis=(0, 1)),
        w_out=g_w_out, b_out=g_b_out,
    )
    return loss, grads


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 10
    hidden: int = 32
    clip: float | None = 5.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    optimizer: str = "adam"

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 0 or self.hidden < 1:
            raise InvalidArgumentError(f"invalid training configuration {self}")
        if self.optimizer not in ("adam", "sgd"):
            raise InvalidArgumentError(f"unknown optimizer {self.optimizer!r}")
        if self.clip is not None and self.clip <= 0:
            raise InvalidArgumentError("clip must be positive or None")


def clip_by_global_norm(grads: GruParams, max_norm: float | None) -> tuple[GruParams, float]:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.tensors().values())))
    if max_norm is None or norm <= max_norm:
        return grads, norm
    factor = max_norm / norm
    return grads.map(lambda g: g * factor), norm


class Adam:
    def __init__(self, params: GruParams, cfg: TrainConfig):
        self.cfg = cfg
        self.m = params.map(np.zeros_like)
        self.v = params.map(np.zeros_like)
        self.t = 0

    def step(self, params: GruParams, grads: GruParams) -> GruParams:
        c = self.cfg
        self.t += 1
        self.m = self.m.map(lambda m, g: c.beta1 * m + (1 - c.beta1) * g, grads)
        self.v = self.v.map(lambda v, g: c.beta2 * v + (1 - c.beta2) * g * g, grads)
        lr_t = c.lr * np.sqrt(1 - c.beta2 ** self.t) / (1 - c.beta1 ** self.t)
        return params.map(lambda p, m, v: p - lr_t * m / (np.sqrt(v) + c.eps),
                          self.m, self.v)


class SGD:
    def __init__(self, params: GruParams, cfg: TrainConfig):
        self.lr = cfg.lr

    def step(self, params: GruParams, grads: GruParams) -> GruParams:
        return params.map(lambda p, g: p - self.lr * g, grads)


def train(params: GruParams, dataset, hyper: TrainConfig, validation=None,
          log=None):
    """Mini-batch training on a normalized :class:`~cia_ids.features.WindowMatrix`.

    Returns the trained parameters and a per-epoch history list. The shuffle
    order depends only on ``hyper.seed``.
    """
    from .metrics import evaluate

    X = np.asarray(dataset.data, dtype=np.float64)
    y = _check_targets(dataset.labels, len(X))
    if len(X) == 0:
        raise InvalidArgumentError("training set is empty")
    params = replace(params.copy(), window=X.shape[1], bounds=dataset.bounds)
    opt = (Adam if hyper.optimizer == "adam" else SGD)(params, hyper)
    rng = np.random.default_rng(hyper.seed)
    history = []
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(len(X))
        total = 0.0
        for i in range(0, len(X), hyper.batch_size):
            idx = order[i:i + hyper.batch_size]
            loss, grads = loss_and_gradients(params, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            grads, _ = clip_by_global_norm(grads, hyper.clip)
            params = opt.step(params, grads)
            total += loss * len(idx)
        if not params.is_finite():
            raise TrainingDivergedError(epoch)
        record = {"epoch": epoch, "loss": total / len(X)}
        if validation is not None:
            scores = predict(params, validation.data)
            rep = evaluate(scores, validation.truth())
            s = np.clip(scores, 1e-12, 1 - 1e-12)
            yv = validation.labels
            record.update(val_loss=float(-np.mean(yv * np.log(s) + (1 - yv) * np.log1p(-s))),
                          val_accuracy=rep.accuracy, val_auc=rep.auc)
        history.append(record)
        if log is not None:
            log(record)
    return params, history


def _fmt(v: float) -> str:
    return repr(float(v))


def save_model(params: GruParams, path, window: int | None = None) -> None:
    window = window if window is not None else params.window
    lines = [MODEL_MAGIC, f"H={params.hidden}", f"W={window if window is not None else 0}"]
    tensors = params.tensors()
    if params.bounds is not None:
        tensors["bounds"] = np.asarray(params.bounds, dtype=np.float64)
    for name, t in tensors.items():
        lines.append(f"tensor {name} {' '.join(map(str, t.shape))}".rstrip())
        rows = t.reshape(t.shape[0], -1) if t.ndim >= 2 else t.reshape(1, -1)
        lines.extend(" ".join(_fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> GruParams:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"{path}: not a text model file") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: missing '{MODEL_MAGIC}' header")
    try:
        H = int(lines[1].removeprefix("H="))
        W = int(lines[2].removeprefix("W="))
    except (IndexError, ValueError):
        raise ModelFormatError(f"{path}: expected H=<int> and W=<int> after the header") from None
    if H < 1 or W < 0:
        raise ModelFormatError(f"{path}: bad dimensions H={H} W={W}")

    expected = GruParams.shapes(H)
    expected["bounds"] = (2,)
    tensors: dict[str, np.ndarray] = {}
    i = 3
    while i < len(lines):
        head = lines[i].split()
        if len(head) < 2 or head[0] != "tensor":
            raise ModelFormatError(f"{path}: expected a tensor block at line {lines[i]!r}")
        name, shape = head[1], tuple(int(d) for d in head[2:])
        if name not in expected:
            raise ModelFormatError(f"{path}: unknown tensor {name!r}")
        if shape != expected[name]:
            raise ModelFormatError(f"{path}: tensor {name} declared {shape}, "
                                   f"H={H} requires {expected[name]}")
        nrows = shape[0] if len(shape) >= 2 else 1
        try:
            values = [float(v) for ln in lines[i + 1:i + 1 + nrows] for v in ln.split()]
        except ValueError:
            raise ModelFormatError(f"{path}: non-numeric data in tensor {name}") from None
        if len(values) != int(np.prod(shape)):
            raise ModelFormatError(f"{path}: tensor {name} holds {len(values)} values, "
                                   f"expected {int(np.prod(shape))}")
        tensors[name] = np.array(values).reshape(shape)
        i += 1 + nrows
    missing = [n for n in PARAM_NAMES if n not in tensors]
    if missing:
        raise ModelFormatError(f"{path}: missing tensors {missing}")
    bounds = tensors.pop("bounds", None)
    return GruParams(**tensors, window=W or None,
                     bounds=None if bounds is None else (float(bounds[0]), float(bounds[1])))
