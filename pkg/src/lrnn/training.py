"""Multiplicative-update training for the nonnegative autoencoder.

The objective ||X - reconstruction||^2 is minimized under the RNN
constraints with NMF-style updates.  With A the input activations of an
encode layer, W its weights and WB the paired decode weights, one update is

    W  <- W  * (A^T A WB^T) / (A^T A W WB WB^T)        (elementwise)
    WB <- WB * (W^T A^T A)  / (W^T A^T A W WB)

Zero denominator entries are replaced by a tiny floor before dividing, so
the rules are total and preserve both nonnegativity and exact zeros.
After each update the weights are pushed back inside the constraint set
(rows summing above 1 are normalized onto the boundary) and every unit
whose batch pre-activation peaks above the saturation level 1 is scaled
back onto the boundary.

Training runs minibatch-sequentially: per batch, each encode layer and its
mirrored decode layer are updated in turn, feeding the clamped activations
forward.  A shallow model is the depth-1 case of the same loop.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .data import iter_minibatches
from .model import LrnnModel, as_matrix, clamp_unit, dataset_error, reconstruction_error

#: Default replacement for exact-zero denominators (IEEE double machine epsilon).
EPS_FLOOR = float(np.finfo(np.float64).eps)

#: Relative margin keeping freshly initialized row sums strictly below 1.
_INIT_MARGIN = 1e-6

#: Window length (minibatches) of the early-stop moving average.
_EARLY_STOP_WINDOW = 50

#: Stream tag separating batch-order draws from weight-init draws.
_SHUFFLE_STREAM = 0x5B

Observer = Callable[[int, float, LrnnModel], None]


@dataclass
class TrainConfig:
    """Budget and reproducibility knobs for one training run.

    At least one of ``max_iterations`` (total minibatch updates) or
    ``max_epochs`` must be set; whichever is hit first ends the run.
    ``rel_tol`` > 0 additionally stops early once the moving average of the
    minibatch error (window 50) improves by less than ``rel_tol``
    relatively against the preceding window.
    """

    batch_size: int = 100
    max_epochs: int | None = None
    max_iterations: int | None = None
    seed: int = 0
    eps_floor: float = EPS_FLOOR
    rel_tol: float = 0.0
    shuffle: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.eps_floor <= 0.0:
            raise ValueError("eps_floor must be positive")


@dataclass
class TrainReport:
    """Error trace of a run: minibatch errors per update plus the final
    whole-dataset error."""

    error_curve: list[tuple[int, float]] = field(default_factory=list)
    final_full_error: float = float("nan")
    wall_time: float = 0.0


def init_weights(encode_dims: Sequence[int], seed: int) -> LrnnModel:
    """Random model satisfying the RNN constraints, deterministic in ``seed``.

    Entries are uniform draws from the seeded generator, then every row is
    divided by its sum times (1 + 1e-6) so all row sums land strictly
    below 1.  Encode layers are drawn first, then decode layers.
    """
    dims = [int(d) for d in encode_dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"encode dims need >= 2 positive entries, got {encode_dims}")
    rng = np.random.default_rng(seed)

    def draw(rows: int, cols: int) -> np.ndarray:
        w = rng.random((rows, cols))
        w /= w.sum(axis=1, keepdims=True) * (1.0 + _INIT_MARGIN)
        return w

    encode = [draw(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    mirror = dims[::-1]
    decode = [draw(mirror[i], mirror[i + 1]) for i in range(len(mirror) - 1)]
    return LrnnModel(encode, decode)


def _multiplicative_encode(gram, w, wb, eps_floor):
    num = gram @ wb.T
    den = (gram @ w) @ (wb @ wb.T)
    den[den == 0.0] = eps_floor
    return w * num / den


def _multiplicative_decode(gram, w, wb, eps_floor):
    num = w.T @ gram
    den = (w.T @ gram @ w) @ wb
    den[den == 0.0] = eps_floor
    return wb * num / den


def update_encode(model: LrnnModel, m: int, a, eps_floor: float = EPS_FLOOR) -> np.ndarray:
    """One multiplicative update of encode layer ``m`` (1-based), not applied.

    ``a`` is the layer's input activation for the current minibatch: the
    clamped batch itself for m=1, otherwise the (m-1)-th encode activation.
    The paired decode weights are those of the mirrored layer.
    """
    a = as_matrix(a, "a")
    w = model.encode_weights[m - 1]
    wb = model.decode_weights[model.depth - m]
    if a.shape[1] != w.shape[0]:
        raise ValueError(f"activations have {a.shape[1]} columns, layer {m} expects {w.shape[0]}")
    return _multiplicative_encode(a.T @ a, w, wb, eps_floor)


def update_decode(model: LrnnModel, m: int, a, eps_floor: float = EPS_FLOOR) -> np.ndarray:
    """Multiplicative update of the decode layer mirroring encode layer ``m``.

    Uses the model's current encode weights W_m, so when following the
    training order the freshly updated W_m must already be in the model.
    """
    a = as_matrix(a, "a")
    w = model.encode_weights[m - 1]
    wb = model.decode_weights[model.depth - m]
    if a.shape[1] != w.shape[0]:
        raise ValueError(f"activations have {a.shape[1]} columns, layer {m} expects {w.shape[0]}")
    return _multiplicative_decode(a.T @ a, w, wb, eps_floor)


def project_rows(w: np.ndarray) -> np.ndarray:
    """Scale every row with sum > 1 back onto the constraint boundary sum = 1."""
    sums = w.sum(axis=1)
    over = sums > 1.0
    if not np.any(over):
        return w
    out = w.copy()
    out[over] /= sums[over, None]
    return out


def rescale_saturation(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Scale saturated units of ``w`` so no batch pre-activation exceeds 1.

    ``a`` holds the layer inputs for the current minibatch.  Each unit
    (column of ``w``) whose peak pre-activation ``max(a @ w)`` exceeds the
    saturation level 1 is divided by that peak, putting it exactly on the
    saturation boundary; unsaturated units, including the degenerate
    all-zero case, stay untouched.  Scaling is never upward, so weights
    satisfying the row-sum constraints still satisfy them afterwards.
    """
    if not (w.size and a.size):
        return w
    peaks = (a @ w).max(axis=0)
    return w / np.maximum(peaks, 1.0)


def _pair_step(a, w, wb, eps_floor):
    """One Algorithm body for an (encode, decode) pair on input activations ``a``.

    Returns the new weights plus h = min(a @ w, 1), the activations feeding
    the next layer.
    """
    gram = a.T @ a
    w = _multiplicative_encode(gram, w, wb, eps_floor)
    w = project_rows(w)
    pre = a @ w
    scale = np.maximum(pre.max(axis=0), 1.0)
    w = w / scale
    pre = pre / scale
    wb = _multiplicative_decode(gram, w, wb, eps_floor)
    wb = project_rows(wb)
    h = clamp_unit(pre)
    wb = rescale_saturation(wb, h)
    return w, wb, h


def _train_minibatch(x, model, cfg, observer) -> TrainReport:
    """Shared minibatch loop: updates ``model`` in place and collects the curve."""
    x = as_matrix(x, "x")
    if x.shape[0] == 0:
        raise ValueError("empty dataset")
    if x.shape[1] != model.visible_dim:
        raise ValueError(
            f"dataset has {x.shape[1]} attributes but model expects {model.visible_dim}"
        )
    if cfg.max_iterations is None and cfg.max_epochs is None:
        raise ValueError("set max_iterations and/or max_epochs in TrainConfig")
    order_rng = np.random.default_rng([cfg.seed, _SHUFFLE_STREAM]) if cfg.shuffle else None
    depth = model.depth
    start = time.perf_counter()
    curve: list[tuple[int, float]] = []
    errors: list[float] = []
    iteration = 0
    epoch = 0
    done = False
    while not done:
        epoch += 1
        if cfg.max_epochs is not None and epoch > cfg.max_epochs:
            break
        for batch in iter_minibatches(x, cfg.batch_size, order_rng, cfg.shuffle):
            a = clamp_unit(batch)
            for m in range(depth):
                w, wb, a = _pair_step(
                    a, model.encode_weights[m], model.decode_weights[depth - 1 - m], cfg.eps_floor
                )
                model.encode_weights[m] = w
                model.decode_weights[depth - 1 - m] = wb
            recon = a
            for wb in model.decode_weights:
                recon = clamp_unit(recon @ wb)
            err = reconstruction_error(batch, recon)
            iteration += 1
            curve.append((iteration, err))
            errors.append(err)
            if observer is not None:
                observer(iteration, err, model)
            if cfg.max_iterations is not None and iteration >= cfg.max_iterations:
                done = True
                break
            if cfg.rel_tol > 0.0 and len(errors) >= 2 * _EARLY_STOP_WINDOW:
                prev = float(np.mean(errors[-2 * _EARLY_STOP_WINDOW : -_EARLY_STOP_WINDOW]))
                cur = float(np.mean(errors[-_EARLY_STOP_WINDOW:]))
                if prev > 0.0 and (prev - cur) / prev < cfg.rel_tol:
                    done = True
                    break
    return TrainReport(
        error_curve=curve,
        final_full_error=dataset_error(model, x),
        wall_time=time.perf_counter() - start,
    )


def train_shallow(
    x, dims: tuple[int, int], cfg: TrainConfig, observer: Observer | None = None
) -> tuple[LrnnModel, TrainReport]:
    """Train a single encode/decode pair (dims V -> H, decoding back to V)."""
    v, h = int(dims[0]), int(dims[1])
    model = init_weights([v, h], cfg.seed)
    report = _train_minibatch(x, model, cfg, observer)
    return model, report


def train_joint(
    x, encode_dims: Sequence[int], cfg: TrainConfig, observer: Observer | None = None
) -> tuple[LrnnModel, TrainReport]:
    """Train all layers together, minibatch by minibatch.

    Per batch the layers are visited front to back; each pair update feeds
    its clamped activations to the next.  With a single hidden layer this
    reduces to exactly the shallow procedure.
    """
    model = init_weights(encode_dims, cfg.seed)
    report = _train_minibatch(x, model, cfg, observer)
    return model, report


def train_greedy(
    x, encode_dims: Sequence[int], cfg: TrainConfig, observer: Observer | None = None
) -> tuple[LrnnModel, TrainReport]:
    """Layer-wise training: stage m fits (W_m, mirrored decode) as a shallow
    autoencoder on the previous stage's encoded output.

    Stage m uses ``cfg.seed + m - 1`` for its weight draws, so a run can be
    reproduced by chaining :func:`train_shallow` calls by hand.  The error
    curve concatenates the stages with a continuing iteration index.
    """
    dims = [int(d) for d in encode_dims]
    if len(dims) < 2:
        raise ValueError(f"encode dims need >= 2 entries, got {encode_dims}")
    start = time.perf_counter()
    x_stage = as_matrix(x, "x")
    depth = len(dims) - 1
    encode: list[np.ndarray] = []
    decode: list[np.ndarray | None] = [None] * depth
    curve: list[tuple[int, float]] = []
    for m in range(depth):
        stage_cfg = replace(cfg, seed=cfg.seed + m)
        offset = len(curve)
        stage_observer = None
        if observer is not None:
            stage_observer = lambda i, e, mod, _off=offset: observer(_off + i, e, mod)
        stage, stage_report = train_shallow(
            x_stage, (dims[m], dims[m + 1]), stage_cfg, stage_observer
        )
        encode.append(stage.encode_weights[0])
        decode[depth - 1 - m] = stage.decode_weights[0]
        curve.extend((offset + i, e) for i, e in stage_report.error_curve)
        if m != depth - 1:
            x_stage = clamp_unit(x_stage @ stage.encode_weights[0])
    model = LrnnModel(encode, decode)
    report = TrainReport(
        error_curve=curve,
        final_full_error=dataset_error(model, as_matrix(x, "x")),
        wall_time=time.perf_counter() - start,
    )
    return model, report
