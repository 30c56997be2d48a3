"""The BowTie network: a cascade of dense linear layers over sparse inputs.

Forward pass, binary cross-entropy with an L2 penalty, and hand-derived
backpropagation.  The first layer is a sparse-times-dense kernel so only the
nonzero input columns are ever touched; everything past it is small and
dense.  All arithmetic is 64-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import expit

from .encode import SparseExample
from .errors import DivergenceError
from .rngseed import derive_rng

PROB_CLAMP = 1e-12

ACTIVATIONS = ("none", "relu")


@dataclass
class ModelConfig:
    input_width: int
    hidden_widths: tuple[int, ...] = (16, 8, 1)  # includes the final width-1 layer
    activation: str = "none"
    dropout_rate: float = 0.2
    l2_weight: float = 0.019
    discriminator: float = 0.5
    init_seed: int = 0

    def __post_init__(self):
        self.hidden_widths = tuple(int(w) for w in self.hidden_widths)
        if not self.hidden_widths or self.hidden_widths[-1] != 1:
            raise ValueError("hidden_widths must end with the width-1 output layer")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("layer widths must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.l2_weight < 0.0:
            raise ValueError("l2_weight must be >= 0")
        if not 0.0 <= self.discriminator <= 1.0:
            raise ValueError("discriminator must lie in [0, 1]")


@dataclass
class BowTieModel:
    config: ModelConfig
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)

    @property
    def layer_count(self) -> int:
        return len(self.weights)

    def copy(self) -> "BowTieModel":
        return BowTieModel(
            config=self.config,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class ForwardCache:
    """Backpropagation intermediates for one batch."""

    inputs: sparse.csr_matrix
    pre: list[np.ndarray]   # pre-activation per layer, shape (B, out_l)
    post: list[np.ndarray]  # post-activation (and post-dropout where applied)
    dropout_mask: np.ndarray | None
    prob: np.ndarray        # (B,), clamped into (0, 1)
    training: bool


def init_model(config: ModelConfig) -> BowTieModel:
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = derive_rng(config.init_seed)
    widths = (config.input_width, *config.hidden_widths)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths, widths[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return BowTieModel(config=config, weights=weights, biases=biases)


def batch_matrix(batch, width: int) -> sparse.csr_matrix:
    """Assemble a batch into CSR; accepts a list of SparseExample or a ready matrix."""
    if sparse.issparse(batch):
        if batch.shape[1] != width:
            raise ValueError(f"batch width {batch.shape[1]} != input width {width}")
        return batch.tocsr()
    if not batch:
        raise ValueError("empty batch")
    indptr = np.zeros(len(batch) + 1, dtype=np.int64)
    for i, ex in enumerate(batch):
        if not isinstance(ex, SparseExample):
            raise TypeError(f"batch element {i} is not a SparseExample")
        if ex.width != width:
            raise ValueError(f"example width {ex.width} != input width {width}")
        indptr[i + 1] = indptr[i] + len(ex.indices)
    indices = (
        np.concatenate([ex.indices for ex in batch])
        if indptr[-1]
        else np.empty(0, dtype=np.int64)
    )
    data = (
        np.concatenate([ex.values for ex in batch])
        if indptr[-1]
        else np.empty(0, dtype=np.float64)
    )
    return sparse.csr_matrix((data, indices, indptr), shape=(len(batch), width))


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else z


def forward(
    model: BowTieModel,
    batch,
    training: bool = False,
    dropout_seed: int = 0,
) -> ForwardCache:
    """Run the cascade.  Layer 1 touches only nonzero input columns.

    In training mode the last hidden layer's output gets an inverted-dropout
    mask (keep probability 1 - rate, survivors scaled by 1/(1 - rate));
    inference applies no mask and no scaling.
    """
    cfg = model.config
    x = batch_matrix(batch, cfg.input_width)
    n_layers = model.layer_count
    pre: list[np.ndarray] = []
    post: list[np.ndarray] = []
    mask = None

    a = x
    for l in range(n_layers):
        # explosions surface as the explicit non-finite check, not as warnings
        with np.errstate(over="ignore", invalid="ignore"):
            z = a @ model.weights[l] + model.biases[l]
        z = np.asarray(z)
        pre.append(z)
        if l == n_layers - 1:
            post.append(z)
            break
        h = _activate(z, cfg.activation)
        if (
            training
            and cfg.dropout_rate > 0.0
            and l == n_layers - 2  # last hidden layer feeds the output layer
        ):
            keep = 1.0 - cfg.dropout_rate
            rng = derive_rng(dropout_seed)
            mask = (rng.random(h.shape) < keep).astype(np.float64) / keep
            h = h * mask
        post.append(h)
        a = h

    logits = pre[-1][:, 0]
    if not np.isfinite(logits).all():
        raise DivergenceError("non-finite activation in forward pass")
    prob = np.clip(expit(logits), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return ForwardCache(
        inputs=x, pre=pre, post=post, dropout_mask=mask, prob=prob, training=training
    )


def _check_labels(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64)
    if y.ndim != 1 or not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be a flat sequence of 0s and 1s")
    return y


def loss(cache: ForwardCache, labels, model: BowTieModel) -> tuple[float, float]:
    """(mean binary cross-entropy, bce + l2_weight * sum of squared weights)."""
    y = _check_labels(labels)
    if len(y) != len(cache.prob):
        raise ValueError(f"{len(y)} labels for a batch of {len(cache.prob)}")
    p = np.clip(cache.prob, PROB_CLAMP, 1.0 - PROB_CLAMP)
    bce = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
    penalty = model.config.l2_weight * sum(
        float((w * w).sum()) for w in model.weights
    )
    return bce, bce + penalty


def backward(model: BowTieModel, cache: ForwardCache, labels) -> Gradients:
    """Analytic gradient of the total loss (bce + L2) for every weight and bias."""
    cfg = model.config
    n_layers = model.layer_count
    if len(cache.pre) != n_layers or any(
        cache.pre[l].shape[1] != model.weights[l].shape[1] for l in range(n_layers)
    ):
        raise ValueError("cache does not match this model (stale cache?)")
    y = _check_labels(labels)
    batch = len(y)
    if batch != len(cache.prob):
        raise ValueError(f"{len(y)} labels for a batch of {len(cache.prob)}")

    d_weights: list[np.ndarray] = [np.empty(0)] * n_layers
    d_biases: list[np.ndarray] = [np.empty(0)] * n_layers
    # d(total)/d(logit) of the mean bce; clamped prob keeps it finite
    delta = ((cache.prob - y) / batch)[:, None]
    for l in range(n_layers - 1, -1, -1):
        upstream = cache.post[l - 1] if l > 0 else cache.inputs
        d_weights[l] = np.asarray(upstream.T @ delta) + 2.0 * cfg.l2_weight * model.weights[l]
        d_biases[l] = delta.sum(axis=0)
        if l == 0:
            break
        back = delta @ model.weights[l].T
        if cache.dropout_mask is not None and l - 1 == n_layers - 2:
            back = back * cache.dropout_mask
        if cfg.activation == "relu":
            back = back * (cache.pre[l - 1] > 0.0)
        delta = back
    return Gradients(weights=d_weights, biases=d_biases)


def predict(model: BowTieModel, example: SparseExample) -> tuple[float, int]:
    """Inference-mode probability and category (1 when p >= discriminator)."""
    cache = forward(model, [example], training=False)
    p = float(cache.prob[0])
    return p, int(p >= model.config.discriminator)


def central_difference(f, x: float, h: float) -> float:
    """(f(x+h) - f(x-h)) / 2h."""
    if h <= 0.0:
        raise ValueError("step h must be > 0")
    return (f(x + h) - f(x - h)) / (2.0 * h)


def finite_difference_grad(
    model: BowTieModel,
    batch,
    labels,
    coord: tuple[int, str, tuple[int, ...]],
    h: float,
    training: bool = False,
    dropout_seed: int = 0,
) -> float:
    """Central-difference d(total)/d(parameter) at one coordinate.

    ``coord`` is (layer, "W" or "b", index).  Dropout must be disabled or the
    mask frozen by passing the same training/dropout_seed pair the analytic
    gradient used.
    """
    layer, kind, index = coord
    if kind not in ("W", "b"):
        raise ValueError("coordinate kind must be 'W' or 'b'")

    def total_at(value: float) -> float:
        probe = model.copy()
        target = probe.weights[layer] if kind == "W" else probe.biases[layer]
        target[index] = value
        cache = forward(probe, batch, training=training, dropout_seed=dropout_seed)
        return loss(cache, labels, probe)[1]

    base = model.weights[layer] if kind == "W" else model.biases[layer]
    return central_difference(total_at, float(base[index]), h)
