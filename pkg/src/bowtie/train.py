"""Mini-batch training, evaluation, metrics, and binary checkpoints.

Epochs reshuffle with a seed derived from (data_seed, epoch) and every batch
gets its own dropout stream, so a run is a pure function of its seeds.  The
ragged final batch is trained like any other.
"""

from __future__ import annotations

import json
import struct
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .encode import ENCODING_KINDS, EncodedDataset
from .errors import CheckpointError, DivergenceError, FingerprintError
from .net import BowTieModel, ModelConfig, backward, forward
from .optim import OptimizerSpec, apply_update, init_state
from .rngseed import derive_rng, mix_seed

CHECKPOINT_MAGIC = b"BOWTIECK"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    batch_size: int = 512
    max_epochs: int = 20
    target_accuracy: float | None = None  # stop once val accuracy reaches this
    data_seed: int = 0
    dropout_seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.target_accuracy is not None and not 0.0 < self.target_accuracy <= 1.0:
            raise ValueError("target_accuracy must lie in (0, 1]")


@dataclass
class EpochMetrics:
    epoch: int
    train_bce: float
    train_accuracy: float
    val_bce: float
    val_accuracy: float
    epoch_seconds: float

    def line(self) -> str:
        return (
            f"epoch={self.epoch}"
            f" train_bce={self.train_bce:.6f}"
            f" train_acc={self.train_accuracy:.6f}"
            f" val_bce={self.val_bce:.6f}"
            f" val_acc={self.val_accuracy:.6f}"
            f" seconds={self.epoch_seconds:.3f}"
        )


@dataclass
class EvalResult:
    bce: float
    accuracy: float
    count: int
    true_pos: int = 0
    true_neg: int = 0
    false_pos: int = 0
    false_neg: int = 0


def evaluate(
    model: BowTieModel,
    dataset: EncodedDataset,
    batch_size: int = 512,
) -> EvalResult:
    """Inference-mode mean bce, accuracy, and confusion counts."""
    if not dataset.examples:
        raise ValueError("cannot evaluate on an empty dataset")
    x = dataset.to_csr()
    y = dataset.labels()
    n = len(y)
    delta = model.config.discriminator
    bce_sum = 0.0
    tp = tn = fp = fn = 0
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        cache = forward(model, x[start:stop], training=False)
        p = cache.prob
        yb = y[start:stop] == 1.0
        bce_sum -= float(np.sum(yb * np.log(p) + (~yb) * np.log1p(-p)))
        predicted = p >= delta
        tp += int(np.sum(predicted & yb))
        tn += int(np.sum(~predicted & ~yb))
        fp += int(np.sum(predicted & ~yb))
        fn += int(np.sum(~predicted & yb))
    return EvalResult(
        bce=bce_sum / n,
        accuracy=(tp + tn) / n,
        count=n,
        true_pos=tp,
        true_neg=tn,
        false_pos=fp,
        false_neg=fn,
    )


def train(
    model: BowTieModel,
    train_data: EncodedDataset,
    val_data: EncodedDataset | None,
    config: TrainConfig,
    log=None,
) -> tuple[BowTieModel, list[EpochMetrics]]:
    """Optimize the model in place; one EpochMetrics per completed epoch.

    Writes a key=value line per epoch to ``log`` (default stderr; pass False
    to silence).  Stops early the first time validation accuracy reaches
    config.target_accuracy.
    """
    if log is None:
        log = sys.stderr
    if not train_data.examples:
        raise ValueError("cannot train on an empty dataset")
    if config.batch_size > len(train_data.examples):
        raise ValueError(
            f"batch_size {config.batch_size} exceeds the "
            f"{len(train_data.examples)}-example training set"
        )
    if train_data.width != model.config.input_width:
        raise ValueError(
            f"dataset width {train_data.width} != "
            f"model input width {model.config.input_width}"
        )
    x = train_data.to_csr()
    y = train_data.labels()
    n = len(y)
    state = init_state(model)
    metrics: list[EpochMetrics] = []
    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        perm = derive_rng(config.data_seed, epoch).permutation(n)
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            rows = perm[start : start + config.batch_size]
            seed = mix_seed(config.dropout_seed, epoch, batch_index)
            try:
                cache = forward(model, x[rows], training=True, dropout_seed=seed)
                grads = backward(model, cache, y[rows])
                apply_update(config.optimizer, state, model, grads)
            except DivergenceError as exc:
                raise DivergenceError(
                    f"epoch {epoch} batch {batch_index}: {exc}"
                ) from exc
        train_eval = evaluate(model, train_data, config.batch_size)
        if val_data is not None:
            val_eval = evaluate(model, val_data, config.batch_size)
        else:
            val_eval = EvalResult(bce=float("nan"), accuracy=float("nan"), count=0)
        entry = EpochMetrics(
            epoch=epoch,
            train_bce=train_eval.bce,
            train_accuracy=train_eval.accuracy,
            val_bce=val_eval.bce,
            val_accuracy=val_eval.accuracy,
            epoch_seconds=time.perf_counter() - started,
        )
        metrics.append(entry)
        if log:
            print(entry.line(), file=log)
        if (
            config.target_accuracy is not None
            and val_data is not None
            and entry.val_accuracy >= config.target_accuracy
        ):
            break
    return model, metrics


def emit_metrics_csv(metrics: list[EpochMetrics], out) -> None:
    """Write metrics as CSV (6 significant digits) to a file object or path."""
    close = False
    if isinstance(out, (str, bytes)):
        out = open(out, "w", encoding="utf-8")
        close = True
    try:
        out.write("epoch,train_bce,train_acc,val_bce,val_acc,seconds\n")
        for m in metrics:
            out.write(
                f"{m.epoch},{m.train_bce:.6g},{m.train_accuracy:.6g},"
                f"{m.val_bce:.6g},{m.val_accuracy:.6g},{m.epoch_seconds:.6g}\n"
            )
    finally:
        if close:
            out.close()


@dataclass
class Checkpoint:
    model: BowTieModel
    vocab_size: int
    vocab_sha256: str
    encoding: str
    provenance: dict


def save_checkpoint(
    path: str,
    model: BowTieModel,
    vocab_size: int,
    vocab_sha256: str,
    encoding: str,
    provenance: dict | None = None,
) -> None:
    """Binary layout: magic, uint32 version, uint64 manifest length, JSON
    manifest, then every weight and bias as little-endian float64, C order,
    weights first, layer by layer.  Round-trips bit for bit.
    """
    if encoding not in ENCODING_KINDS:
        raise ValueError(f"encoding must be one of {ENCODING_KINDS}")
    cfg = asdict(model.config)
    cfg["hidden_widths"] = list(cfg["hidden_widths"])
    manifest = {
        "config": cfg,
        "weights_shapes": [list(w.shape) for w in model.weights],
        "biases_shapes": [list(b.shape) for b in model.biases],
        "vocab": {"size": int(vocab_size), "sha256": vocab_sha256},
        "encoding": encoding,
        "provenance": provenance or {},
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for w in model.weights:
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        for b in model.biases:
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc
    header = len(CHECKPOINT_MAGIC) + 4 + 8
    if len(raw) < header:
        raise CheckpointError(f"{path}: truncated (only {len(raw)} bytes)")
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    (version,) = struct.unpack_from("<I", raw, len(CHECKPOINT_MAGIC))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    (manifest_len,) = struct.unpack_from("<Q", raw, len(CHECKPOINT_MAGIC) + 4)
    if header + manifest_len > len(raw):
        raise CheckpointError(f"{path}: manifest overruns the file")
    try:
        manifest = json.loads(raw[header : header + manifest_len])
    except ValueError as exc:
        raise CheckpointError(f"{path}: manifest is not valid JSON: {exc}") from exc
    try:
        cfg_dict = dict(manifest["config"])
        cfg_dict["hidden_widths"] = tuple(cfg_dict["hidden_widths"])
        config = ModelConfig(**cfg_dict)
        w_shapes = [tuple(s) for s in manifest["weights_shapes"]]
        b_shapes = [tuple(s) for s in manifest["biases_shapes"]]
        vocab = manifest["vocab"]
        vocab_size = int(vocab["size"])
        vocab_sha256 = str(vocab["sha256"])
        encoding = manifest["encoding"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed manifest: {exc}") from exc
    if encoding not in ENCODING_KINDS:
        raise CheckpointError(f"{path}: unknown encoding {encoding!r}")
    want = sum(int(np.prod(s)) for s in w_shapes) + sum(
        int(np.prod(s)) for s in b_shapes
    )
    blob = raw[header + manifest_len :]
    if len(blob) != want * 8:
        raise CheckpointError(
            f"{path}: parameter blob is {len(blob)} bytes, expected {want * 8}"
        )
    flat = np.frombuffer(blob, dtype="<f8")
    weights, biases = [], []
    offset = 0
    for shape in w_shapes:
        count = int(np.prod(shape))
        weights.append(flat[offset : offset + count].reshape(shape).copy())
        offset += count
    for shape in b_shapes:
        count = int(np.prod(shape))
        biases.append(flat[offset : offset + count].reshape(shape).copy())
        offset += count
    model = BowTieModel(config=config, weights=weights, biases=biases)
    return Checkpoint(
        model=model,
        vocab_size=vocab_size,
        vocab_sha256=vocab_sha256,
        encoding=encoding,
        provenance=dict(manifest.get("provenance", {})),
    )


def check_fingerprint(checkpoint: Checkpoint, vocab_size: int, vocab_sha256: str) -> None:
    """Refuse to pair a checkpoint with a vocabulary it was not trained on."""
    if checkpoint.vocab_size != vocab_size:
        raise FingerprintError(
            f"checkpoint vocabulary size {checkpoint.vocab_size} "
            f"!= dataset vocabulary size {vocab_size}"
        )
    if checkpoint.vocab_sha256 != vocab_sha256:
        raise FingerprintError(
            "checkpoint vocabulary sha256 does not match the dataset vocabulary"
        )
