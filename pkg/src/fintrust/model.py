"""Fully-connected softmax classifier trained from scratch with Adam.

Weights are stored row-major as ``(out, in)`` matrices, so a batch ``X`` of
shape ``(n, in)`` maps to ``X @ W.T + b``.  Hidden layers use ReLU and the
output layer a numerically stable softmax.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dataset import (
    AgeGroup,
    ClientRecord,
    DemographicProfile,
    Education,
    Gender,
    StandardizationParams,
    derive_demographics,
    feature_matrix,
)
from .errors import DimensionError, NumericError, ParseError, SchemaError, ValidationError

logger = logging.getLogger(__name__)

LAYER_DIMS: tuple[int, ...] = (23, 10, 10, 10, 10, 2)
ACTIVATION = "relu-softmax"
MODEL_FORMAT = "fintrust.mlp/1"

PREDICTION_COLUMNS = (
    "id",
    "true_label",
    "predicted_label",
    "confidence",
    "gender",
    "education",
    "age_group",
)


@dataclass
class MlpModel:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self) -> None:
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        n_layers = len(self.layer_dims) - 1
        if n_layers < 1:
            raise DimensionError("a model needs at least an input and an output layer")
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise DimensionError(
                f"layer_dims {list(self.layer_dims)} imply {n_layers} weight layers, "
                f"got {len(self.weights)} weights and {len(self.biases)} biases"
            )
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_dims[i + 1], self.layer_dims[i])
            if w.shape != shape:
                raise DimensionError(f"layer {i}: weight shape {w.shape}, expected {shape}")
            if b.shape != (shape[0],):
                raise DimensionError(f"layer {i}: bias shape {b.shape}, expected {(shape[0],)}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericError(f"layer {i}: non-finite parameter")

    @property
    def n_inputs(self) -> int:
        return self.layer_dims[0]

    def parameters(self) -> list[np.ndarray]:
        """Flat view list: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    lr0: float = 1e-3
    decay: float = 0.96
    batch_size: int = 32
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValidationError(f"epochs must be at least 1, got {self.epochs}")
        if not self.lr0 > 0:
            raise ValidationError(f"lr0 must be positive, got {self.lr0}")
        if not 0 < self.decay <= 1:
            raise ValidationError(f"decay must lie in (0, 1], got {self.decay}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_epsilon > 0):
            raise ValidationError("Adam coefficients out of range")

    def learning_rate(self, epoch: int) -> float:
        return self.lr0 * self.decay**epoch


@dataclass(frozen=True)
class PredictionRecord:
    id: int
    true_label: int
    predicted_label: int
    confidence: float
    demographics: DemographicProfile

    @property
    def correct(self) -> bool:
        return self.true_label == self.predicted_label


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        params = model.parameters()
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


@dataclass
class EpochLog:
    epoch: int
    learning_rate: float
    loss: float
    accuracy: float


@dataclass
class TrainResult:
    model: MlpModel
    history: list[EpochLog] = field(default_factory=list)


# ---------------------------------------------------------------------------
# forward / backward


def init_model(seed: int, layer_dims: Sequence[int] = LAYER_DIMS) -> MlpModel:
    """Fan-balanced uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(tuple(layer_dims), weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def _forward_cache(model: MlpModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    activations = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        h = z if i == last else np.maximum(z, 0.0)
        activations.append(h)
    probs = softmax(h)
    if not np.all(np.isfinite(probs)):
        raise NumericError("non-finite value in forward pass")
    return activations, probs


def forward(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector or a ``(n, in)`` batch."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape[-1] != model.n_inputs:
        raise DimensionError(f"model expects {model.n_inputs} features, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite input features")
    single = x.ndim == 1
    _, probs = _forward_cache(model, np.atleast_2d(x))
    return probs[0] if single else probs


def loss_and_gradients(
    model: MlpModel, x: np.ndarray, y: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy over the batch and its exact gradients.

    Gradients are returned in :meth:`MlpModel.parameters` order.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    if n == 0:
        raise ValidationError("loss of an empty batch is undefined")
    activations, probs = _forward_cache(model, x)
    logits = activations[-1]
    # log-softmax computed from logits keeps the loss finite when p underflows
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), y].mean())

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads_w: list[np.ndarray] = []
    grads_b: list[np.ndarray] = []
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w.append(delta.T @ activations[i])
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ model.weights[i]) * (activations[i] > 0.0)
    grads = []
    for gw, gb in zip(reversed(grads_w), reversed(grads_b)):
        grads.extend((gw, gb))
    return loss, grads


def adam_step(
    model: MlpModel,
    state: AdamState,
    grads: Sequence[np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> None:
    """Apply one bias-corrected Adam update to ``model`` and ``state`` in place."""
    params = model.parameters()
    if len(grads) != len(params) or len(state.m) != len(params):
        raise DimensionError("gradient / optimizer state does not match model parameters")
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + epsilon)


def train(
    x: np.ndarray, y: np.ndarray, config: TrainConfig = TrainConfig()
) -> TrainResult:
    """Minibatch Adam with a per-epoch exponential learning-rate decay.

    ``x`` must already be standardized.  The history records full-pass train
    loss and accuracy after each epoch.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] == 0:
        raise ValidationError("training set is empty")
    init_seq, shuffle_seq = np.random.SeedSequence(config.seed).spawn(2)
    model = init_model(int(init_seq.generate_state(1)[0]), (x.shape[1], *LAYER_DIMS[1:]))
    rng = np.random.default_rng(shuffle_seq)
    state = AdamState.zeros_like(model)
    result = TrainResult(model)
    n = x.shape[0]
    for epoch in range(config.epochs):
        lr = config.learning_rate(epoch)
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            _, grads = loss_and_gradients(model, x[idx], y[idx])
            adam_step(
                model, state, grads, lr,
                config.adam_beta1, config.adam_beta2, config.adam_epsilon,
            )
        loss, _ = loss_and_gradients(model, x, y)
        accuracy = float(np.mean(predict_labels(forward(model, x)) == y))
        result.history.append(EpochLog(epoch, lr, loss, accuracy))
        logger.info("epoch %d lr=%.6g loss=%.6f acc=%.4f", epoch + 1, lr, loss, accuracy)
    return result


# ---------------------------------------------------------------------------
# prediction


def predict_labels(probs: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, so an exact tie goes to class 0
    return np.argmax(probs, axis=-1)


def predict_many(
    model: MlpModel, records: Sequence[ClientRecord], params: StandardizationParams
) -> list[PredictionRecord]:
    if not records:
        return []
    if model.n_inputs != len(params.mean):
        raise DimensionError(
            f"model expects {model.n_inputs} features but standardization has {len(params.mean)}"
        )
    raw = feature_matrix(records)
    if raw.shape[1] != model.n_inputs:
        raise DimensionError(f"model expects {model.n_inputs} features, got {raw.shape[1]}")
    probs = forward(model, params.apply(raw))
    pred = predict_labels(probs)
    return [
        PredictionRecord(
            r.id, r.label, int(k), float(p[k]), derive_demographics(r)
        )
        for r, p, k in zip(records, probs, pred)
    ]


def predict(
    model: MlpModel, record: ClientRecord, params: StandardizationParams
) -> PredictionRecord:
    return predict_many(model, [record], params)[0]


# ---------------------------------------------------------------------------
# persistence


def save_model(
    model: MlpModel,
    params: StandardizationParams,
    path: str | os.PathLike,
    config: TrainConfig | None = None,
    extra: dict | None = None,
) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "layer_dims": list(model.layer_dims),
        "activation": ACTIVATION,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "standardization": params.to_dict(),
        "train_config": asdict(config) if config is not None else None,
        "seed": config.seed if config is not None else None,
    }
    if extra:
        doc["extra"] = extra
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> tuple[MlpModel, StandardizationParams]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not a valid model file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise SchemaError(f"{path}: not a {MODEL_FORMAT} model file")
    if doc.get("activation") != ACTIVATION:
        raise SchemaError(f"{path}: unsupported activation {doc.get('activation')!r}")
    try:
        dims = [int(d) for d in doc["layer_dims"]]
        weights = [np.array(w, dtype=np.float64) for w in doc["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in doc["biases"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed model file ({exc})") from None
    if len(dims) != len(LAYER_DIMS):
        raise DimensionError(
            f"{path}: expected {len(LAYER_DIMS)} layer sizes {list(LAYER_DIMS)}, got {dims}"
        )
    for i, (got, want) in enumerate(zip(dims, LAYER_DIMS)):
        if got != want:
            raise DimensionError(f"{path}: layer {i} has width {got}, expected {want}")
    model = MlpModel(tuple(dims), weights, biases)
    params = StandardizationParams.from_dict(doc.get("standardization") or {})
    if len(params.mean) != model.n_inputs:
        raise DimensionError(
            f"{path}: standardization covers {len(params.mean)} features, model expects {model.n_inputs}"
        )
    return model, params


def write_predictions(path: str | os.PathLike, predictions: Iterable[PredictionRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for p in predictions:
            d = p.demographics
            writer.writerow([
                p.id,
                p.true_label,
                p.predicted_label,
                repr(float(p.confidence)),
                d.gender.value,
                d.education.value,
                d.age_group.value,
            ])


def read_predictions(
    path: str | os.PathLike, strict_confidence: bool = False
) -> list[PredictionRecord]:
    """Parse a predictions CSV.

    External files may carry any confidence in [0, 1]; ``strict_confidence``
    additionally enforces the argmax bound ``confidence >= 0.5``.
    """
    enums = {"gender": Gender, "education": Education, "age_group": AgeGroup}
    out = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: file is empty, expected a header row")
        header = [h.strip() for h in header]
        for column in PREDICTION_COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}")
        index = {c: header.index(c) for c in PREDICTION_COLUMNS}
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"line {line}: expected {len(header)} cells, got {len(row)}")
            cell = {c: row[i].strip() for c, i in index.items()}
            try:
                rid = int(cell["id"])
                true_label = int(cell["true_label"])
                predicted = int(cell["predicted_label"])
                confidence = float(cell["confidence"])
            except ValueError as exc:
                raise ParseError(f"line {line}: {exc}") from None
            for name, value in (("true_label", true_label), ("predicted_label", predicted)):
                if value not in (0, 1):
                    raise ValidationError(f"line {line}: {name} must be 0 or 1, got {value}")
            low = 0.5 if strict_confidence else 0.0
            if not low <= confidence <= 1.0:
                raise ValidationError(
                    f"line {line}: confidence {confidence!r} outside [{low:g}, 1]"
                )
            try:
                demo = DemographicProfile(*(enums[c](cell[c]) for c in enums))
            except ValueError as exc:
                raise ValidationError(f"line {line}: {exc}") from None
            out.append(PredictionRecord(rid, true_label, predicted, confidence, demo))
    return out
