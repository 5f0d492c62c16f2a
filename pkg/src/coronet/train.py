"""Loss, gradients, Adam, and the mini-batch training / fine-tuning loop."""

from __future__ import annotations

import copy
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import layers as L
from .errors import InputError, ParseError
from .graph import BACKBONE, ComputeGraph, ParameterStore

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


def _check_labels(labels, n_rows, n_classes):
    labels = np.asarray(labels)
    if labels.shape != (n_rows,):
        raise InputError(f"expected {n_rows} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InputError(f"labels must lie in [0, {n_classes})")
    return labels.astype(np.int64)


def cross_entropy_loss(probs, labels) -> float:
    """Mean of -ln p[i, label_i] with probabilities clamped to >= 1e-12."""
    probs = np.asarray(probs)
    labels = _check_labels(labels, probs.shape[0], probs.shape[1])
    if probs.shape[0] == 0:
        raise InputError("cross-entropy of an empty batch")
    picked = probs[np.arange(len(labels)), labels].astype(np.float64)
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())


def cross_entropy_grad(probs, labels):
    """d(mean CE)/d(probs); zero where the clamp is active."""
    labels = _check_labels(labels, probs.shape[0], probs.shape[1])
    n = probs.shape[0]
    grad = np.zeros_like(probs)
    rows = np.arange(n)
    p = probs[rows, labels]
    grad[rows, labels] = np.where(p > PROB_FLOOR, -1.0 / (n * np.maximum(p, PROB_FLOOR)), 0)
    return grad


def softmax_cross_entropy_grad(probs, labels):
    """Gradient of mean CE w.r.t. the logits feeding a softmax: (q - onehot)/N."""
    labels = _check_labels(labels, probs.shape[0], probs.shape[1])
    n = probs.shape[0]
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1
    return grad / n


def backward_gradients(graph: ComputeGraph, params: ParameterStore, labels):
    """Gradients of mean cross-entropy for every trainable tensor.

    Uses the forward pass last recorded on ``graph``.  When the graph ends in
    a softmax the fused (q - onehot)/N gradient seeds the softmax input.
    """
    if graph._cache is None:
        graph.backward(params)  # raises StateError
    probs = graph._cache[0][graph.output]
    last = graph.nodes[-1]
    if isinstance(last.spec, L.Softmax):
        seed = softmax_cross_entropy_grad(probs, labels)
        return graph.backward(params, seeds={last.inputs[0]: seed})
    return graph.backward(params, grad_output=cross_entropy_grad(probs, labels))


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: ParameterStore, grads: dict):
    """One bias-corrected Adam update, applied in place to ``params``."""
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for key, g in grads.items():
        p = params.layer(key[0])[key[1]]
        if key not in state.m:
            state.m[key] = np.zeros_like(p.value)
            state.v[key] = np.zeros_like(p.value)
        m = state.m[key] = state.beta1 * state.m[key] + (1 - state.beta1) * g
        v = state.v[key] = state.beta2 * state.v[key] + (1 - state.beta2) * (g * g)
        step = state.lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        p.value = (p.value - step).astype(p.value.dtype, copy=False)
    return params, state


# ---------------------------------------------------------------------------
# training loop


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 10
    epochs: int = 80
    shuffle_each_epoch: bool = True
    rng_seed: int = 0
    freeze_backbone: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")
        if self.epochs < 0:
            raise InputError("epochs must be >= 0")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: Optional[float] = None
    val_acc: Optional[float] = None


HISTORY_COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


def evaluate(graph, params, x, y, batch_size=10):
    """(mean loss, accuracy) in inference mode."""
    probs = predict_proba(graph, params, x, batch_size)
    y = np.asarray(y)
    return cross_entropy_loss(probs, y), float((probs.argmax(axis=1) == y).mean())


def predict_proba(graph, params, x, batch_size=10):
    chunks = [graph.forward(params, x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
    return np.concatenate(chunks) if chunks else np.zeros((0,) + graph.shape_of(graph.output))


@dataclass
class FitResult:
    params: ParameterStore
    history: list[EpochRecord]
    optimizer: AdamState


def fit(graph: ComputeGraph, params: ParameterStore, x, y, config: TrainConfig,
        validation=None) -> FitResult:
    """Mini-batch Adam on (x, y); ``params`` is copied, never modified.

    A short final batch is trained as-is.  Validation data is only used when
    passed explicitly as ``(x_val, y_val)``.
    """
    x = np.asarray(x)
    n = len(x)
    if n == 0:
        raise InputError("cannot fit on an empty dataset")
    y = _check_labels(y, n, graph.shape_of(graph.output)[-1])
    params = params.copy()
    opt = AdamState(lr=config.learning_rate)
    rng = np.random.default_rng(config.rng_seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if config.shuffle_each_epoch else np.arange(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch_seed = int(rng.integers(2**63))
            probs = graph.forward(params, x[idx], L.TRAIN, seed=batch_seed, record=True)
            loss_sum += cross_entropy_loss(probs, y[idx]) * len(idx)
            correct += int((probs.argmax(axis=1) == y[idx]).sum())
            grads = backward_gradients(graph, params, y[idx])
            graph.clear()
            adam_step(opt, params, grads)
        record = EpochRecord(epoch, loss_sum / n, correct / n)
        if validation is not None:
            record.val_loss, record.val_acc = evaluate(
                graph, params, validation[0], validation[1], config.batch_size)
        log.info("epoch %d: loss %.4f acc %.4f", epoch, record.train_loss, record.train_acc)
        history.append(record)
    return FitResult(params, history, opt)


def fine_tune(graph: ComputeGraph, params: ParameterStore, new_num_classes: int,
              config: TrainConfig):
    """Copy of (graph, params) with a fresh final dense layer of the new arity.

    With ``config.freeze_backbone`` every backbone layer becomes non-trainable.
    """
    if new_num_classes < 2:
        raise InputError("a classification head needs at least 2 classes")
    dense = [node for node in graph.nodes if isinstance(node.spec, L.Dense)]
    if not dense:
        raise InputError("graph has no dense classification head")
    graph = copy.deepcopy(graph)
    graph.clear()
    params = params.copy()
    head = dense[-1]
    graph.replace(head.name, L.Dense(head.spec.in_features, new_num_classes, head.spec.use_bias))
    params.drop_layer(head.name)
    graph.init_node(params, head.name, np.random.default_rng(config.rng_seed),
                    _store_dtype(params))
    if config.freeze_backbone:
        freeze_backbone(graph, params)
    return graph, params


def freeze_backbone(graph: ComputeGraph, params: ParameterStore):
    """Mark every backbone tensor non-trainable, in place."""
    for node in graph.nodes:
        if node.group == BACKBONE:
            for p in params.layer(node.name).values():
                p.trainable = False


def _store_dtype(params):
    for _, _, p in params:
        return p.value.dtype
    return np.float32


# ---------------------------------------------------------------------------
# history CSV


def _fmt(value):
    return "" if value is None else repr(float(value))


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for r in history:
            w.writerow([r.epoch, _fmt(r.train_loss), _fmt(r.train_acc),
                        _fmt(r.val_loss), _fmt(r.val_acc)])


def read_history_csv(path) -> list[EpochRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HISTORY_COLUMNS:
        raise ParseError(f"history CSV must start with header {','.join(HISTORY_COLUMNS)}", 1)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(HISTORY_COLUMNS):
            raise ParseError(f"expected {len(HISTORY_COLUMNS)} columns, got {len(row)}", lineno)
        try:
            vals = [float(c) if c != "" else None for c in row[1:]]
            rec = EpochRecord(int(row[0]), *vals)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if rec.train_loss is None or rec.train_acc is None or any(
                v is not None and not math.isfinite(v) for v in vals):
            raise ParseError("train_loss/train_acc must be finite numbers", lineno)
        out.append(rec)
    return out
