"""Mini-batch Adam training with seeded shuffling and dropout."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NumericError, TrainingDivergedError
from . import ops
from .model import ForwardCache, NetworkParams, NetworkSpec, backward, forward, init_params, predict
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 200
    batch: int = 1024
    seed: int = 0
    # Stop after this many epochs without a better validation accuracy (None: never).
    patience: int | None = None
    # Examples per forward/backward chunk inside a batch; bounds peak memory only.
    micro_batch: int = 256

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 0 or self.batch < 1 or self.micro_batch < 1:
            raise ConfigError(f"invalid training config {self}")
        if self.patience is not None and self.patience < 1:
            raise ConfigError("patience must be at least 1")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float | None = None


@dataclass
class TrainResult:
    params: NetworkParams
    history: list[EpochMetrics] = field(default_factory=list)
    best_epoch: int | None = None


def batch_masks(spec: NetworkSpec, n: int, rng: np.random.Generator) -> list:
    """Inverted-dropout multipliers for ``n`` examples, one entry per layer (None without dropout)."""
    shapes = spec.layer_output_shapes()
    out = []
    for layer, shape in zip(spec.layers, shapes):
        out.append(ops.dropout_mask((n, *shape), layer.dropout, rng) if layer.dropout > 0 else None)
    return out


def accuracy(spec: NetworkSpec, params: NetworkParams, inputs, labels) -> float:
    if len(labels) == 0:
        return float("nan")
    return float(np.mean(np.argmax(predict(spec, params, inputs), axis=1) == labels))


def train(spec: NetworkSpec, inputs: np.ndarray, labels: np.ndarray, cfg: TrainConfig,
          val_inputs: np.ndarray | None = None, val_labels: np.ndarray | None = None,
          init: NetworkParams | None = None) -> TrainResult:
    """Train ``spec`` on ``[N, H, W]`` inputs with integer labels.

    Gradients are averaged over each batch (the last one may be partial).
    With validation data and ``cfg.patience`` set, training stops early and the
    parameters of the best validation epoch are returned.
    """
    inputs = np.asarray(inputs)
    labels = np.asarray(labels, dtype=np.int64)
    if len(inputs) == 0:
        raise ConfigError("cannot train on an empty dataset")
    if len(inputs) != len(labels):
        raise ConfigError("inputs and labels differ in length")
    params = init.copy() if init is not None else init_params(spec, cfg.seed)
    result = TrainResult(params)
    if cfg.epochs == 0:
        return result
    has_val = val_inputs is not None and val_labels is not None and len(val_labels) > 0
    rng = np.random.default_rng([cfg.seed, 1])
    state = AdamState.for_params(params, lr=cfg.lr)
    best_acc, best_params, stale = -1.0, None, 0
    n = len(inputs)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for b, start in enumerate(range(0, n, cfg.batch)):
            idx = order[start:start + cfg.batch]
            grads_sum: dict[str, np.ndarray] = {}
            # Masks for the whole batch up front, so chunking never changes the draws.
            masks = batch_masks(spec, idx.size, rng)
            try:
                for m0 in range(0, idx.size, cfg.micro_batch):
                    sub = idx[m0:m0 + cfg.micro_batch]
                    cache = ForwardCache()
                    sub_masks = [None if m is None else m[m0:m0 + cfg.micro_batch] for m in masks]
                    probs = forward(spec, params, inputs[sub], train=True, cache=cache, masks=sub_masks)
                    loss, grads = backward(spec, params, cache, labels[sub])
                    loss_sum += loss
                    correct += int(np.sum(np.argmax(probs, axis=1) == labels[sub]))
                    for k, g in grads.items():
                        if k in grads_sum:
                            grads_sum[k] += g
                        else:
                            grads_sum[k] = g
                if not np.isfinite(loss_sum):
                    raise NumericError("non-finite training loss")
                for g in grads_sum.values():
                    g /= idx.size
                adam_step(params.tensors, grads_sum, state)
            except NumericError as exc:
                raise TrainingDivergedError(f"training diverged at epoch {epoch}, batch {b}: {exc}",
                                            epoch=epoch, batch=b) from exc
        metrics = EpochMetrics(epoch, loss_sum / n, correct / n)
        if has_val:
            metrics.val_accuracy = accuracy(spec, params, val_inputs, val_labels)
        result.history.append(metrics)
        log.info("epoch %d loss %.4f acc %.4f val %s", epoch, metrics.train_loss,
                 metrics.train_accuracy, metrics.val_accuracy)
        if has_val and cfg.patience is not None:
            if metrics.val_accuracy > best_acc:
                best_acc, best_params, stale = metrics.val_accuracy, params.copy(), 0
                result.best_epoch = epoch
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    if best_params is not None:
        params = best_params
    result.params = params
    return result
