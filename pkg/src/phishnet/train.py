"""Mini-batch training with seeded shuffling, early stopping on validation
loss, best-epoch weight restoration, and output-layer-reset fine-tuning."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import (
    DEFAULT_LOSS_EPS,
    EncodedBatch,
    ModelConfig,
    ModelParams,
    bce_loss,
    forward,
    init_params,
    loss_and_grads,
)
from .optim import AdamState, adam_step, init_adam


@dataclass
class TrainConfig:
    batch_size: int = 20
    max_epochs: int = 20
    early_stopping_patience: int = 3
    seed: int = 0
    loss_clamp_epsilon: float = DEFAULT_LOSS_EPS
    learning_rate: float = 0.0015
    weight_classes: bool = False  # off by default; the corpus imbalance is intentional

    def __post_init__(self):
        if self.batch_size < 1:
            raise DataError("batch_size must be at least 1")
        if self.early_stopping_patience < 1:
            raise DataError("early_stopping_patience must be at least 1")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochStats]
    best_epoch: int


def _slice_batch(data: EncodedBatch, idx: np.ndarray) -> EncodedBatch:
    return EncodedBatch(
        url_ids=None if data.url_ids is None else data.url_ids[idx],
        html_ids=None if data.html_ids is None else data.html_ids[idx],
        labels=None if data.labels is None else data.labels[idx],
    )


def _accuracy(probs: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    predicted = probs > threshold
    return float(np.mean(predicted == (labels > 0.5)))


def evaluate(params: ModelParams, config: ModelConfig, data: EncodedBatch,
             eps: float = DEFAULT_LOSS_EPS, batch_size: int = 256) -> tuple[float, float]:
    """Loss and accuracy over a dataset, streamed in inference batches."""
    if data.labels is None:
        raise DataError("evaluation data carries no labels")
    n = data.size
    probs = np.empty(n, dtype=np.float64)
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        probs[idx] = forward(params, config, _slice_batch(data, idx))
    return bce_loss(probs, data.labels, eps=eps), _accuracy(probs, data.labels)


def _class_weights(labels: np.ndarray) -> np.ndarray:
    n = labels.shape[0]
    pos = float(labels.sum())
    neg = n - pos
    if pos == 0 or neg == 0:
        return np.ones(n, dtype=np.float64)
    w_pos, w_neg = n / (2.0 * pos), n / (2.0 * neg)
    return np.where(labels > 0.5, w_pos, w_neg)


def _fit(
    params: ModelParams,
    config: ModelConfig,
    tcfg: TrainConfig,
    train_data: EncodedBatch,
    val_data: EncodedBatch,
    rng: np.random.Generator,
) -> TrainResult:
    if train_data.labels is None or val_data.labels is None:
        raise DataError("training and validation data must carry labels")
    if val_data.size == 0:
        raise DataError("early stopping needs a non-empty validation set")
    state: AdamState = init_adam(params, lr=tcfg.learning_rate)
    weights_all = _class_weights(train_data.labels) if tcfg.weight_classes else None
    n = train_data.size
    history: list[EpochStats] = []
    best_loss = np.inf
    best_epoch = 0
    best_params = params.copy()
    stall = 0
    for epoch in range(1, tcfg.max_epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0.0
        for start in range(0, n, tcfg.batch_size):
            idx = order[start:start + tcfg.batch_size]
            batch = _slice_batch(train_data, idx)
            sw = None if weights_all is None else weights_all[idx]
            loss, probs, grads = loss_and_grads(
                params, config, batch, batch.labels,
                eps=tcfg.loss_clamp_epsilon, sample_weights=sw,
            )
            adam_step(params, grads, state)
            loss_sum += loss * idx.size
            correct += np.sum((probs > 0.5) == (batch.labels > 0.5))
        val_loss, val_acc = evaluate(params, config, val_data, eps=tcfg.loss_clamp_epsilon)
        stats = EpochStats(
            epoch=epoch,
            train_loss=loss_sum / n,
            train_acc=correct / n,
            val_loss=val_loss,
            val_acc=val_acc,
        )
        history.append(stats)
        if val_loss < best_loss:
            best_loss = val_loss
            best_epoch = epoch
            best_params = params.copy()
            stall = 0
        else:
            stall += 1
            if stall >= tcfg.early_stopping_patience:
                break
    return TrainResult(params=best_params, history=history, best_epoch=best_epoch)


def train(
    config: ModelConfig,
    tcfg: TrainConfig,
    train_data: EncodedBatch,
    val_data: EncodedBatch,
    url_vocab_size: int,
    html_vocab_size: int,
    dtype=np.float32,
) -> TrainResult:
    """Train from scratch; returns the best-validation-loss parameters.

    Deterministic for a given seed: initialization and every epoch's batch
    order are drawn from one seeded generator, and batches reduce by mean in
    fixed index order.
    """
    if train_data.size == 0:
        raise DataError("empty training set")
    rng = np.random.default_rng(tcfg.seed)
    params = init_params(
        config, url_vocab_size, html_vocab_size,
        seed=int(rng.integers(2**32)), dtype=dtype,
    )
    return _fit(params, config, tcfg, train_data, val_data, rng)


def reset_output_layer(params: ModelParams, seed: int) -> ModelParams:
    """Fresh copy with the output affine map re-initialized, all else kept."""
    rng = np.random.default_rng(seed)
    out = params.copy()
    w = out.tensors["out.weight"]
    bound = float(np.sqrt(6.0 / (w.shape[0] + 1)))
    out.tensors["out.weight"] = rng.uniform(-bound, bound, size=w.shape).astype(w.dtype)
    out.tensors["out.bias"] = np.zeros_like(out.tensors["out.bias"])
    return out


def fine_tune(
    params: ModelParams,
    config: ModelConfig,
    tcfg: TrainConfig,
    new_train: EncodedBatch,
    new_val: EncodedBatch,
) -> TrainResult:
    """Transfer all layers but the output one, then retrain everything.

    The donor's output weight vector and bias are replaced by a fresh
    initialization; every other tensor is carried over bitwise before the
    first optimizer step. Vocabularies must be the donor checkpoint's, so
    the embedding tables still line up with the encoded ids.
    """
    if new_train.size == 0:
        raise DataError("empty fine-tuning set")
    for branch in config.branches:
        embed = params.tensors.get(f"{branch}.embed")
        ids = new_train.ids_for(branch)
        if embed is None:
            raise DataError(f"donor parameters lack the {branch} branch")
        if int(ids.max(initial=0)) >= embed.shape[0]:
            raise DataError(
                f"{branch} ids exceed the donor vocabulary ({embed.shape[0]} rows); "
                "fine-tuning must reuse the donor checkpoint's vocabularies"
            )
    rng = np.random.default_rng(tcfg.seed)
    fresh = reset_output_layer(params, seed=int(rng.integers(2**32)))
    return _fit(fresh, config, tcfg, new_train, new_val, rng)


def write_history_csv(history: list[EpochStats], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for row in history:
            writer.writerow([row.epoch, repr(row.train_loss), repr(row.train_acc),
                             repr(row.val_loss), repr(row.val_acc)])
