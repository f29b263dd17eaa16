"""Minibatch momentum SGD, evaluation and attention extraction."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..corpus import LABELS
from ..errors import EmptySelection, NumericError, TrainingDiverged
from ..maps import AttentionMap
from .network import ModelParams, loss_and_gradients, make_batch, predict

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    clip_norm: float | None = 5.0


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    dev_accuracy: float | None
    dev_macro_f1: float | None


def _batches(pairs, size, order):
    for start in range(0, len(order), size):
        yield [pairs[i] for i in order[start:start + size]]


def macro_f1(gold, pred, n_classes=len(LABELS)) -> float:
    scores = []
    for k in range(n_classes):
        tp = np.sum((pred == k) & (gold == k))
        fp = np.sum((pred == k) & (gold != k))
        fn = np.sum((pred != k) & (gold == k))
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
    return float(np.mean(scores))


def classify(params: ModelParams, dataset, batch_size=64):
    """Gold and predicted label indices over ``dataset``."""
    gold, pred = [], []
    pairs = list(dataset)
    for chunk in _batches(pairs, batch_size, range(len(pairs))):
        batch = make_batch(chunk, params.vocab)
        probs, _, _ = predict(params, batch)
        gold.append(batch.labels)
        pred.append(probs.argmax(axis=1))
    return np.concatenate(gold), np.concatenate(pred)


def accuracy(params: ModelParams, dataset, batch_size=64) -> float:
    gold, pred = classify(params, dataset, batch_size)
    return float(np.mean(gold == pred))


def train(params: ModelParams, train_set, dev_set=None, config: TrainConfig = TrainConfig()):
    """Train a copy of ``params``; returns ``(trained, [EpochLog, ...])``.

    Shuffling uses a generator seeded by ``config.seed`` and batch
    gradients are reduced in a fixed order, so identical inputs give
    bitwise-identical runs.
    """
    pairs = list(train_set)
    if not pairs:
        raise EmptySelection("empty training set")
    if dev_set is not None and len(dev_set) == 0:
        raise EmptySelection("empty dev set")
    params = params.copy()
    rng = np.random.default_rng(config.seed)
    velocity = {k: np.zeros_like(v) for k, v in params.tensors.items()}
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(pairs))
        total = 0.0
        for chunk in _batches(pairs, config.batch_size, order):
            batch = make_batch(chunk, params.vocab)
            try:
                value, grads = loss_and_gradients(params, batch)
            except NumericError as exc:
                raise TrainingDiverged(f"epoch {epoch}: {exc}", epoch) from exc
            if not math.isfinite(value):
                raise TrainingDiverged(f"epoch {epoch}: loss is {value}", epoch)
            total += value * len(batch)
            if config.clip_norm is not None:
                norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                if norm > config.clip_norm:
                    scale = config.clip_norm / norm
                    grads = {k: g * scale for k, g in grads.items()}
            for name, g in grads.items():
                v = velocity[name]
                v *= config.momentum
                v -= config.lr * g
                params.tensors[name] += v
        train_loss = total / len(pairs)
        if not math.isfinite(train_loss):
            raise TrainingDiverged(f"epoch {epoch}: loss is {train_loss}", epoch)
        acc = f1 = None
        if dev_set is not None:
            gold, pred = classify(params, dev_set)
            acc, f1 = float(np.mean(gold == pred)), macro_f1(gold, pred)
        entry = EpochLog(epoch, train_loss, acc, f1)
        log.info("epoch %d loss %.5f dev_acc %s dev_f1 %s", epoch, train_loss, acc, f1)
        history.append(entry)
    return params, history


def extract_attention(params: ModelParams, dataset, batch_size=64):
    """Yield one :class:`AttentionMap` of model softmax weights per pair, in order."""
    pairs = list(dataset)
    for chunk in _batches(pairs, batch_size, range(len(pairs))):
        batch = make_batch(chunk, params.vocab)
        _, ap, ah = predict(params, batch)
        for pid, a, b in zip(batch.pair_ids, ap, ah):
            yield AttentionMap(pid, a, b)
