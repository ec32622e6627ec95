"""Mini-batch Adam training, corpus prediction and dev-set threshold tuning."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .codec import apply_threshold, check_threshold, encode
from .corpus import Corpus
from .decoder import Diagnostics, decode_sentence
from .errors import ConfigError, TrainingError
from .metrics import filtered_score
from .model import MacModel, TrainConfig, Vocab, init_params
from .types import Entity, ProbGrid, tag_alphabet

log = logging.getLogger(__name__)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * np.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            params[k] -= scale * m / (np.sqrt(v) + self.eps)


@dataclass
class EpochLog:
    epoch: int
    loss: float
    dev_f1: float | None

    def line(self) -> str:
        dev = "n/a" if self.dev_f1 is None else f"{self.dev_f1:.6f}"
        return f"epoch {self.epoch} loss {self.loss:.6f} dev_f1 {dev}"


@dataclass
class TrainResult:
    model: MacModel
    log: list[EpochLog] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def best_dev_f1(self) -> float | None:
        return self.log[self.best_epoch - 1].dev_f1 if self.log else None


def predict_grids(model: MacModel, corpus: Corpus) -> list[tuple[ProbGrid, ProbGrid]]:
    return [model.predict_grids(s) for s in corpus.sentences]


def decode_grids(corpus: Corpus, grids, alphabet, threshold: float,
                 strict: bool = False, diagnostics: Diagnostics | None = None) -> list[list[Entity]]:
    out = []
    for sentence, (gs, ge) in zip(corpus.sentences, grids):
        out.append(decode_sentence(sentence, apply_threshold(gs, alphabet, threshold),
                                   apply_threshold(ge, alphabet, threshold), strict, diagnostics))
    return out


def predict(model: MacModel, corpus: Corpus, threshold: float | None = None,
            diagnostics: Diagnostics | None = None) -> list[list[Entity]]:
    threshold = model.threshold if threshold is None else threshold
    return decode_grids(corpus, predict_grids(model, corpus), model.alphabet, threshold, diagnostics=diagnostics)


def overall_f1(model: MacModel, corpus: Corpus, threshold: float | None = None) -> float:
    return filtered_score(predict(model, corpus, threshold), corpus.golds).counts.f1


def train(
    corpus: Corpus,
    config: TrainConfig,
    dev: Corpus | None = None,
    on_epoch: Callable[[EpochLog, MacModel], bool | None] | None = None,
) -> TrainResult:
    """Seeded mini-batch Adam; returns the parameters of the best dev-F1 epoch.

    Without a dev corpus the final epoch is returned. ``on_epoch(entry, model)`` sees
    each epoch's log entry and the model holding that epoch's parameters; a
    True return stops training early.
    """
    if not len(corpus):
        raise ConfigError("training corpus is empty")
    check_threshold(config.threshold)
    rng = np.random.default_rng(config.seed)
    alphabet = tag_alphabet(corpus.types)
    vocab = Vocab.build(corpus.sentences)
    model = MacModel(config, vocab, alphabet, init_params(config, len(vocab), alphabet, rng))
    targets = [encode(ex.sentence, ex.entities) for ex in corpus]
    opt = Adam(model.params, config.lr, config.beta1, config.beta2, config.eps_adam)
    result = TrainResult(model)
    best_f1 = -1.0
    best_params = None
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(corpus))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            grads = None
            for k in batch:
                loss, g = model.loss_and_grads(corpus.examples[k].sentence, *targets[k])
                if not np.isfinite(loss):
                    raise TrainingError("non-finite loss", epoch)
                total += loss
                if grads is None:
                    grads = g
                else:
                    for name in grads:
                        grads[name] += g[name]
            for name in grads:
                grads[name] /= len(batch)
            opt.step(model.params, grads)
        if not np.isfinite(total):
            raise TrainingError("non-finite loss", epoch)
        dev_f1 = overall_f1(model, dev, config.threshold) if dev is not None and len(dev) else None
        entry = EpochLog(epoch, total / len(corpus), dev_f1)
        result.log.append(entry)
        log.debug(entry.line())
        score = dev_f1 if dev_f1 is not None else 0.0
        if dev_f1 is None or score > best_f1:
            best_f1 = score
            best_params = {k: v.copy() for k, v in model.params.items()}
            result.best_epoch = epoch
        if on_epoch is not None and on_epoch(entry, model):
            break
    model.params = best_params
    return result


def tune_threshold(model: MacModel, dev: Corpus, grid: Sequence[float] | None = None) -> float:
    """Grid value with the best overall dev F1; ties go to the smaller value."""
    if not len(dev):
        raise ConfigError("threshold tuning needs a non-empty dev corpus")
    grid = sorted(check_threshold(t) for t in (grid or model.config.threshold_grid))
    if not grid:
        raise ConfigError("threshold grid is empty")
    grids = predict_grids(model, dev)
    golds = dev.golds
    best, best_f1 = grid[0], -1.0
    for t in grid:
        f1 = filtered_score(decode_grids(dev, grids, model.alphabet, t), golds).counts.f1
        if f1 > best_f1:
            best, best_f1 = t, f1
    return best
