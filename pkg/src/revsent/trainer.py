"""Adam fine-tuning with per-epoch decay, best-on-validation snapshots and grid runs."""

from __future__ import annotations

import copy
import csv
import io
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import encoder as enc
from .evaluation import RunReport, accuracy
from .tokenizer import EncodedBatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings for one fine-tuning run.

    ``decay`` is a per-epoch learning-rate decay: after epoch e (1-based) the
    rate becomes ``lr / (1 + decay * e)``. Set it to 0 to keep lr constant.
    """

    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 10
    decay: float = 1e-4
    seed: int = 0
    max_len: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: dict, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> tuple[dict, AdamState]:
    """One bias-corrected Adam update, applied in place and returned."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[name] -= (lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(params[name].dtype, copy=False)
    return params, state


def clip_by_global_norm(grads: dict, max_norm: float) -> float:
    norm = math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))
    if norm > max_norm:
        s = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= s
    return norm


@dataclass
class RunHistory:
    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)
    duration_s: float = 0.0
    best_epoch: int = 0  # 1-based

    @property
    def epochs(self) -> int:
        return len(self.val_acc)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_acc", "val_acc", "loss"])
        for i, (tr, va, lo) in enumerate(zip(self.train_acc, self.val_acc, self.loss), 1):
            w.writerow([i, f"{tr:.6f}", f"{va:.6f}", f"{lo:.6f}"])
        return buf.getvalue()


def best_epoch_index(val_acc: Sequence[float]) -> int:
    """0-based argmax; the earliest epoch wins ties."""
    return int(np.argmax(np.asarray(val_acc)))


def evaluate(params: dict, config: enc.EncoderConfig, data: EncodedBatch, batch_size: int = 64) -> float:
    return accuracy(enc.predict(params, config, data, batch_size), data.labels)


def fine_tune(
    params: dict,
    config: enc.EncoderConfig,
    train: EncodedBatch,
    validation: EncodedBatch,
    train_config: TrainConfig = TrainConfig(),
    *,
    rng: np.random.Generator | None = None,
    on_epoch: Callable[[int, RunHistory], None] | None = None,
) -> tuple[dict, RunHistory]:
    """Train ``params`` (updated in place) and return the best-validation snapshot.

    Each epoch shuffles the training rows, walks minibatches (the last one may
    be short), then measures accuracy on the full training and validation sets.
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    if train.labels is None or validation.labels is None:
        raise ValueError("training and validation batches need labels")
    tc = train_config
    rng = np.random.default_rng(tc.seed) if rng is None else rng
    state = AdamState.fresh(params, tc.beta1, tc.beta2, tc.eps)
    history = RunHistory()
    best, best_val = None, -1.0
    lr = tc.learning_rate
    n = len(train)

    start = time.perf_counter()
    for epoch in range(1, tc.epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        for s in range(0, n, tc.batch_size):
            idx = order[s : s + tc.batch_size]
            batch = train.subset(idx)
            loss, grads = enc.loss_and_grad(params, config, batch, batch.labels, train=True, rng=rng)
            if tc.clip_norm is not None:
                clip_by_global_norm(grads, tc.clip_norm)
            adam_step(params, grads, state, lr)
            total_loss += float(loss) * idx.size
        history.learning_rate.append(lr)
        lr = lr / (1.0 + tc.decay * epoch)
        history.loss.append(total_loss / n)
        history.train_acc.append(evaluate(params, config, train))
        history.val_acc.append(evaluate(params, config, validation))
        if history.val_acc[-1] > best_val:
            best_val = history.val_acc[-1]
            best = copy.deepcopy(params)
            history.best_epoch = epoch
        logger.info(
            "epoch %d/%d loss=%.4f train_acc=%.4f val_acc=%.4f",
            epoch, tc.epochs, history.loss[-1], history.train_acc[-1], history.val_acc[-1],
        )
        if on_epoch is not None:
            on_epoch(epoch, history)
    history.duration_s = time.perf_counter() - start
    return best, history


@dataclass
class GridCell:
    report: RunReport
    history: RunHistory | None = None
    best_params: dict | None = field(default=None, repr=False)


def grid_cells(learning_rates: Sequence[float], batch_sizes: Sequence[int], epoch_choices: Sequence[int]):
    """Grid enumeration order: epochs, then learning rate, then batch size."""
    return [(lr, bs, ep) for ep, lr, bs in itertools.product(epoch_choices, learning_rates, batch_sizes)]


def run_grid(
    config: enc.EncoderConfig,
    base: TrainConfig,
    learning_rates: Sequence[float],
    batch_sizes: Sequence[int],
    epoch_choices: Sequence[int],
    train: EncodedBatch,
    validation: EncodedBatch,
    test: EncodedBatch,
    *,
    init: dict | None = None,
    model_name: str = "encoder",
    labeling: str = "",
    jobs: int = 1,
    keep_params: bool = False,
) -> list[GridCell]:
    """Fine-tune once per grid cell, each from a fresh copy of the start weights."""
    cells = grid_cells(learning_rates, batch_sizes, epoch_choices)
    if not cells:
        raise ValueError("empty grid")

    def run(cell):
        lr, bs, ep = cell
        try:
            tc = replace(base, learning_rate=lr, batch_size=bs, epochs=ep)
            params = copy.deepcopy(init) if init is not None else enc.init_params(config, tc.seed)
            best, hist = fine_tune(params, config, train, validation, tc)
            test_acc = evaluate(best, config, test)
            report = RunReport(
                model=model_name,
                labeling=labeling,
                batch_size=bs,
                learning_rate=lr,
                epochs=ep,
                avg_train_acc=float(np.mean(hist.train_acc)),
                avg_val_acc=float(np.mean(hist.val_acc)),
                train_time_s=hist.duration_s,
                test_acc=test_acc,
            )
            return GridCell(report, hist, best if keep_params else None)
        except Exception as exc:  # one bad cell must not sink the grid
            logger.error("grid cell lr=%g bs=%d epochs=%d failed: %s", lr, bs, ep, exc)
            nan = float("nan")
            return GridCell(
                RunReport(model_name, labeling, bs, lr, ep, nan, nan, nan, nan, error=f"{type(exc).__name__}: {exc}")
            )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, cells))
    return [run(c) for c in cells]


def grid_search(*args, **kwargs) -> list[RunReport]:
    """Same arguments as :func:`run_grid`; returns only the report rows."""
    return [c.report for c in run_grid(*args, **kwargs)]
