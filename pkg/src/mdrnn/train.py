"""Online gradient descent with classical momentum and validation-based
model selection.

Weights update after every training sequence. One fixed seed drives layer
initialization order, epoch shuffling, and therefore the whole parameter
trajectory: single-threaded runs are bit-reproducible.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import ConfigError, DataError, MdrnnError, TrainingError
from .network import Network, checkpoint_bytes, network_backward, network_forward


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    momentum: float = 0.9
    max_epochs: int = 100
    patience: int = 20
    rng_seed: int = 0
    shuffle: bool = True
    grad_clip: float | None = None  # disabled unless set

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")


class MomentumState:
    """Velocity buffer congruent with the network's parameters."""

    def __init__(self, net):
        self.velocity = Network.zeros(net.config)


def sgd_step(net, grads, state, cfg):
    """v <- momentum*v - lr*g; w <- w + v, for every parameter array."""
    for (name, w), (_, g), (_, v) in zip(
            net.fields(), grads.fields(), state.velocity.fields()):
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name}")
        if cfg.grad_clip is not None:
            g = np.clip(g, -cfg.grad_clip, cfg.grad_clip)
        v *= cfg.momentum
        v -= cfg.learning_rate * g
        w += v


@dataclass
class EpochStats:
    mean_loss: float       # summed cross-entropy / total points
    pixel_error: float     # mislabeled points / total points, pre-update per sequence
    updates: int


def train_epoch(net, dataset, cfg, state, rng):
    """One pass over the training set: forward, backward, update per sequence."""
    if len(dataset) == 0:
        raise DataError("no training data")
    order = rng.permutation(len(dataset)) if cfg.shuffle else np.arange(len(dataset))
    total_loss = 0.0
    total_points = 0
    wrong = 0
    for idx in order:
        example = dataset[idx]
        try:
            fwd = network_forward(net, example.input)
            wrong += metrics.misclassified_points(fwd.probs, example.labels)
            grads, loss = network_backward(net, example.input, fwd, example.labels)
            sgd_step(net, grads, state, cfg)
        except MdrnnError as exc:
            raise exc.__class__(f"training sequence {int(idx)}: {exc}") from exc
        if not np.isfinite(loss):
            raise TrainingError(f"training sequence {int(idx)}: non-finite loss")
        total_loss += loss
        total_points += example.input.point_count
    return EpochStats(total_loss / total_points, wrong / total_points, len(order))


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_pixel_error: float
    val_pixel_error: float
    seconds: float

    def tsv(self):
        return (f"{self.epoch}\t{self.train_loss:.17g}\t"
                f"{self.train_pixel_error:.17g}\t{self.val_pixel_error:.17g}\t"
                f"{self.seconds:.3f}")


@dataclass
class FitResult:
    best_checkpoint: bytes
    best_epoch: int
    best_val_error: float
    history: list


def fit(net, train_set, val_set, cfg, log_stream=None):
    """Train with early stopping; retain the lowest-validation-error weights.

    Stops at max_epochs, or once more than `patience` consecutive epochs pass
    without improving the validation pixel error (patience 0 stops at the
    first non-improving epoch). `log_stream`, when given, receives one
    tab-separated record per epoch.
    """
    if len(train_set) == 0:
        raise DataError("no training data")
    if len(val_set) == 0:
        raise DataError("no validation data")
    rng = np.random.default_rng(cfg.rng_seed)
    state = MomentumState(net)
    rng_info = {"seed": cfg.rng_seed, "bit_generator": "PCG64"}
    best_blob = checkpoint_bytes(net, rng_info)
    best_error = float("inf")
    best_epoch = -1
    since_improve = 0
    history = []
    for epoch in range(cfg.max_epochs):
        start = time.perf_counter()
        stats = train_epoch(net, train_set, cfg, state, rng)
        val_error = metrics.evaluate(net, val_set).pixel_error_rate
        record = EpochRecord(epoch, stats.mean_loss, stats.pixel_error,
                             val_error, time.perf_counter() - start)
        history.append(record)
        if log_stream is not None:
            log_stream.write(record.tsv() + "\n")
            log_stream.flush()
        if val_error < best_error:
            best_error = val_error
            best_epoch = epoch
            best_blob = checkpoint_bytes(net, rng_info)
            since_improve = 0
        else:
            since_improve += 1
            if since_improve > cfg.patience:
                break
    return FitResult(best_blob, best_epoch, best_error, history)
