"""Evaluation quantities: pixel error rate, whole-image digit classification
by cumulative output activation, and aggregate reports.

All argmax decisions break ties toward the lowest class index, so every
quantity here is deterministic and order-independent.
"""

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .grid import LabelGrid, SequenceND
from .network import network_forward

NUM_DIGIT_CLASSES = 10


def _flat_probs(predictions):
    if isinstance(predictions, SequenceND):
        return predictions.flat
    arr = np.asarray(predictions, dtype=np.float64)
    return arr.reshape(-1, arr.shape[-1])


def _flat_labels(targets):
    if isinstance(targets, LabelGrid):
        return targets.flat
    return np.asarray(targets, dtype=np.int64).reshape(-1)


def predicted_classes(predictions):
    """Per-point argmax class; ties go to the lowest index."""
    return np.argmax(_flat_probs(predictions), axis=1)


def misclassified_points(predictions, targets):
    probs = _flat_probs(predictions)
    labels = _flat_labels(targets)
    if probs.shape[0] != labels.shape[0]:
        raise ConfigError(
            f"predictions cover {probs.shape[0]} points, targets {labels.shape[0]}")
    return int(np.count_nonzero(np.argmax(probs, axis=1) != labels))


def pixel_error(predictions, targets):
    """Fraction of points whose predicted class differs from the target."""
    labels = _flat_labels(targets)
    return misclassified_points(predictions, targets) / labels.shape[0]


def cumulative_classify(predictions):
    """Digit whose output unit has the highest total activation over the image.

    The background unit (index 10) is excluded from the decision; exactly 11
    output classes (10 digits + background) are required.
    """
    probs = _flat_probs(predictions)
    if probs.shape[1] != NUM_DIGIT_CLASSES + 1:
        raise ConfigError(
            f"cumulative classification needs {NUM_DIGIT_CLASSES + 1} classes, "
            f"got {probs.shape[1]}")
    sums = probs[:, :NUM_DIGIT_CLASSES].sum(axis=0)
    return int(np.argmax(sums))


@dataclass
class EvalReport:
    pixel_error_rate: float
    image_error_rate: float | None  # None when no sequence carries a digit label
    confusion: np.ndarray  # (K, K) counts, rows = target class, cols = predicted
    sequences: int

    def to_text(self):
        lines = [
            f"sequences: {self.sequences}",
            f"points: {int(self.confusion.sum())}",
            f"pixel_error_rate: {self.pixel_error_rate:.6f}",
        ]
        if self.image_error_rate is not None:
            lines.append(f"image_error_rate: {self.image_error_rate:.6f}")
        return "\n".join(lines)

    def confusion_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf)
        K = self.confusion.shape[0]
        writer.writerow(["target\\predicted"] + list(range(K)))
        for t in range(K):
            writer.writerow([t] + [int(v) for v in self.confusion[t]])
        return buf.getvalue()


def _eval_one(net, example):
    fwd = network_forward(net, example.input)
    pred = predicted_classes(fwd.probs)
    labels = example.labels.flat
    K = example.labels.num_classes
    confusion = np.zeros((K, K), dtype=np.int64)
    np.add.at(confusion, (labels, pred), 1)
    image_hit = None
    if getattr(example, "digit", None) is not None:
        image_hit = cumulative_classify(fwd.probs) == example.digit
    return confusion, image_hit


def evaluate(net, dataset, workers=1):
    """Run the network over `dataset` and aggregate the error rates.

    Sharding across workers changes nothing: per-sequence results are merged
    in dataset order with associative sums.
    """
    if len(dataset) == 0:
        raise DataError("no evaluation data")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda ex: _eval_one(net, ex), dataset))
    else:
        results = [_eval_one(net, ex) for ex in dataset]
    confusion = sum(c for c, _ in results)
    image_flags = [hit for _, hit in results if hit is not None]
    total = int(confusion.sum())
    correct = int(np.trace(confusion))
    image_error = None
    if image_flags:
        image_error = 1.0 - sum(image_flags) / len(image_flags)
    return EvalReport(
        pixel_error_rate=(total - correct) / total,
        image_error_rate=image_error,
        confusion=confusion,
        sequences=len(dataset),
    )
