"""Vanilla recurrent hidden layer: summation units with tanh activation.

One recurrent weight block per grid axis. The forward pass visits points in
scan order; the backward pass revisits them in reverse and produces exact
gradients for every parameter plus the gradient with respect to the inputs.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError
from .grid import SequenceND, predecessor_table

INIT_RANGE = 0.1


@dataclass(frozen=True)
class TanhLayerConfig:
    num_dims: int
    input_width: int
    hidden_width: int

    def __post_init__(self):
        if min(self.num_dims, self.input_width, self.hidden_width) < 1:
            raise ConfigError(f"layer config fields must be positive: {self}")

    @property
    def output_width(self):
        return self.hidden_width


class TanhWeights:
    """Trainable parameters of one tanh layer.

    The same class doubles as a gradient or momentum buffer (see `zeros`);
    `fields()` yields (name, array) pairs in the canonical serialization
    order: input weights, recurrent weights per axis ascending, biases.
    """

    def __init__(self, config, w_in, w_rec, bias):
        self.config = config
        self.w_in = w_in
        self.w_rec = w_rec
        self.bias = bias

    @classmethod
    def initialized(cls, config, rng):
        n, I, H = config.num_dims, config.input_width, config.hidden_width
        return cls(
            config,
            rng.uniform(-INIT_RANGE, INIT_RANGE, (H, I)),
            rng.uniform(-INIT_RANGE, INIT_RANGE, (n, H, H)),
            rng.uniform(-INIT_RANGE, INIT_RANGE, H),
        )

    @classmethod
    def zeros(cls, config):
        n, I, H = config.num_dims, config.input_width, config.hidden_width
        return cls(config, np.zeros((H, I)), np.zeros((n, H, H)), np.zeros(H))

    def fields(self):
        out = [("w_in", self.w_in)]
        out += [(f"w_rec{d}", self.w_rec[d]) for d in range(self.config.num_dims)]
        out.append(("bias", self.bias))
        return out


class TanhTape:
    """Stored forward activations: pre-activations `a` and outputs `h`,
    both (P, H) in scan order."""

    def __init__(self, dims, a, h):
        self.dims = dims
        self.a = a
        self.h = h


def _check_input(config, seq):
    if seq.num_dims != config.num_dims:
        raise ConfigError(
            f"layer expects {config.num_dims} grid axes, input has {seq.num_dims}"
        )
    if seq.width != config.input_width:
        raise ConfigError(
            f"layer expects input width {config.input_width}, got {seq.width}"
        )


def forward(config, weights, seq):
    """Run the layer over `seq`, returning the activation tape."""
    _check_input(config, seq)
    pred = predecessor_table(seq.dims)
    P, H = seq.point_count, config.hidden_width
    a = np.empty((P, H))
    h = np.empty((P, H))
    kernels.tanh_forward(seq.flat, pred, weights.w_in, weights.w_rec, weights.bias, a, h)
    return TanhTape(seq.dims, a, h)


def backward(config, weights, seq, tape, out_delta):
    """Exact reverse-mode pass.

    `out_delta` is the (P, H) array of objective derivatives injected at each
    point's output from above. Returns the per-point hidden deltas, a
    gradient store congruent with `weights`, and the input gradient.
    """
    _check_input(config, seq)
    if tape.dims != seq.dims:
        raise ValueError(f"tape dims {tape.dims} do not match input dims {seq.dims}")
    out_delta = np.asarray(out_delta, dtype=np.float64)
    if out_delta.shape != tape.h.shape:
        raise ValueError(
            f"output deltas shaped {out_delta.shape}, expected {tape.h.shape}"
        )
    pred = predecessor_table(seq.dims)
    grads = TanhWeights.zeros(config)
    e_acc = out_delta.copy()
    delta = np.empty_like(tape.h)
    gx = np.zeros_like(seq.flat)
    kernels.tanh_backward(
        seq.flat, pred, weights.w_in, weights.w_rec, tape.h,
        e_acc, delta, grads.w_in, grads.w_rec, grads.bias, gx,
    )
    return delta, grads, SequenceND(gx.reshape(seq.values.shape))
