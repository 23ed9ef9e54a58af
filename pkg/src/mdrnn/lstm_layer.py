"""LSTM hidden layer generalized to n grid axes.

Each memory block keeps one cell state per cell, with n state self-connections
(one per axis) each controlled by its own forget gate. Gates are logistic; the
cell input and output squashers are tanh. Peepholes per cell: n to the input
gate (one per previous state), one per forget gate from the matching previous
state, and one from the current state to the output gate, 2n+1 in total.
Recurrent inputs to all gates come from the predecessor block outputs.

The cell state itself is unclipped and unbounded; divergence control is the
trainer's job.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError
from .grid import SequenceND, predecessor_table

INIT_RANGE = 0.1


@dataclass(frozen=True)
class LstmLayerConfig:
    num_dims: int
    input_width: int
    num_blocks: int
    cells_per_block: int = 1

    def __post_init__(self):
        if min(self.num_dims, self.input_width, self.num_blocks, self.cells_per_block) < 1:
            raise ConfigError(f"layer config fields must be positive: {self}")

    @property
    def num_cells(self):
        return self.num_blocks * self.cells_per_block

    @property
    def output_width(self):
        return self.num_cells


class LstmWeights:
    """Trainable parameters of one LSTM layer; doubles as a gradient buffer.

    `fields()` yields (name, array) pairs in the canonical serialization
    order: input weights (cell input, input gate, forget gates by axis,
    output gate), recurrent weights per predecessor axis ascending (same
    unit order), peepholes (input gate, forget gates, output gate), biases.
    """

    def __init__(self, config, w_g, u_g, b_g, w_i, u_i, b_i, w_f, u_f, b_f,
                 w_o, u_o, b_o, p_i, p_f, p_o):
        self.config = config
        self.w_g, self.u_g, self.b_g = w_g, u_g, b_g
        self.w_i, self.u_i, self.b_i = w_i, u_i, b_i
        self.w_f, self.u_f, self.b_f = w_f, u_f, b_f
        self.w_o, self.u_o, self.b_o = w_o, u_o, b_o
        self.p_i, self.p_f, self.p_o = p_i, p_f, p_o

    @classmethod
    def _shapes(cls, config):
        n, I = config.num_dims, config.input_width
        B, M = config.num_blocks, config.num_cells
        return {
            "w_g": (M, I), "u_g": (n, M, M), "b_g": (M,),
            "w_i": (B, I), "u_i": (n, B, M), "b_i": (B,),
            "w_f": (n, B, I), "u_f": (n, n, B, M), "b_f": (n, B),
            "w_o": (B, I), "u_o": (n, B, M), "b_o": (B,),
            "p_i": (n, M), "p_f": (n, M), "p_o": (M,),
        }

    @classmethod
    def initialized(cls, config, rng):
        shapes = cls._shapes(config)
        return cls(config, *(rng.uniform(-INIT_RANGE, INIT_RANGE, shapes[k])
                             for k in shapes))

    @classmethod
    def zeros(cls, config):
        shapes = cls._shapes(config)
        return cls(config, *(np.zeros(shapes[k]) for k in shapes))

    def fields(self):
        n = self.config.num_dims
        out = [("w_g", self.w_g), ("w_i", self.w_i)]
        out += [(f"w_f{g}", self.w_f[g]) for g in range(n)]
        out.append(("w_o", self.w_o))
        for d in range(n):
            out += [(f"u_g{d}", self.u_g[d]), (f"u_i{d}", self.u_i[d])]
            out += [(f"u_f{g}_{d}", self.u_f[g, d]) for g in range(n)]
            out.append((f"u_o{d}", self.u_o[d]))
        out += [("p_i", self.p_i), ("p_f", self.p_f), ("p_o", self.p_o)]
        out += [("b_g", self.b_g), ("b_i", self.b_i), ("b_f", self.b_f),
                ("b_o", self.b_o)]
        return out


class LstmTape:
    """Stored forward pass: gate pre-activations and activations, cell states
    `s`, and block outputs `h`, all in scan order.

    Shapes: (P, M) for cell-indexed arrays, (P, B) for the input/output gates,
    (P, n, B) for the forget gates.
    """

    def __init__(self, dims, pre_g, act_g, pre_i, act_i, pre_f, act_f,
                 pre_o, act_o, s, h):
        self.dims = dims
        self.pre_g, self.act_g = pre_g, act_g
        self.pre_i, self.act_i = pre_i, act_i
        self.pre_f, self.act_f = pre_f, act_f
        self.pre_o, self.act_o = pre_o, act_o
        self.s = s
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
    """Run the layer over `seq`, returning the full activation tape."""
    _check_input(config, seq)
    pred = predecessor_table(seq.dims)
    P = seq.point_count
    n, B, M = config.num_dims, config.num_blocks, config.num_cells
    tape = LstmTape(
        seq.dims,
        np.empty((P, M)), np.empty((P, M)),
        np.empty((P, B)), np.empty((P, B)),
        np.empty((P, n, B)), np.empty((P, n, B)),
        np.empty((P, B)), np.empty((P, B)),
        np.empty((P, M)), np.empty((P, M)),
    )
    w = weights
    kernels.lstm_forward(
        seq.flat, pred, config.cells_per_block,
        w.w_g, w.u_g, w.b_g, w.w_i, w.u_i, w.b_i,
        w.w_f, w.u_f, w.b_f, w.w_o, w.u_o, w.b_o,
        w.p_i, w.p_f, w.p_o,
        tape.pre_g, tape.act_g, tape.pre_i, tape.act_i,
        tape.pre_f, tape.act_f, tape.pre_o, tape.act_o, tape.s, tape.h,
    )
    return tape


def backward(config, weights, seq, tape, out_delta):
    """Exact reverse-mode pass through every gate equation.

    `out_delta` is the (P, M) array of objective derivatives injected at the
    block outputs. Returns the per-point output deltas actually propagated, a
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
    grads = LstmWeights.zeros(config)
    dh_acc = out_delta.copy()
    ds_acc = np.zeros_like(tape.s)
    gx = np.zeros_like(seq.flat)
    w, g = weights, grads
    kernels.lstm_backward(
        seq.flat, pred, config.cells_per_block,
        w.w_g, w.u_g, w.w_i, w.u_i, w.w_f, w.u_f, w.w_o, w.u_o,
        w.p_i, w.p_f, w.p_o,
        tape.act_g, tape.act_i, tape.act_f, tape.act_o, tape.s, tape.h,
        dh_acc, ds_acc,
        g.w_g, g.u_g, g.b_g, g.w_i, g.u_i, g.b_i,
        g.w_f, g.u_f, g.b_f, g.w_o, g.u_o, g.b_o,
        g.p_i, g.p_f, g.p_o,
        gx,
    )
    return dh_acc, grads, SequenceND(gx.reshape(seq.values.shape))
