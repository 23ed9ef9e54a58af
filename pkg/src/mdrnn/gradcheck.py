"""Finite-difference verification of the analytic gradients.

Every parameter of a freshly initialized network is perturbed by +/-step and
the resulting central difference of the summed cross-entropy loss is compared
with the backward pass. The relative error uses a unit floor so that
near-zero gradients are compared absolutely:

    err = |analytic - numeric| / max(|analytic|, |numeric|, 1)

The default suite sweeps both layer kinds, one to three grid axes, and both
single- and multi-directional composition, so every parameter group
(including all 2n+1 peepholes per cell) gets exercised.
"""

from dataclasses import dataclass

import numpy as np

from .grid import LabelGrid, SequenceND
from .network import Network, NetworkConfig, network_backward, network_forward


def relative_error(a, b, floor=1.0):
    return abs(a - b) / max(abs(a), abs(b), floor)


@dataclass
class GradCheckResult:
    label: str
    group_errors: dict  # parameter field name -> max relative error
    max_error: float


def check_network(config, dims, seed=0, step=1e-5, corrupt=False):
    """Compare backward-pass gradients against central differences.

    `corrupt`, when set, biases one analytic gradient entry before the
    comparison; it exists as a negative control for the harness itself.
    """
    rng = np.random.default_rng(seed)
    net = Network.initialized(config, rng)
    seq = SequenceND(rng.uniform(-1.0, 1.0, tuple(dims) + (config.input_width,)))
    labels = LabelGrid(rng.integers(0, config.output_width, tuple(dims)),
                       config.output_width)

    def loss():
        fwd = network_forward(net, seq)
        flat = fwd.probs.flat
        picked = flat[np.arange(seq.point_count), labels.flat]
        return float(-np.log(picked).sum())

    fwd = network_forward(net, seq)
    grads, _ = network_backward(net, seq, fwd, labels)
    if corrupt:
        grads.fields()[0][1].reshape(-1)[0] += 1e-3
    group_errors = {}
    for (name, w_arr), (_, g_arr) in zip(net.fields(), grads.fields()):
        flat_w = w_arr.reshape(-1)
        flat_g = g_arr.reshape(-1)
        worst = 0.0
        for idx in range(flat_w.size):
            orig = flat_w[idx]
            flat_w[idx] = orig + step
            up = loss()
            flat_w[idx] = orig - step
            down = loss()
            flat_w[idx] = orig
            numeric = (up - down) / (2.0 * step)
            worst = max(worst, relative_error(numeric, flat_g[idx]))
        group_errors[name] = worst
    label = (f"{config.layer_kind} n={config.num_dims} "
             f"{'multi' if config.multidirectional else 'single'}-dir "
             f"shape={tuple(dims)}")
    return GradCheckResult(label, group_errors, max(group_errors.values()))


def default_suite():
    """(config, dims) pairs covering kinds x dimensionality x directionality."""
    shapes = {1: (6,), 2: (3, 4), 3: (2, 2, 2)}
    suite = []
    for kind in ("tanh", "lstm"):
        for n in (1, 2, 3):
            for multi in (False, True):
                hidden = 3 if kind == "tanh" else 2
                config = NetworkConfig(
                    num_dims=n, layer_kind=kind, input_width=2,
                    hidden_width=hidden, output_width=3,
                    multidirectional=multi)
                suite.append((config, shapes[n]))
    return suite


def run_suite(seed=0, step=1e-5, tolerance=1e-6, corrupt=False):
    """Run every default configuration; returns (results, all_passed)."""
    results = [check_network(config, dims, seed=seed, step=step, corrupt=corrupt)
               for config, dims in default_suite()]
    ok = all(r.max_error < tolerance for r in results)
    return results, ok
