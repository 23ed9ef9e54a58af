"""Independent reference implementations used as test oracles.

Everything here is deliberately written as plain flat loops or direct
recursion over the defining equations, sharing no scan machinery with the
package: agreement with these is evidence, not tautology.
"""

import numpy as np


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def flat_rnn(weights, xs):
    """Plain 1D tanh RNN over (T, I) inputs; returns (T, H) outputs."""
    w_in, u, b = weights.w_in, weights.w_rec[0], weights.bias
    hs = []
    h = np.zeros(w_in.shape[0])
    for t in range(len(xs)):
        h = np.tanh(w_in @ xs[t] + u @ h + b)
        hs.append(h)
    return np.stack(hs)


def flat_lstm(weights, xs):
    """Plain 1D peephole LSTM over (T, I) inputs; returns (T, M) block outputs.

    Single-axis wiring: one forget gate, peepholes from the previous state to
    the input and forget gates and from the current state to the output gate.
    """
    w = weights
    C = w.config.cells_per_block
    reps = np.repeat(np.arange(w.config.num_blocks), C)  # cell -> block map
    T = len(xs)
    M = w.w_g.shape[0]
    h = np.zeros(M)
    s = np.zeros(M)
    out = np.empty((T, M))
    for t in range(T):
        x = xs[t]
        gate_i = sigmoid(w.w_i @ x + w.u_i[0] @ h + w.b_i
                         + np.bincount(reps, weights=w.p_i[0] * s,
                                       minlength=w.config.num_blocks))
        gate_f = sigmoid(w.w_f[0] @ x + w.u_f[0, 0] @ h + w.b_f[0]
                         + np.bincount(reps, weights=w.p_f[0] * s,
                                       minlength=w.config.num_blocks))
        g = np.tanh(w.w_g @ x + w.u_g[0] @ h + w.b_g)
        s = gate_i[reps] * g + gate_f[reps] * s
        gate_o = sigmoid(w.w_o @ x + w.u_o[0] @ h + w.b_o
                         + np.bincount(reps, weights=w.p_o * s,
                                       minlength=w.config.num_blocks))
        h = gate_o[reps] * np.tanh(s)
        out[t] = h
    return out


def flat_bidirectional(net, xs):
    """1D two-direction network: forward and reversed hidden layers into a
    shared softmax output layer. Returns (T, K) distributions."""
    layer_fn = flat_rnn if net.config.layer_kind == "tanh" else flat_lstm
    h_fwd = layer_fn(net.layers[0], xs)
    h_bwd = layer_fn(net.layers[1], xs[::-1])[::-1]
    logits = np.concatenate([h_fwd, h_bwd], axis=1) @ net.w_out.T + net.b_out
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def recursive_tanh(weights, values):
    """Evaluate a tanh layer by direct recursion over the dependency graph.

    `values` has shape dims + (I,). Returns dims + (H,) activations.
    """
    dims = values.shape[:-1]
    n = len(dims)
    memo = {}

    def h_at(coord):
        if coord in memo:
            return memo[coord]
        a = weights.bias + weights.w_in @ values[coord]
        for axis in range(n):
            if coord[axis] > 0:
                prev = list(coord)
                prev[axis] -= 1
                a = a + weights.w_rec[axis] @ h_at(tuple(prev))
        memo[coord] = np.tanh(a)
        return memo[coord]

    out = np.empty(dims + (weights.w_in.shape[0],))
    for coord in np.ndindex(*dims):
        out[coord] = h_at(coord)
    return out


def recursive_lstm(weights, values):
    """Evaluate an LSTM layer by direct recursion over the gate equations.

    Returns (states, outputs), each shaped dims + (M,).
    """
    w = weights
    dims = values.shape[:-1]
    n = len(dims)
    C = w.config.cells_per_block
    B = w.config.num_blocks
    reps = np.repeat(np.arange(B), C)
    memo = {}

    def eval_at(coord):
        if coord in memo:
            return memo[coord]
        x = values[coord]
        prev = []
        for axis in range(n):
            if coord[axis] > 0:
                c = list(coord)
                c[axis] -= 1
                prev.append((axis, eval_at(tuple(c))))
        pre_i = w.w_i @ x + w.b_i
        pre_f = w.w_f @ x + w.b_f  # (n, B)
        pre_g = w.w_g @ x + w.b_g
        pre_o = w.w_o @ x + w.b_o
        for axis, (s_prev, h_prev) in prev:
            pre_i = pre_i + w.u_i[axis] @ h_prev + np.bincount(
                reps, weights=w.p_i[axis] * s_prev, minlength=B)
            pre_g = pre_g + w.u_g[axis] @ h_prev
            pre_o = pre_o + w.u_o[axis] @ h_prev
            for gate in range(n):
                pre_f[gate] = pre_f[gate] + w.u_f[gate, axis] @ h_prev
            pre_f[axis] = pre_f[axis] + np.bincount(
                reps, weights=w.p_f[axis] * s_prev, minlength=B)
        gate_i = sigmoid(pre_i)
        gate_f = sigmoid(pre_f)
        g = np.tanh(pre_g)
        s = gate_i[reps] * g
        for axis, (s_prev, _) in prev:
            s = s + gate_f[axis][reps] * s_prev
        gate_o = sigmoid(pre_o + np.bincount(reps, weights=w.p_o * s, minlength=B))
        h = gate_o[reps] * np.tanh(s)
        memo[coord] = (s, h)
        return memo[coord]

    M = w.w_g.shape[0]
    states = np.empty(dims + (M,))
    outputs = np.empty(dims + (M,))
    for coord in np.ndindex(*dims):
        s, h = eval_at(coord)
        states[coord] = s
        outputs[coord] = h
    return states, outputs


def ordered_tanh_forward(weights, values, order):
    """Tanh layer computed by visiting points in the given order.

    Valid orders must list every axis-predecessor before its successor; the
    result must not depend on which valid order is used.
    """
    dims = values.shape[:-1]
    n = len(dims)
    H = weights.w_in.shape[0]
    h = {}
    for coord in order:
        a = weights.bias + weights.w_in @ values[coord]
        for axis in range(n):
            if coord[axis] > 0:
                prev = list(coord)
                prev[axis] -= 1
                a = a + weights.w_rec[axis] @ h[tuple(prev)]
        h[coord] = np.tanh(a)
    out = np.empty(dims + (H,))
    for coord, value in h.items():
        out[coord] = value
    return out
