"""Scan kernels for the recurrent layers.

Each kernel walks the grid points in flat (row-major) order, which coincides
with the lexicographic scan order, so every predecessor is ready before it is
read. Backward kernels walk the same order reversed and *push* error terms
into predecessor accumulators instead of pulling from successors; the two
formulations are algebraically identical and pushing needs no successor table.

All arrays are C-contiguous float64; `pred` is the (P, n) int64 predecessor
table (-1 at boundaries). Summation order inside every kernel is fixed, so
results are bit-reproducible run to run.

Weight layout for the LSTM kernels (B blocks, C cells each, M = B*C):
    w_g (M, I)   u_g (n, M, M)   b_g (M,)    cell input
    w_i (B, I)   u_i (n, B, M)   b_i (B,)    input gate
    w_f (n, B, I) u_f (n, n, B, M) b_f (n, B) one forget gate per axis;
                                              u_f[g, d] feeds gate g from the
                                              axis-d predecessor's output
    w_o (B, I)   u_o (n, B, M)   b_o (B,)    output gate
    p_i (n, M)   input-gate peepholes from each axis-predecessor cell state
    p_f (n, M)   forget-gate g peephole from the axis-g predecessor state
    p_o (M,)     output-gate peephole from the current cell state
"""

import math

import numpy as np
from numba import njit

__all__ = [
    "tanh_forward",
    "tanh_backward",
    "lstm_forward",
    "lstm_backward",
]


@njit(cache=True, inline="always")
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def tanh_forward(x, pred, w_in, w_rec, bias, a, h):
    P, I = x.shape
    n = pred.shape[1]
    H = w_in.shape[0]
    for p in range(P):
        for k in range(H):
            acc = bias[k]
            for j in range(I):
                acc += w_in[k, j] * x[p, j]
            a[p, k] = acc
        for d in range(n):
            q = pred[p, d]
            if q >= 0:
                for k in range(H):
                    acc = 0.0
                    for j in range(H):
                        acc += w_rec[d, k, j] * h[q, j]
                    a[p, k] += acc
        for k in range(H):
            h[p, k] = math.tanh(a[p, k])


@njit(cache=True)
def tanh_backward(x, pred, w_in, w_rec, h, e_acc, delta, g_in, g_rec, g_bias, gx):
    """Reverse scan. `e_acc` must arrive holding the injected output deltas;
    recurrent error flowing back from successors is pushed into it in place."""
    P, I = x.shape
    n = pred.shape[1]
    H = w_in.shape[0]
    for p in range(P - 1, -1, -1):
        for k in range(H):
            delta[p, k] = (1.0 - h[p, k] * h[p, k]) * e_acc[p, k]
        for k in range(H):
            dk = delta[p, k]
            g_bias[k] += dk
            for j in range(I):
                g_in[k, j] += dk * x[p, j]
                gx[p, j] += dk * w_in[k, j]
        for d in range(n):
            q = pred[p, d]
            if q >= 0:
                for k in range(H):
                    dk = delta[p, k]
                    for j in range(H):
                        g_rec[d, k, j] += dk * h[q, j]
                        e_acc[q, j] += dk * w_rec[d, k, j]


@njit(cache=True)
def lstm_forward(
    x, pred, cells,
    w_g, u_g, b_g,
    w_i, u_i, b_i,
    w_f, u_f, b_f,
    w_o, u_o, b_o,
    p_i, p_f, p_o,
    pre_g, act_g, pre_i, act_i, pre_f, act_f, pre_o, act_o, s, h,
):
    P, I = x.shape
    n = pred.shape[1]
    M = w_g.shape[0]
    B = w_i.shape[0]
    for p in range(P):
        for m in range(M):
            acc = b_g[m]
            for j in range(I):
                acc += w_g[m, j] * x[p, j]
            pre_g[p, m] = acc
        for b in range(B):
            acc = b_i[b]
            for j in range(I):
                acc += w_i[b, j] * x[p, j]
            pre_i[p, b] = acc
            acc = b_o[b]
            for j in range(I):
                acc += w_o[b, j] * x[p, j]
            pre_o[p, b] = acc
            for g in range(n):
                acc = b_f[g, b]
                for j in range(I):
                    acc += w_f[g, b, j] * x[p, j]
                pre_f[p, g, b] = acc
        for d in range(n):
            q = pred[p, d]
            if q >= 0:
                for m in range(M):
                    acc = 0.0
                    for j in range(M):
                        acc += u_g[d, m, j] * h[q, j]
                    pre_g[p, m] += acc
                for b in range(B):
                    acc = 0.0
                    for j in range(M):
                        acc += u_i[d, b, j] * h[q, j]
                    pre_i[p, b] += acc
                    acc = 0.0
                    for j in range(M):
                        acc += u_o[d, b, j] * h[q, j]
                    pre_o[p, b] += acc
                    for g in range(n):
                        acc = 0.0
                        for j in range(M):
                            acc += u_f[g, d, b, j] * h[q, j]
                        pre_f[p, g, b] += acc
                for m in range(M):
                    pre_i[p, m // cells] += p_i[d, m] * s[q, m]
                    pre_f[p, d, m // cells] += p_f[d, m] * s[q, m]
        for b in range(B):
            act_i[p, b] = _sigmoid(pre_i[p, b])
            for g in range(n):
                act_f[p, g, b] = _sigmoid(pre_f[p, g, b])
        for m in range(M):
            act_g[p, m] = math.tanh(pre_g[p, m])
            acc = act_i[p, m // cells] * act_g[p, m]
            for d in range(n):
                q = pred[p, d]
                if q >= 0:
                    acc += act_f[p, d, m // cells] * s[q, m]
            s[p, m] = acc
            pre_o[p, m // cells] += p_o[m] * s[p, m]
        for b in range(B):
            act_o[p, b] = _sigmoid(pre_o[p, b])
        for m in range(M):
            h[p, m] = act_o[p, m // cells] * math.tanh(s[p, m])


@njit(cache=True)
def lstm_backward(
    x, pred, cells,
    w_g, u_g,
    w_i, u_i,
    w_f, u_f,
    w_o, u_o,
    p_i, p_f, p_o,
    act_g, act_i, act_f, act_o, s, h,
    dh_acc, ds_acc,
    g_w_g, g_u_g, g_b_g,
    g_w_i, g_u_i, g_b_i,
    g_w_f, g_u_f, g_b_f,
    g_w_o, g_u_o, g_b_o,
    g_p_i, g_p_f, g_p_o,
    gx,
):
    """Reverse scan. `dh_acc` must arrive holding the injected output deltas,
    `ds_acc` zeros; both collect contributions pushed back from successors.
    Gradient arrays are accumulated into (callers pass zeros)."""
    P, I = x.shape
    n = pred.shape[1]
    M = w_g.shape[0]
    B = w_i.shape[0]
    ds = np.empty(M)
    dpre_g = np.empty(M)
    dpre_i = np.empty(B)
    dpre_o = np.empty(B)
    dpre_f = np.empty((n, B))
    for p in range(P - 1, -1, -1):
        # output gate first: its peephole feeds the cell-state error below
        for b in range(B):
            acc = 0.0
            for c in range(cells):
                m = b * cells + c
                acc += dh_acc[p, m] * math.tanh(s[p, m])
            dpre_o[b] = act_o[p, b] * (1.0 - act_o[p, b]) * acc
        for m in range(M):
            b = m // cells
            ts = math.tanh(s[p, m])
            ds[m] = (
                dh_acc[p, m] * act_o[p, b] * (1.0 - ts * ts)
                + dpre_o[b] * p_o[m]
                + ds_acc[p, m]
            )
            dpre_g[m] = ds[m] * act_i[p, b] * (1.0 - act_g[p, m] * act_g[p, m])
        for b in range(B):
            acc = 0.0
            for c in range(cells):
                m = b * cells + c
                acc += ds[m] * act_g[p, m]
            dpre_i[b] = act_i[p, b] * (1.0 - act_i[p, b]) * acc
            for g in range(n):
                q = pred[p, g]
                acc = 0.0
                if q >= 0:
                    for c in range(cells):
                        m = b * cells + c
                        acc += ds[m] * s[q, m]
                dpre_f[g, b] = act_f[p, g, b] * (1.0 - act_f[p, g, b]) * acc
        # parameter gradients fed by the current input
        for m in range(M):
            g_b_g[m] += dpre_g[m]
            for j in range(I):
                g_w_g[m, j] += dpre_g[m] * x[p, j]
        for b in range(B):
            g_b_i[b] += dpre_i[b]
            g_b_o[b] += dpre_o[b]
            for j in range(I):
                g_w_i[b, j] += dpre_i[b] * x[p, j]
                g_w_o[b, j] += dpre_o[b] * x[p, j]
            for g in range(n):
                g_b_f[g, b] += dpre_f[g, b]
                for j in range(I):
                    g_w_f[g, b, j] += dpre_f[g, b] * x[p, j]
        for m in range(M):
            g_p_o[m] += dpre_o[m // cells] * s[p, m]
        # recurrent gradients plus the push into each predecessor's accumulators
        for d in range(n):
            q = pred[p, d]
            if q >= 0:
                for m in range(M):
                    for j in range(M):
                        g_u_g[d, m, j] += dpre_g[m] * h[q, j]
                        dh_acc[q, j] += dpre_g[m] * u_g[d, m, j]
                for b in range(B):
                    for j in range(M):
                        g_u_i[d, b, j] += dpre_i[b] * h[q, j]
                        g_u_o[d, b, j] += dpre_o[b] * h[q, j]
                        dh_acc[q, j] += dpre_i[b] * u_i[d, b, j]
                        dh_acc[q, j] += dpre_o[b] * u_o[d, b, j]
                        for g in range(n):
                            g_u_f[g, d, b, j] += dpre_f[g, b] * h[q, j]
                            dh_acc[q, j] += dpre_f[g, b] * u_f[g, d, b, j]
                for m in range(M):
                    b = m // cells
                    g_p_i[d, m] += dpre_i[b] * s[q, m]
                    g_p_f[d, m] += dpre_f[d, b] * s[q, m]
                    ds_acc[q, m] += (
                        ds[m] * act_f[p, d, b]
                        + dpre_i[b] * p_i[d, m]
                        + dpre_f[d, b] * p_f[d, m]
                    )
        # gradient with respect to the external input
        for j in range(I):
            acc = 0.0
            for m in range(M):
                acc += dpre_g[m] * w_g[m, j]
            for b in range(B):
                acc += dpre_i[b] * w_i[b, j]
                acc += dpre_o[b] * w_o[b, j]
                for g in range(n):
                    acc += dpre_f[g, b] * w_f[g, b, j]
            gx[p, j] += acc
