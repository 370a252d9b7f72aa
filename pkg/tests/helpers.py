"""Independent oracles used by the tests.

Nothing here calls into the code paths it is used to check: metrics are
scalar loops over entries, gradients are central finite differences of the
loss value alone.
"""
import math

import numpy as np

from gcngan.nn import named_arrays

FD_STEP = 1e-5
FD_RTOL = 1e-4
FD_ATOL = 1e-7


def loop_mse(truth, pred):
    n = len(truth)
    acc = 0.0
    for i in range(n):
        for j in range(n):
            acc += (truth[i][j] - pred[i][j]) ** 2
    return acc / (n * n)


def loop_kl(truth, pred):
    n = len(truth)
    st = sum(truth[i][j] for i in range(n) for j in range(n))
    sp = sum(pred[i][j] for i in range(n) for j in range(n))
    acc = 0.0
    for i in range(n):
        for j in range(n):
            p = truth[i][j] / st
            q = pred[i][j] / sp
            if p > 0 and q > 0:
                acc += p * math.log(p / q)
    return acc


def loop_mismatch(truth, pred):
    n = len(truth)
    bad = 0
    for i in range(n):
        for j in range(n):
            if i != j and ((truth[i][j] == 0) != (pred[i][j] == 0)):
                bad += 1
    return bad / (n * (n - 1))


def loop_sum_sq(m):
    return sum(float(v) ** 2 for row in m for v in row)


def finite_difference(loss_fn, params, h=FD_STEP):
    """Central differences of ``loss_fn(params)`` w.r.t. every entry, in place."""
    out = {}
    for name, arr in named_arrays(params):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = loss_fn(params)
            arr[idx] = old - h
            down = loss_fn(params)
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        out[name] = g
    return out


def gradient_mismatches(analytic, numeric, rtol=FD_RTOL, atol=FD_ATOL):
    """List ``(name, index, analytic, numeric)`` for entries outside tolerance."""
    bad = []
    for name, a in named_arrays(analytic):
        n = numeric[name]
        for idx in np.ndindex(a.shape):
            x, y = a[idx], n[idx]
            if abs(x - y) > max(rtol * max(abs(x), abs(y)), atol):
                bad.append((name, idx, x, y))
    return bad


def random_window(rng, n, length):
    mats = []
    for _ in range(length):
        a = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
        a = np.triu(a, 1)
        mats.append(a + a.T)
    return mats
