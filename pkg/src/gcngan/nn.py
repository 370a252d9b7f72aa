"""Neural building blocks with hand-derived gradients.

Every layer is a pair of functions: ``*_forward`` returns the output together
with a cache of intermediates, and ``*_backward`` consumes that cache plus the
upstream gradient and returns parameter gradients and the gradient with
respect to the layer input. Gradient containers have the same dataclass type
as the parameters they belong to.

All vectors are 1 x n row matrices, matching the row-wise reshape used when a
graph snapshot is flattened.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy.special import expit

from .linalg import Matrix, ShapeError, check_square

GATES = ("i", "f", "o", "s")
ACTIVATIONS = ("sigmoid", "tanh", "linear")


class UsageError(RuntimeError):
    """Raised when a backward pass is called without its forward cache."""


def sigmoid(x: Matrix) -> Matrix:
    return expit(x)


def activate(x: Matrix, kind: str) -> Matrix:
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "linear":
        return x
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(y: Matrix, kind: str) -> Matrix:
    """Derivative of the activation expressed through its output ``y``."""
    if kind == "sigmoid":
        return y * (1.0 - y)
    if kind == "tanh":
        return 1.0 - y * y
    if kind == "linear":
        return np.ones_like(y)
    raise ValueError(f"unknown activation {kind!r}")


# ---------------------------------------------------------------------------
# parameter containers


@dataclass
class GcnLayerParams:
    weight: Matrix


@dataclass
class DenseParams:
    weight: Matrix
    bias: Matrix


@dataclass
class LstmParams:
    """Per-gate input weights ``wx_*``, recurrent weights ``wh_*`` and biases ``b_*``.

    Gate suffixes: ``i`` input, ``f`` forget, ``o`` output, ``s`` candidate cell.
    """

    wx_i: Matrix
    wh_i: Matrix
    b_i: Matrix
    wx_f: Matrix
    wh_f: Matrix
    b_f: Matrix
    wx_o: Matrix
    wh_o: Matrix
    b_o: Matrix
    wx_s: Matrix
    wh_s: Matrix
    b_s: Matrix

    def __post_init__(self):
        m_i, m_h = self.wx_i.shape
        for g in GATES:
            if getattr(self, f"wx_{g}").shape != (m_i, m_h):
                raise ShapeError(f"wx_{g} must be {(m_i, m_h)}")
            if getattr(self, f"wh_{g}").shape != (m_h, m_h):
                raise ShapeError(f"wh_{g} must be {(m_h, m_h)}")
            if getattr(self, f"b_{g}").shape != (1, m_h):
                raise ShapeError(f"b_{g} must be {(1, m_h)}")

    @property
    def input_size(self) -> int:
        return self.wx_i.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.wx_i.shape[1]


@dataclass
class LstmState:
    h: Matrix
    s: Matrix

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(np.zeros((1, hidden_size)), np.zeros((1, hidden_size)))


def named_arrays(params, prefix: str = "") -> Iterator[tuple[str, Matrix]]:
    """Yield ``(dotted_name, array)`` for every array in a parameter tree."""
    for f in dataclasses.fields(params):
        value = getattr(params, f.name)
        name = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(value):
            yield from named_arrays(value, name + ".")
        else:
            yield name, value


def map_params(fn: Callable[..., Matrix], params, *others):
    """Build a new parameter tree by applying ``fn`` leaf-wise across trees."""
    kwargs = {}
    for f in dataclasses.fields(params):
        value = getattr(params, f.name)
        rest = [getattr(o, f.name) for o in others]
        if dataclasses.is_dataclass(value):
            kwargs[f.name] = map_params(fn, value, *rest)
        else:
            kwargs[f.name] = fn(value, *rest)
    return type(params)(**kwargs)


def zeros_like(params):
    return map_params(np.zeros_like, params)


def copy_params(params):
    return map_params(np.copy, params)


def scale_params(params, k: float):
    return map_params(lambda a: a * k, params)


def add_params(a, b):
    return map_params(np.add, a, b)


def sum_of_squares(params) -> float:
    return float(sum(np.sum(a * a) for _, a in named_arrays(params)))


def max_abs(params) -> float:
    return max(float(np.max(np.abs(a))) for _, a in named_arrays(params))


def params_equal(a, b) -> bool:
    return all(np.array_equal(x, y) for (_, x), (_, y) in zip(named_arrays(a), named_arrays(b)))


# ---------------------------------------------------------------------------
# initialisation


def xavier_init(rng: np.random.Generator, rows: int, cols: int) -> Matrix:
    """Glorot-uniform weights in [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))]."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"weight shape must be positive, got ({rows}, {cols})")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_gcn(rng: np.random.Generator, n_in: int, n_out: int) -> GcnLayerParams:
    return GcnLayerParams(xavier_init(rng, n_in, n_out))


def init_dense(rng: np.random.Generator, n_in: int, n_out: int) -> DenseParams:
    return DenseParams(xavier_init(rng, n_in, n_out), np.zeros((1, n_out)))


def init_lstm(rng: np.random.Generator, input_size: int, hidden_size: int) -> LstmParams:
    kw = {}
    for g in GATES:
        kw[f"wx_{g}"] = xavier_init(rng, input_size, hidden_size)
        kw[f"wh_{g}"] = xavier_init(rng, hidden_size, hidden_size)
        kw[f"b_{g}"] = np.zeros((1, hidden_size))
    return LstmParams(**kw)


# ---------------------------------------------------------------------------
# GCN unit


def gcn_filter(a_norm: Matrix) -> Matrix:
    """Renormalised propagation matrix D^-1/2 (A + I) D^-1/2."""
    n = check_square(a_norm, "adjacency")
    a_hat = a_norm + np.eye(n)
    deg = a_hat.sum(axis=1)
    if np.any(deg <= 0):
        raise ShapeError("adjacency with self loops has a non-positive row sum")
    d = 1.0 / np.sqrt(deg)
    return d[:, None] * a_hat * d[None, :]


@dataclass
class GcnCache:
    filt: Matrix
    z: Matrix
    fz: Matrix
    out: Matrix
    activation: str


def gcn_forward(
    z: Matrix,
    a_norm: Matrix,
    params: GcnLayerParams,
    activation: str = "sigmoid",
    filt: Matrix | None = None,
) -> tuple[Matrix, GcnCache]:
    """One graph convolution ``f(F z W)``. ``filt`` may be passed precomputed."""
    if filt is None:
        filt = gcn_filter(a_norm)
    n = filt.shape[0]
    if z.shape[0] != n:
        raise ShapeError(f"features have {z.shape[0]} rows for a {n}-node graph")
    if z.shape[1] != params.weight.shape[0]:
        raise ShapeError(f"feature width {z.shape[1]} != weight rows {params.weight.shape[0]}")
    fz = filt @ z
    out = activate(fz @ params.weight, activation)
    return out, GcnCache(filt, z, fz, out, activation)


def gcn_backward(
    dout: Matrix, cache: GcnCache | None, params: GcnLayerParams
) -> tuple[GcnLayerParams, Matrix]:
    if cache is None:
        raise UsageError("gcn_backward called without a forward cache")
    dpre = dout * activation_grad(cache.out, cache.activation)
    dweight = cache.fz.T @ dpre
    dz = cache.filt.T @ (dpre @ params.weight.T)
    return GcnLayerParams(dweight), dz


# ---------------------------------------------------------------------------
# dense layer


@dataclass
class DenseCache:
    x: Matrix
    out: Matrix
    activation: str


def dense_forward(x: Matrix, params: DenseParams, activation: str = "linear") -> tuple[Matrix, DenseCache]:
    if x.ndim != 2 or x.shape[1] != params.weight.shape[0]:
        raise ShapeError(f"input {x.shape} does not fit weight {params.weight.shape}")
    out = activate(x @ params.weight + params.bias, activation)
    return out, DenseCache(x, out, activation)


def dense_backward(
    dout: Matrix, cache: DenseCache | None, params: DenseParams
) -> tuple[DenseParams, Matrix]:
    if cache is None:
        raise UsageError("dense_backward called without a forward cache")
    dpre = dout * activation_grad(cache.out, cache.activation)
    grads = DenseParams(cache.x.T @ dpre, dpre.sum(axis=0, keepdims=True))
    return grads, dpre @ params.weight.T


# ---------------------------------------------------------------------------
# LSTM


@dataclass
class LstmStepCache:
    x: Matrix
    prev: LstmState
    gates: dict[str, Matrix]
    s: Matrix
    tanh_s: Matrix


@dataclass
class LstmCache:
    steps: list[LstmStepCache] = field(default_factory=list)
    candidate: str = "sigmoid"


def _lstm_step(x, prev, params, candidate):
    if x.shape != (1, params.input_size):
        raise ShapeError(f"LSTM input must be (1, {params.input_size}), got {x.shape}")
    if prev.h.shape != (1, params.hidden_size) or prev.s.shape != (1, params.hidden_size):
        raise ShapeError("LSTM state does not match hidden size")
    gates = {}
    for g in GATES:
        pre = x @ getattr(params, f"wx_{g}") + prev.h @ getattr(params, f"wh_{g}") + getattr(params, f"b_{g}")
        gates[g] = activate(pre, candidate if g == "s" else "sigmoid")
    s = gates["f"] * prev.s + gates["i"] * gates["s"]
    tanh_s = np.tanh(s)
    h = gates["o"] * tanh_s
    return LstmState(h, s), LstmStepCache(x, prev, gates, s, tanh_s)


def lstm_step(x: Matrix, prev: LstmState, params: LstmParams, candidate: str = "sigmoid") -> LstmState:
    """Advance the cell by one input.

    The candidate cell uses a sigmoid by default; pass ``candidate="tanh"`` for
    the conventional LSTM.
    """
    state, _ = _lstm_step(x, prev, params, candidate)
    return state


def lstm_forward(
    xs: list[Matrix],
    params: LstmParams,
    initial: LstmState | None = None,
    candidate: str = "sigmoid",
) -> tuple[list[LstmState], LstmCache]:
    """Unroll over ``xs`` and return every state plus the cache for BPTT."""
    if not xs:
        raise ShapeError("LSTM input sequence is empty")
    state = initial if initial is not None else LstmState.zeros(params.hidden_size)
    cache = LstmCache(candidate=candidate)
    states = []
    for x in xs:
        state, step = _lstm_step(x, state, params, candidate)
        cache.steps.append(step)
        states.append(state)
    return states, cache


def lstm_backward_through_time(
    dh: list[Matrix | None] | Matrix,
    cache: LstmCache | None,
    params: LstmParams,
) -> tuple[LstmParams, list[Matrix]]:
    """Backpropagate through all unrolled steps.

    ``dh`` is either the gradient w.r.t. the final hidden state or a list with
    one (possibly ``None``) entry per step. Returns accumulated parameter
    gradients and the gradient for each input vector.
    """
    if cache is None or not cache.steps:
        raise UsageError("lstm_backward_through_time called without a forward cache")
    steps = cache.steps
    if isinstance(dh, np.ndarray):
        dh = [None] * (len(steps) - 1) + [dh]
    if len(dh) != len(steps):
        raise ShapeError(f"got {len(dh)} hidden gradients for {len(steps)} steps")

    n_steps = len(steps)
    m_h = params.hidden_size
    # pre-activation gradients per gate, one row per step
    da = {k: np.empty((n_steps, m_h)) for k in GATES}
    dh_next = np.zeros((1, m_h))
    ds_next = np.zeros((1, m_h))
    for t in range(n_steps - 1, -1, -1):
        c = steps[t]
        g = c.gates
        dh_t = dh_next if dh[t] is None else dh_next + dh[t]
        ds = dh_t * g["o"] * (1.0 - c.tanh_s**2) + ds_next
        dgate = {
            "o": dh_t * c.tanh_s,
            "i": ds * g["s"],
            "f": ds * c.prev.s,
            "s": ds * g["i"],
        }
        dh_prev = np.zeros((1, m_h))
        for k in GATES:
            d = dgate[k] * activation_grad(g[k], cache.candidate if k == "s" else "sigmoid")
            da[k][t] = d[0]
            dh_prev += d @ getattr(params, f"wh_{k}").T
        dh_next = dh_prev
        ds_next = ds * g["f"]

    xs = np.concatenate([c.x for c in steps], axis=0)
    hs = np.concatenate([c.prev.h for c in steps], axis=0)
    kw = {}
    dx = np.zeros_like(xs)
    for k in GATES:
        kw[f"wx_{k}"] = xs.T @ da[k]
        kw[f"wh_{k}"] = hs.T @ da[k]
        kw[f"b_{k}"] = da[k].sum(axis=0, keepdims=True)
        dx += da[k] @ getattr(params, f"wx_{k}").T
    return LstmParams(**kw), [dx[t : t + 1] for t in range(n_steps)]


# ---------------------------------------------------------------------------
# optimisation


def rmsprop_update(
    param: Matrix,
    grad: Matrix,
    acc: Matrix,
    lr: float,
    rho: float = 0.9,
    eps: float = 1e-8,
) -> tuple[Matrix, Matrix]:
    """One RMSProp step; returns ``(new_param, new_accumulator)``."""
    if param.shape != grad.shape or param.shape != acc.shape:
        raise ShapeError(f"rmsprop shapes differ: {param.shape}, {grad.shape}, {acc.shape}")
    acc = rho * acc + (1.0 - rho) * grad * grad
    return param - lr * grad / (np.sqrt(acc) + eps), acc


class RmsProp:
    """RMSProp over a whole parameter tree.

    Accumulators are created lazily on the first step and mirror the
    parameter tree's structure.
    """

    def __init__(self, rho: float = 0.9, eps: float = 1e-8):
        self.rho = rho
        self.eps = eps
        self.acc = None

    def step(self, params, grads, lr: float):
        if self.acc is None:
            self.acc = zeros_like(params)
        new_acc = {}

        def update(p, g, a):
            new_p, new_a = rmsprop_update(p, g, a, lr, self.rho, self.eps)
            new_acc[id(p)] = new_a
            return new_p

        new_params = map_params(update, params, grads, self.acc)
        self.acc = map_params(lambda p: new_acc[id(p)], params)
        return new_params


def clip_params(params, c: float):
    """Clamp every entry of a parameter tree into [-c, c]."""
    if c <= 0:
        raise ValueError("clip bound must be positive")
    return map_params(lambda a: np.clip(a, -c, c), params)
