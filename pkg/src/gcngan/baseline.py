"""Plain LSTM comparator: no GCN layer, no critic, trained on squared error."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .linalg import Matrix, ShapeError, reshape_rowwise
from .model import TrainConfig, _check_slice, refine
from .nn import DenseParams, LstmParams, RmsProp


@dataclass
class LstmBaselineParams:
    lstm: LstmParams
    output: DenseParams

    def __post_init__(self):
        m_i = self.lstm.input_size
        if self.output.weight.shape != (self.lstm.hidden_size, m_i):
            raise ShapeError("baseline output layer must map hidden size back to N^2")

    @property
    def n_nodes(self) -> int:
        return int(round(self.lstm.input_size**0.5))


def init_baseline(rng: np.random.Generator, n_nodes: int, hidden: int) -> LstmBaselineParams:
    return LstmBaselineParams(
        lstm=nn.init_lstm(rng, n_nodes * n_nodes, hidden),
        output=nn.init_dense(rng, hidden, n_nodes * n_nodes),
    )


@dataclass
class BaselineCache:
    lstm: nn.LstmCache
    output: nn.DenseCache


def baseline_forward(
    window: list[Matrix], params: LstmBaselineParams, candidate: str = "sigmoid"
) -> tuple[Matrix, BaselineCache]:
    """Feed each flattened snapshot to the LSTM; decode the last hidden state."""
    if not window:
        raise ShapeError("window must contain at least one snapshot")
    n = params.n_nodes
    xs = []
    for k, a in enumerate(window):
        if a.shape != (n, n):
            raise ShapeError(f"snapshot {k} has shape {a.shape}, expected {(n, n)}")
        xs.append(reshape_rowwise(a, 1, n * n))
    states, lstm_cache = nn.lstm_forward(xs, params.lstm, candidate=candidate)
    flat, out_cache = nn.dense_forward(states[-1].h, params.output, "sigmoid")
    return reshape_rowwise(flat, n, n), BaselineCache(lstm_cache, out_cache)


def baseline_loss_and_grad(
    params: LstmBaselineParams, window: list[Matrix], target: Matrix, candidate: str = "sigmoid"
) -> tuple[float, LstmBaselineParams]:
    out, cache = baseline_forward(window, params, candidate)
    diff = out - target
    d_out, dh = nn.dense_backward(reshape_rowwise(2.0 * diff, 1, diff.size), cache.output, params.output)
    d_lstm, _ = nn.lstm_backward_through_time(dh, cache.lstm, params.lstm)
    return float(np.sum(diff * diff)), LstmBaselineParams(d_lstm, d_out)


@dataclass
class BaselineBundle:
    params: LstmBaselineParams
    opt: RmsProp

    @classmethod
    def create(cls, rng: np.random.Generator, n_nodes: int, hidden: int, rho: float = 0.9, eps: float = 1e-8):
        return cls(init_baseline(rng, n_nodes, hidden), RmsProp(rho, eps))


def baseline_train_for_slice(
    bundle: BaselineBundle, history: list[Matrix], target: Matrix, cfg: TrainConfig
) -> list[float]:
    """RMSProp on the squared error for ``pretrain_iters + train_iters`` steps at ``pretrain_lr``.

    The step budget matches one GCN-GAN slice. Returns the loss before each step.
    """
    _check_slice(history, target, cfg)
    losses = []
    for _ in range(cfg.pretrain_iters + cfg.train_iters):
        loss, grads = baseline_loss_and_grad(bundle.params, history, target, cfg.candidate)
        bundle.params = bundle.opt.step(bundle.params, grads, cfg.pretrain_lr)
        losses.append(loss)
    return losses


def baseline_predict(
    bundle: BaselineBundle,
    window: list[Matrix],
    max_weight: float,
    eps: float | None = None,
    candidate: str = "sigmoid",
) -> Matrix:
    """Renormalised forecast. Unrefined unless ``eps`` is given."""
    out, _ = baseline_forward(window, bundle.params, candidate)
    out = out * max_weight
    return out if eps is None else refine(out, eps * max_weight)
