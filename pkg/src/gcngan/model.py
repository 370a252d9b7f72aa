"""GCN-GAN generator, critic, losses, per-slice training and prediction."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .linalg import Matrix, ShapeError, check_same_shape, check_square, reshape_rowwise, uniform_noise
from .nn import DenseParams, GcnLayerParams, LstmParams, RmsProp


@dataclass
class GeneratorParams:
    gcn: GcnLayerParams
    lstm: LstmParams
    output: DenseParams

    @property
    def n_nodes(self) -> int:
        return self.gcn.weight.shape[0]


@dataclass
class DiscriminatorParams:
    hidden: DenseParams
    output: DenseParams

    def __post_init__(self):
        if self.output.weight.shape[1] != 1:
            raise ShapeError("critic output layer must have exactly one unit")


@dataclass
class TrainConfig:
    """Optimisation settings for one GCN-GAN run.

    ``window`` is the number of historical snapshots before the current one,
    so each training input holds ``window + 1`` snapshots. ``threshold`` is the
    refinement cut-off in the normalised [0, 1] domain.
    """

    window: int = 10
    pretrain_lr: float = 0.005
    d_lr: float = 0.001
    g_lr: float = 0.001
    pretrain_iters: int = 100
    train_iters: int = 100
    clip: float = 0.01
    l2: float = 0.0
    threshold: float = 0.01
    seed: int = 0
    rho: float = 0.9
    rms_eps: float = 1e-8
    candidate: str = "sigmoid"
    critic_sign: str = "corrected"

    def __post_init__(self):
        for name in ("pretrain_lr", "d_lr", "g_lr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.clip > 0:
            raise ValueError("clip must be positive")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.pretrain_iters < 0 or self.train_iters < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.candidate not in ("sigmoid", "tanh"):
            raise ValueError("candidate must be 'sigmoid' or 'tanh'")
        if self.critic_sign not in ("corrected", "printed"):
            raise ValueError("critic_sign must be 'corrected' or 'printed'")


def init_generator(
    rng: np.random.Generator, n_nodes: int, hidden: int | None = None, gcn_out: int | None = None
) -> GeneratorParams:
    """Xavier-initialised generator; sizes default to the (N x N)-N-N^2 layout."""
    hidden = n_nodes if hidden is None else hidden
    gcn_out = n_nodes if gcn_out is None else gcn_out
    return GeneratorParams(
        gcn=nn.init_gcn(rng, n_nodes, gcn_out),
        lstm=nn.init_lstm(rng, n_nodes * gcn_out, hidden),
        output=nn.init_dense(rng, hidden, n_nodes * n_nodes),
    )


def init_discriminator(rng: np.random.Generator, n_nodes: int, hidden: int) -> DiscriminatorParams:
    return DiscriminatorParams(
        hidden=nn.init_dense(rng, n_nodes * n_nodes, hidden),
        output=nn.init_dense(rng, hidden, 1),
    )


# ---------------------------------------------------------------------------
# forward / backward


@dataclass
class GeneratorCache:
    gcn: list[nn.GcnCache]
    lstm: nn.LstmCache
    output: nn.DenseCache


def generator_forward(
    z: Matrix,
    window: list[Matrix],
    params: GeneratorParams,
    candidate: str = "sigmoid",
    filters: list[Matrix] | None = None,
) -> tuple[Matrix, GeneratorCache]:
    """Map noise plus a window of normalised snapshots to the next snapshot.

    The same GCN weight is applied to every snapshot; the LSTM starts from
    the zero state and its last hidden state feeds a sigmoid output layer.
    """
    if not window:
        raise ShapeError("window must contain at least one snapshot")
    n = params.n_nodes
    if z.shape != (n, n):
        raise ShapeError(f"noise must be {(n, n)}, got {z.shape}")
    gcn_caches, xs = [], []
    for k, a in enumerate(window):
        if a.shape != (n, n):
            raise ShapeError(f"snapshot {k} has shape {a.shape}, expected {(n, n)}")
        filt = None if filters is None else filters[k]
        x, c = nn.gcn_forward(z, a, params.gcn, "sigmoid", filt=filt)
        gcn_caches.append(c)
        xs.append(reshape_rowwise(x, 1, x.size))
    states, lstm_cache = nn.lstm_forward(xs, params.lstm, candidate=candidate)
    flat, out_cache = nn.dense_forward(states[-1].h, params.output, "sigmoid")
    return reshape_rowwise(flat, n, n), GeneratorCache(gcn_caches, lstm_cache, out_cache)


def generator_backward(dout: Matrix, cache: GeneratorCache | None, params: GeneratorParams) -> GeneratorParams:
    if cache is None:
        raise nn.UsageError("generator_backward called without a forward cache")
    d_out, dh = nn.dense_backward(reshape_rowwise(dout, 1, dout.size), cache.output, params.output)
    d_lstm, dxs = nn.lstm_backward_through_time(dh, cache.lstm, params.lstm)
    d_gcn = np.zeros_like(params.gcn.weight)
    for dx, c in zip(dxs, cache.gcn):
        g, _ = nn.gcn_backward(reshape_rowwise(dx, *c.out.shape), c, params.gcn)
        d_gcn += g.weight
    return GeneratorParams(GcnLayerParams(d_gcn), d_lstm, d_out)


@dataclass
class DiscriminatorCache:
    hidden: nn.DenseCache
    output: nn.DenseCache
    shape: tuple[int, int]


def discriminator_forward(a: Matrix, params: DiscriminatorParams) -> tuple[float, DiscriminatorCache]:
    """Critic score: sigmoid hidden layer over the row-wise vector, linear output."""
    width = params.hidden.weight.shape[0]
    if a.size != width:
        raise ShapeError(f"critic expects {width} entries, got matrix {a.shape}")
    h, hc = nn.dense_forward(reshape_rowwise(a, 1, a.size), params.hidden, "sigmoid")
    y, oc = nn.dense_forward(h, params.output, "linear")
    return float(y[0, 0]), DiscriminatorCache(hc, oc, a.shape)


def discriminator_backward(
    dscore: float, cache: DiscriminatorCache | None, params: DiscriminatorParams
) -> tuple[DiscriminatorParams, Matrix]:
    if cache is None:
        raise nn.UsageError("discriminator_backward called without a forward cache")
    d_out, dh = nn.dense_backward(np.array([[dscore]]), cache.output, params.output)
    d_hidden, da = nn.dense_backward(dh, cache.hidden, params.hidden)
    return DiscriminatorParams(d_hidden, d_out), reshape_rowwise(da, *cache.shape)


# ---------------------------------------------------------------------------
# losses


def pretrain_loss_and_grad(
    params: GeneratorParams,
    z: Matrix,
    window: list[Matrix],
    target: Matrix,
    l2: float = 0.0,
    candidate: str = "sigmoid",
    filters: list[Matrix] | None = None,
) -> tuple[float, GeneratorParams]:
    """Squared reconstruction error plus ``l2/2`` times the squared parameter norm."""
    out, cache = generator_forward(z, window, params, candidate, filters)
    check_same_shape(out, target, "prediction and target")
    diff = out - target
    loss = float(np.sum(diff * diff)) + 0.5 * l2 * nn.sum_of_squares(params)
    grads = generator_backward(2.0 * diff, cache, params)
    if l2:
        grads = nn.map_params(lambda g, p: g + l2 * p, grads, params)
    return loss, grads


def pretrain_loss(params, z, window, target, l2=0.0, candidate="sigmoid") -> float:
    out, _ = generator_forward(z, window, params, candidate)
    check_same_shape(out, target, "prediction and target")
    return float(np.sum((out - target) ** 2)) + 0.5 * l2 * nn.sum_of_squares(params)


def critic_loss(d_params: DiscriminatorParams, real: Matrix, fake: Matrix, sign: str = "corrected") -> float:
    """``D(fake) - D(real)`` (the sign a Wasserstein critic minimises).

    ``sign="printed"`` returns ``D(real) - D(fake)`` instead.
    """
    check_same_shape(real, fake, "real and fake snapshots")
    d_real, _ = discriminator_forward(real, d_params)
    d_fake, _ = discriminator_forward(fake, d_params)
    value = d_fake - d_real
    return value if sign == "corrected" else -value


def critic_loss_and_grad(
    d_params: DiscriminatorParams, real: Matrix, fake: Matrix, sign: str = "corrected"
) -> tuple[float, DiscriminatorParams]:
    check_same_shape(real, fake, "real and fake snapshots")
    k = 1.0 if sign == "corrected" else -1.0
    d_real, c_real = discriminator_forward(real, d_params)
    d_fake, c_fake = discriminator_forward(fake, d_params)
    g_fake, _ = discriminator_backward(k, c_fake, d_params)
    g_real, _ = discriminator_backward(-k, c_real, d_params)
    return k * (d_fake - d_real), nn.add_params(g_fake, g_real)


def generator_adv_loss(d_params: DiscriminatorParams, fake: Matrix) -> float:
    return -discriminator_forward(fake, d_params)[0]


def generator_adv_loss_and_grad(
    g_params: GeneratorParams,
    d_params: DiscriminatorParams,
    z: Matrix,
    window: list[Matrix],
    candidate: str = "sigmoid",
    filters: list[Matrix] | None = None,
) -> tuple[float, GeneratorParams]:
    """``-D(G(z, window))`` and its gradient with respect to the generator."""
    fake, g_cache = generator_forward(z, window, g_params, candidate, filters)
    score, d_cache = discriminator_forward(fake, d_params)
    _, dfake = discriminator_backward(-1.0, d_cache, d_params)
    return -score, generator_backward(dfake, g_cache, g_params)


# ---------------------------------------------------------------------------
# training


@dataclass
class GanBundle:
    """Everything one training run owns: both networks and their optimisers."""

    generator: GeneratorParams
    discriminator: DiscriminatorParams
    pretrain_opt: RmsProp
    gen_opt: RmsProp
    disc_opt: RmsProp

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        n_nodes: int,
        g_hidden: int | None = None,
        d_hidden: int = 64,
        rho: float = 0.9,
        eps: float = 1e-8,
    ) -> "GanBundle":
        return cls(
            init_generator(rng, n_nodes, g_hidden),
            init_discriminator(rng, n_nodes, d_hidden),
            RmsProp(rho, eps),
            RmsProp(rho, eps),
            RmsProp(rho, eps),
        )


@dataclass
class TrainTrace:
    pretrain_loss: list[float] = field(default_factory=list)
    critic_loss: list[float] = field(default_factory=list)
    generator_loss: list[float] = field(default_factory=list)
    critic_max_abs: list[float] = field(default_factory=list)
    pretrain_seconds: float = 0.0
    adversarial_seconds: float = 0.0


def _check_slice(history: list[Matrix], target: Matrix, cfg: TrainConfig) -> None:
    if len(history) != cfg.window + 1:
        raise ShapeError(f"expected {cfg.window + 1} history snapshots, got {len(history)}")
    n = check_square(target, "target")
    for k, a in enumerate(history):
        if a.shape != (n, n):
            raise ShapeError(f"history snapshot {k} has shape {a.shape}, expected {(n, n)}")


def train_for_slice(
    bundle: GanBundle,
    history: list[Matrix],
    target: Matrix,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> TrainTrace:
    """Pre-train G on the reconstruction loss, then alternate critic/generator steps.

    ``history`` holds the ``window + 1`` normalised snapshots preceding
    ``target``. The bundle is updated in place; the returned trace records the
    loss before each update and the critic's largest entry after clipping.
    """
    _check_slice(history, target, cfg)
    n = target.shape[0]
    filters = [nn.gcn_filter(a) for a in history]
    trace = TrainTrace()

    t0 = time.perf_counter()
    for _ in range(cfg.pretrain_iters):
        z = uniform_noise(rng, n, n)
        loss, grads = pretrain_loss_and_grad(
            bundle.generator, z, history, target, cfg.l2, cfg.candidate, filters
        )
        bundle.generator = bundle.pretrain_opt.step(bundle.generator, grads, cfg.pretrain_lr)
        trace.pretrain_loss.append(loss)
    t1 = time.perf_counter()
    trace.pretrain_seconds = t1 - t0

    for _ in range(cfg.train_iters):
        z = uniform_noise(rng, n, n)
        fake, _ = generator_forward(z, history, bundle.generator, cfg.candidate, filters)
        loss, grads = critic_loss_and_grad(bundle.discriminator, target, fake, cfg.critic_sign)
        bundle.discriminator = nn.clip_params(
            bundle.disc_opt.step(bundle.discriminator, grads, cfg.d_lr), cfg.clip
        )
        trace.critic_loss.append(loss)
        trace.critic_max_abs.append(nn.max_abs(bundle.discriminator))

        z = uniform_noise(rng, n, n)
        loss, grads = generator_adv_loss_and_grad(
            bundle.generator, bundle.discriminator, z, history, cfg.candidate, filters
        )
        bundle.generator = bundle.gen_opt.step(bundle.generator, grads, cfg.g_lr)
        trace.generator_loss.append(loss)
    trace.adversarial_seconds = time.perf_counter() - t1

    return trace


def refine(a: Matrix, eps: float) -> Matrix:
    """Symmetrise, zero the diagonal, then zero every entry below ``eps``."""
    check_square(a, "prediction")
    out = (a + a.T) / 2.0
    np.fill_diagonal(out, 0.0)
    out[out < eps] = 0.0
    return out


def predict(
    bundle: GanBundle,
    window: list[Matrix],
    rng: np.random.Generator,
    max_weight: float,
    eps: float,
    candidate: str = "sigmoid",
) -> Matrix:
    """Forecast the next snapshot in real weight units, refined.

    ``eps`` is in the normalised domain, so the cut-off applied after
    renormalisation is ``eps * max_weight``.
    """
    n = bundle.generator.n_nodes
    z = uniform_noise(rng, n, n)
    out, _ = generator_forward(z, window, bundle.generator, candidate)
    return refine(out * max_weight, eps * max_weight)
