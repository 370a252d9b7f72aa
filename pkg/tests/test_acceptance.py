"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPT <k> PASS|FAIL ...`` line to the terminal
whatever the capture mode, then asserts. Tolerances are fixed here and must
not be relaxed.
"""
import statistics
import time

import numpy as np
import pytest

from gcngan import data, metrics, model, runner
from gcngan.cli import main
from gcngan.data import SyntheticSpec
from gcngan.linalg import make_rng
from gcngan.model import TrainConfig
from gcngan.runner import ExperimentConfig

from helpers import finite_difference, gradient_mismatches, loop_kl, loop_mismatch, loop_mse, random_window

FD_H = 1e-5
FD_RTOL = 1e-4
FD_ATOL = 1e-7
ORACLE_TOL = 1e-12
CLIP = 0.01
SEEDS = range(5)
SYNTH = dict(n_nodes=16, n_slices=40, target_sparsity=0.7, drift_rate=0.1)
WINDOW = 10


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPT {k:>2} {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_1_gradient_audit(report):
    start = time.perf_counter()
    rng = make_rng(1)
    g = model.init_generator(rng, 6, 4)
    d = model.init_discriminator(rng, 6, 8)
    window = random_window(rng, 6, 3)
    target = random_window(rng, 6, 1)[0]
    z = rng.random((6, 6))
    fake, _ = model.generator_forward(z, window, g)

    def pre(p):
        return model.pretrain_loss(p, z, window, target, l2=0.01)

    def critic(p):
        return model.critic_loss(p, target, fake)

    def adv(p):
        return model.generator_adv_loss(d, model.generator_forward(z, window, p)[0])

    bad = []
    bad += gradient_mismatches(model.pretrain_loss_and_grad(g, z, window, target, 0.01)[1],
                               finite_difference(pre, g, FD_H), FD_RTOL, FD_ATOL)
    bad += gradient_mismatches(model.critic_loss_and_grad(d, target, fake)[1],
                               finite_difference(critic, d, FD_H), FD_RTOL, FD_ATOL)
    bad += gradient_mismatches(model.generator_adv_loss_and_grad(g, d, z, window)[1],
                               finite_difference(adv, g, FD_H), FD_RTOL, FD_ATOL)
    elapsed = time.perf_counter() - start
    report(1, not bad and elapsed < 10, f"gradient audit: {len(bad)} mismatched entries, {elapsed:.2f}s (< 10s)")


def test_2_metric_oracles(report):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        t = rng.random((10, 10)) * (rng.random((10, 10)) < 0.6)
        p = rng.random((10, 10)) * (rng.random((10, 10)) < 0.6)
        tl, pl = t.tolist(), p.tolist()
        worst = max(worst,
                    abs(metrics.mse(t, p) - loop_mse(tl, pl)),
                    abs(metrics.edgewise_kl(t, p) - loop_kl(tl, pl)),
                    abs(metrics.mismatch_rate(t, p) - loop_mismatch(tl, pl)))
    x = rng.random((10, 10))
    scaled = [metrics.edgewise_kl(x, k * x) for k in (0.5, 2.0, 10.0)]
    ok = worst <= ORACLE_TOL and all(abs(v) <= ORACLE_TOL for v in scaled)
    report(2, ok, f"metric oracles: max deviation {worst:.2e} (<= 1e-12), max |KL(x, kx)| {max(map(abs, scaled)):.1e} (<= 1e-12)")


def test_3_refine_invariants(report):
    rng = np.random.default_rng(3)
    failures = 0
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        a = rng.random((n, n)) * rng.choice([1.0, 100.0])
        eps = float(rng.random()) * a.max(initial=0.0)
        r = model.refine(a, eps)
        ok = (np.array_equal(r, r.T) and np.all(np.diag(r) == 0)
              and np.all((r == 0) | (r >= eps)) and np.array_equal(model.refine(r, eps), r))
        failures += not ok
    report(3, failures == 0, f"refine invariants: {failures}/1000 matrices violate")


def test_4_clipping(report):
    rng = make_rng(4)
    seq = data.generate_synthetic(SyntheticSpec(8, 6, 0.5, 100.0, 0.1, seed=4))
    norm, _ = data.normalize(seq)
    bundle = model.GanBundle.create(rng, 8, None, 16)
    cfg = TrainConfig(window=4, pretrain_iters=0, train_iters=500, clip=CLIP)
    trace = model.train_for_slice(bundle, norm[:5], norm[5], cfg, rng)
    worst = max(trace.critic_max_abs)
    ok = len(trace.critic_max_abs) == 500 and worst <= CLIP
    report(4, ok, f"clipping: max|theta_D| over {len(trace.critic_max_abs)} updates = {worst:.6g} (<= {CLIP})")


def test_5_descent(report):
    start = time.perf_counter()
    results = []
    for seed in SEEDS:
        seq = data.generate_synthetic(SyntheticSpec(max_weight=2000.0, seed=seed, **SYNTH))
        norm, _ = data.normalize(seq)
        bundle = model.GanBundle.create(make_rng(seed), 16, None, 64)
        cfg = TrainConfig(window=WINDOW, pretrain_iters=200, train_iters=0, pretrain_lr=0.005, seed=seed)
        trace = model.train_for_slice(bundle, norm[:WINDOW + 1], norm[WINDOW + 1], cfg, make_rng(seed))
        results.append(trace.pretrain_loss[-1] < trace.pretrain_loss[0])
    elapsed = time.perf_counter() - start
    ok = all(results) and elapsed < 60
    report(5, ok, f"descent: {sum(results)}/5 seeds decrease over 200 steps, {elapsed:.1f}s (< 60s)")


@pytest.fixture(scope="module")
def comparison():
    start = time.perf_counter()
    out = {kind: [] for kind in runner.MODEL_KINDS}
    for seed in SEEDS:
        spec = SyntheticSpec(max_weight=2000.0, seed=seed, **SYNTH)
        seq = data.generate_synthetic(spec)
        train = TrainConfig(window=WINDOW, pretrain_iters=50, train_iters=50, seed=seed, **runner.PRESETS["ucsb"])
        for kind in runner.MODEL_KINDS:
            cfg = ExperimentConfig(train=train, synthetic=spec, model=kind, d_hidden=64, baseline_hidden=48)
            out[kind].append(runner.run_experiment(cfg, seq).report)
    return out, time.perf_counter() - start


def test_6_mismatch_direction(report, comparison):
    reports, elapsed = comparison
    gan = statistics.median(r.mismatch for r in reports["gcn-gan"])
    base = statistics.median(r.mismatch for r in reports["lstm-baseline"])
    ok = gan < base and base > 0.5 and gan < 0.2 and elapsed < 300
    report(6, ok, f"median mismatch: GCN-GAN {gan:.4f} (< 0.2), LSTM {base:.4f} (> 0.5), {elapsed:.0f}s (< 300s)")


def test_7_mse_parity(report, comparison):
    reports, _ = comparison
    gan = statistics.median(r.mse for r in reports["gcn-gan"])
    base = statistics.median(r.mse for r in reports["lstm-baseline"])
    report(7, gan <= 1.5 * base, f"median MSE: GCN-GAN {gan:.6g} <= 1.5 x LSTM {base:.6g}")


class _AccessLog:
    def __init__(self, snaps):
        self._snaps = snaps
        self.reads = []

    def __len__(self):
        return len(self._snaps)

    def __getitem__(self, t):
        self.reads.append(t)
        return self._snaps[t]


def test_8_protocol(report):
    spec = SyntheticSpec(max_weight=2000.0, seed=0, **SYNTH)
    seq = data.generate_synthetic(spec)
    logged = _AccessLog(seq.snapshots)
    violations = []

    def check(t, pred):
        if max(logged.reads) >= t:
            violations.append(t)

    cfg = ExperimentConfig(train=TrainConfig(window=WINDOW, pretrain_iters=1, train_iters=1), synthetic=spec)
    scores, *_ = runner.sliding_window(logged, seq.max_weight, cfg, check)
    ok = len(scores) == 28 and not violations
    report(8, ok, f"protocol: {len(scores)} predictions scored (== 28), {len(violations)} causality violations")


def test_9_determinism(report, tmp_path):
    args = ["run", "--nodes", "8", "--slices", "10", "--window", "3", "--pretrain-iters", "5",
            "--train-iters", "5", "--d-hidden", "16", "--seed", "9"]
    codes = [main([*args, "--out", str(tmp_path / name)]) for name in ("a", "b")]
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    b = (tmp_path / "b" / "metrics.csv").read_bytes()
    report(9, codes == [0, 0] and a == b, f"determinism: metrics.csv byte-identical = {a == b}")


DISTANCES = """TLPDIST 1 4 1
SNAPSHOT 0
0 100 250 0
100 0 300 249.5
250 300 0 10
0 249.5 10 0
"""

EXPECTED = np.array([
    [0.0, 150.0, 0.0, 250.0],
    [150.0, 0.0, 0.0, 0.5],
    [0.0, 0.0, 0.0, 240.0],
    [250.0, 0.5, 240.0, 0.0],
])


def test_10_distance_fixture(report, tmp_path):
    src = tmp_path / "dist.txt"
    src.write_text(DISTANCES)
    code = main(["preprocess", str(src), str(tmp_path / "seq.txt"), "--delta", "250"])
    seq = data.load_sequence(tmp_path / "seq.txt")
    ok = code == 0 and seq.max_weight == 250.0 and np.array_equal(seq[0], EXPECTED)
    report(10, ok, "distance fixture: weights equal the hand-computed matrix" if ok else f"got\n{seq[0]}")
