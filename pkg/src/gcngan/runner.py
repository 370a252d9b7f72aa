"""Sliding-window train/predict protocol and experiment outputs.

Slices are indexed from 0, matching ``SNAPSHOT t`` in sequence files. With
window length ``l + 1`` the first training step uses snapshots ``0..l`` to
reconstruct snapshot ``l + 1``; each step then predicts the following
snapshot from the last ``l + 1`` snapshots before it is revealed. A sequence
of ``T`` snapshots yields ``T - l - 2`` scored predictions.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import data, metrics
from .baseline import BaselineBundle, baseline_predict, baseline_train_for_slice
from .checkpoint import save_checkpoint
from .linalg import Matrix, make_rng
from .model import GanBundle, TrainConfig, predict, train_for_slice

log = logging.getLogger(__name__)

MODEL_KINDS = ("gcn-gan", "lstm-baseline")
HEATMAP_ZERO = -200.0

# Published optimiser settings and layer widths per dataset.
PRESETS = {
    "ucsb": dict(l2=0.0, threshold=0.01, pretrain_lr=0.005, d_lr=0.001, g_lr=0.001, clip=0.01),
    "kaist": dict(l2=1e-5, threshold=0.01, pretrain_lr=0.01, d_lr=0.0005, g_lr=0.0005, clip=0.01),
    "bj-taxi": dict(l2=1e-5, threshold=0.01, pretrain_lr=0.005, d_lr=0.001, g_lr=0.001, clip=0.01),
    "numfabric": dict(l2=0.0, threshold=0.5, pretrain_lr=0.001, d_lr=0.001, g_lr=0.001, clip=0.01),
}
LAYER_PRESETS = {
    "ucsb": dict(d_hidden=512, baseline_hidden=128),
    "kaist": dict(d_hidden=512, baseline_hidden=128),
    "bj-taxi": dict(d_hidden=1024, baseline_hidden=512),
    "numfabric": dict(d_hidden=1024, baseline_hidden=512),
}


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment: a dataset (file or synthetic), a model and its settings.

    ``g_hidden`` defaults to the node count. ``d_hidden`` and
    ``baseline_hidden`` default to the synthetic-scale widths 64 and 48.
    """

    train: TrainConfig = field(default_factory=TrainConfig)
    dataset: str | None = None
    synthetic: data.SyntheticSpec | None = None
    model: str = "gcn-gan"
    g_hidden: int | None = None
    d_hidden: int = 64
    baseline_hidden: int = 48
    output_dir: str | None = None
    cold_start: bool = False
    refine_baseline: bool = False
    keep_predictions: bool = False

    def __post_init__(self):
        if (self.dataset is None) == (self.synthetic is None):
            raise ExperimentError("give exactly one of dataset or synthetic")
        if self.model not in MODEL_KINDS:
            raise ExperimentError(f"model must be one of {MODEL_KINDS}")

    def load(self) -> data.SnapshotSequence:
        if self.dataset is not None:
            return data.load_sequence(self.dataset)
        return data.generate_synthetic(self.synthetic)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExperimentResult:
    report: metrics.MetricsReport
    predictions: dict[int, Matrix]
    train_losses: list[list[float]]
    timings: dict[str, float]


class _GanModel:
    def __init__(self, cfg: ExperimentConfig, n: int):
        self.cfg = cfg
        self.n = n
        self.rng = make_rng(cfg.train.seed)
        self.bundle = self._fresh()
        self.trained = False

    def _fresh(self) -> GanBundle:
        t = self.cfg.train
        return GanBundle.create(self.rng, self.n, self.cfg.g_hidden, self.cfg.d_hidden, t.rho, t.rms_eps)

    def train(self, history, target, timings):
        if self.cfg.cold_start and self.trained:
            self.bundle = self._fresh()
        self.trained = True
        trace = train_for_slice(self.bundle, history, target, self.cfg.train, self.rng)
        timings["pretrain"] += trace.pretrain_seconds
        timings["adversarial"] += trace.adversarial_seconds
        return trace.pretrain_loss + trace.generator_loss

    def predict(self, window, max_weight):
        t = self.cfg.train
        return predict(self.bundle, window, self.rng, max_weight, t.threshold, t.candidate)

    def checkpoint(self, path):
        params = {"generator": self.bundle.generator, "discriminator": self.bundle.discriminator}
        save_checkpoint(path, "gcn-gan", params, self.cfg.to_dict())


class _BaselineModel:
    def __init__(self, cfg: ExperimentConfig, n: int):
        self.cfg = cfg
        self.n = n
        self.rng = make_rng(cfg.train.seed)
        self.bundle = self._fresh()
        self.trained = False

    def _fresh(self) -> BaselineBundle:
        t = self.cfg.train
        return BaselineBundle.create(self.rng, self.n, self.cfg.baseline_hidden, t.rho, t.rms_eps)

    def train(self, history, target, timings):
        if self.cfg.cold_start and self.trained:
            self.bundle = self._fresh()
        self.trained = True
        t0 = time.perf_counter()
        losses = baseline_train_for_slice(self.bundle, history, target, self.cfg.train)
        timings["pretrain"] += time.perf_counter() - t0
        return losses

    def predict(self, window, max_weight):
        t = self.cfg.train
        eps = t.threshold if self.cfg.refine_baseline else None
        return baseline_predict(self.bundle, window, max_weight, eps, t.candidate)

    def checkpoint(self, path):
        save_checkpoint(path, "lstm-baseline", {"params": self.bundle.params}, self.cfg.to_dict())


def n_predictions(n_slices: int, window: int) -> int:
    return max(0, n_slices - window - 2)


def sliding_window(
    snapshots: Sequence[Matrix],
    max_weight: float,
    cfg: ExperimentConfig,
    on_prediction: Callable[[int, Matrix], None] | None = None,
):
    """Run the alternating train/predict loop over ``snapshots``.

    ``snapshots`` is only indexed, never iterated, and ground truth for slice
    ``t`` is read after the forecast for ``t`` exists. Returns
    ``(scores, predictions, losses, timings, model)``.
    """
    l = cfg.train.window
    T = len(snapshots)
    if T < l + 2:
        raise ExperimentError(f"sequence has {T} snapshots; need at least window + 2 = {l + 2}")
    if n_predictions(T, l) == 0:
        raise ExperimentError("no slices to evaluate")
    n = snapshots[0].shape[0]
    model = (_GanModel if cfg.model == "gcn-gan" else _BaselineModel)(cfg, n)
    timings = {"pretrain": 0.0, "adversarial": 0.0, "predict": 0.0}

    cache: dict[int, Matrix] = {}

    def norm(t: int) -> Matrix:
        if t not in cache:
            cache[t] = snapshots[t] / max_weight
        return cache[t]

    scores, predictions, losses = [], {}, []
    for cur in range(l + 1, T - 1):
        history = [norm(t) for t in range(cur - l - 1, cur)]
        losses.append(model.train(history, norm(cur), timings))

        t0 = time.perf_counter()
        pred = model.predict([norm(t) for t in range(cur - l, cur + 1)], max_weight)
        timings["predict"] += time.perf_counter() - t0
        nxt = cur + 1
        if on_prediction is not None:
            on_prediction(nxt, pred)
        if cfg.keep_predictions:
            predictions[nxt] = pred
        scores.append(metrics.score(nxt, snapshots[nxt], pred))
        log.info("slice %d: mse=%.6g mismatch=%.4f", nxt, scores[-1].mse, scores[-1].mismatch)
    return scores, predictions, losses, timings, model


def run_experiment(cfg: ExperimentConfig, sequence: data.SnapshotSequence | None = None) -> ExperimentResult:
    """Load (or take) the data, run the protocol, and write outputs if configured.

    Output directory contents: ``metrics.csv`` (byte-stable for a fixed seed),
    ``timings.json``, ``config.json``, ``checkpoint.npz`` and, with
    ``keep_predictions``, ``predictions.npz``.
    """
    seq = sequence if sequence is not None else cfg.load()
    start = time.perf_counter()
    scores, predictions, losses, timings, model = sliding_window(seq.snapshots, seq.max_weight, cfg)
    timings["total"] = time.perf_counter() - start
    result = ExperimentResult(metrics.aggregate(scores), predictions, losses, timings)

    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        metrics.write_report_csv(result.report, out / "metrics.csv")
        (out / "timings.json").write_text(json.dumps(timings, indent=2) + "\n")
        (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
        model.checkpoint(out / "checkpoint.npz")
        if cfg.keep_predictions:
            np.savez(out / "predictions.npz", **{f"slice_{t}": p for t, p in predictions.items()})
    return result


def export_heatmap_csv(truth: Matrix, pred_gan: Matrix, pred_baseline: Matrix, path) -> list[Path]:
    """Write ``truth.csv``, ``gcn_gan.csv`` and ``lstm.csv`` with zeros shown as -200."""
    if not (truth.shape == pred_gan.shape == pred_baseline.shape):
        raise ValueError("heatmap matrices must share one shape")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, m in (("truth", truth), ("gcn_gan", pred_gan), ("lstm", pred_baseline)):
        shown = np.where(m == 0, HEATMAP_ZERO, m)
        p = out / f"{name}.csv"
        with p.open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows([[repr(float(v)) for v in row] for row in shown])
        written.append(p)
    return written
