"""Command line interface: ``gcngan <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import data, runner
from .linalg import ShapeError
from .model import TrainConfig


TRAIN_FLAGS = {
    "window": int,
    "pretrain_lr": float,
    "d_lr": float,
    "g_lr": float,
    "pretrain_iters": int,
    "train_iters": int,
    "clip": float,
    "l2": float,
    "threshold": float,
    "rho": float,
    "rms_eps": float,
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("synthetic network")
    g.add_argument("--nodes", type=int, default=16)
    g.add_argument("--slices", type=int, default=40)
    g.add_argument("--sparsity", type=float, default=0.7)
    g.add_argument("--max-weight", type=float, default=2000.0)
    g.add_argument("--drift", type=float, default=0.1)


def _add_experiment_flags(p: argparse.ArgumentParser, with_model: bool = True) -> None:
    p.add_argument("--data", help="sequence file; omit to generate a synthetic network")
    _add_synth_flags(p)
    g = p.add_argument_group("training")
    g.add_argument("--preset", choices=sorted(runner.PRESETS), help="dataset settings from the reference experiments")
    for name, typ in TRAIN_FLAGS.items():
        g.add_argument(_flag(name), type=typ, default=None)
    g.add_argument("--candidate", choices=("sigmoid", "tanh"), default=None, help="LSTM candidate activation")
    g.add_argument("--critic-sign", choices=("corrected", "printed"), default=None)
    g.add_argument("--g-hidden", type=int, default=None, help="generator LSTM width (default: N)")
    g.add_argument("--d-hidden", type=int, default=None)
    g.add_argument("--baseline-hidden", type=int, default=None)
    g.add_argument("--cold-start", action="store_true", help="re-initialise the model for every slice")
    g.add_argument("--refine-baseline", action="store_true", help="also refine the LSTM baseline output")
    if with_model:
        p.add_argument("--model", choices=runner.MODEL_KINDS, default="gcn-gan")
        p.add_argument("--keep-predictions", action="store_true", help="write predictions.npz")
    p.add_argument("--out", help="output directory")
    _add_seed(p)


def _experiment_config(args, model: str, out: str | None, keep: bool = False) -> runner.ExperimentConfig:
    train = {}
    layers = {}
    if args.preset:
        train.update(runner.PRESETS[args.preset])
        layers.update(runner.LAYER_PRESETS[args.preset])
    for name in list(TRAIN_FLAGS) + ["candidate", "critic_sign"]:
        value = getattr(args, name)
        if value is not None:
            train[name] = value
    train["seed"] = args.seed
    for name in ("g_hidden", "d_hidden", "baseline_hidden"):
        value = getattr(args, name)
        if value is not None:
            layers[name] = value
    if args.data:
        source = dict(dataset=args.data)
    else:
        source = dict(synthetic=_synth_spec(args))
    return runner.ExperimentConfig(
        train=TrainConfig(**train),
        model=model,
        output_dir=out,
        cold_start=args.cold_start,
        refine_baseline=args.refine_baseline,
        keep_predictions=keep,
        **source,
        **layers,
    )


def _synth_spec(args) -> data.SyntheticSpec:
    return data.SyntheticSpec(args.nodes, args.slices, args.sparsity, args.max_weight, args.drift, args.seed)


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.6g}"


# ---------------------------------------------------------------------------
# commands


def cmd_preprocess(args) -> None:
    seq = data.preprocess_distances(data.load_distances(args.input), data.PreprocessConfig(args.delta))
    data.save_sequence(seq, args.output)
    print(f"wrote {len(seq)} snapshots of {seq.n_nodes} nodes to {args.output}")


def cmd_stats(args) -> None:
    seq = data.load_sequence(args.input)
    counts, edges = data.weight_histogram(seq, args.bins)
    print(f"nodes      {seq.n_nodes}")
    print(f"slices     {len(seq)}")
    print(f"max_weight {seq.max_weight:g}")
    print(f"sparsity   {data.sparsity(seq):.4f}")
    print("weight histogram (non-zero edges, upper triangle):")
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        print(f"  ({lo:g}, {hi:g}]  {c}")


def cmd_synth(args) -> None:
    seq = data.generate_synthetic(_synth_spec(args))
    data.save_sequence(seq, args.output)
    print(f"wrote {len(seq)} snapshots of {seq.n_nodes} nodes to {args.output} (sparsity {data.sparsity(seq):.4f})")


def cmd_run(args) -> None:
    cfg = _experiment_config(args, args.model, args.out, args.keep_predictions)
    result = runner.run_experiment(cfg)
    r = result.report
    print(f"{cfg.model}: {len(r.per_slice)} slices  mse {_fmt(r.mse)}  kl {_fmt(r.kl)}  mismatch {_fmt(r.mismatch)}")
    if args.out:
        print(f"report written to {Path(args.out) / 'metrics.csv'}")


def _run_both(args, keep: bool):
    seq = None
    results = {}
    for kind in runner.MODEL_KINDS:
        out = str(Path(args.out) / kind) if args.out else None
        cfg = _experiment_config(args, kind, out, keep)
        if seq is None:
            seq = cfg.load()
        results[kind] = runner.run_experiment(cfg, seq)
    return seq, results


def cmd_compare(args) -> None:
    _, results = _run_both(args, keep=False)
    rows = [(k, r.report.mse, r.report.kl, r.report.mismatch) for k, r in results.items()]
    print(f"{'model':<14} {'mse':>12} {'kl':>12} {'mismatch':>10}")
    for kind, m, kl, mm in rows:
        print(f"{kind:<14} {_fmt(m):>12} {_fmt(kl):>12} {_fmt(mm):>10}")
    if args.out:
        path = Path(args.out) / "compare.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "mse", "kl", "mismatch"])
            for kind, m, kl, mm in rows:
                w.writerow([kind, repr(m), "nan" if kl is None else repr(kl), repr(mm)])
        print(f"table written to {path}")


def cmd_export_case(args) -> None:
    if not args.out:
        raise ValueError("export-case needs --out")
    seq, results = _run_both(args, keep=True)
    preds = {k: r.predictions for k, r in results.items()}
    available = sorted(preds["gcn-gan"])
    t = available[-1] if args.slice is None else args.slice
    if t not in preds["gcn-gan"]:
        raise ValueError(f"slice {t} was not predicted; choose from {available[0]}..{available[-1]}")
    paths = runner.export_heatmap_csv(seq[t], preds["gcn-gan"][t], preds["lstm-baseline"][t], args.out)
    print(f"slice {t}: " + ", ".join(str(p) for p in paths))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcngan", description="Temporal link prediction for weighted dynamic networks")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress per slice")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="distance file -> weighted sequence file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--delta", type=float, required=True, help="distance threshold, also the max weight")
    _add_seed(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("stats", help="sparsity and weight histogram of a sequence file")
    p.add_argument("input")
    p.add_argument("--bins", type=int, default=10)
    _add_seed(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a synthetic sequence file")
    p.add_argument("output")
    _add_synth_flags(p)
    _add_seed(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="sliding-window experiment for one model")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run GCN-GAN and the LSTM baseline on one dataset")
    _add_experiment_flags(p, with_model=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-case", help="heat-map CSVs of truth and both predictions for one slice")
    _add_experiment_flags(p, with_model=False)
    p.add_argument("--slice", type=int, default=None, help="0-based slice index (default: last)")
    p.set_defaults(func=cmd_export_case)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError, ShapeError) as exc:
        print(f"gcngan {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
