"""``ginv`` command line: datasets, training runs, reproduction suites, groups, invariants.

Exit codes: 0 success, 1 runtime failure, 2 bad input. Failures print one
``error: <message>`` line on stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .data import (
    AREA_COUNTS,
    DEFAULT_MC_SAMPLES,
    DEFAULT_SEED,
    POLY_COUNTS,
    export_csv,
    gen_area_dataset,
    gen_poly_dataset,
    load_dataset,
    save_dataset,
)
from .experiments import (
    SUITES,
    ConfigError,
    ExperimentConfig,
    SuiteOptions,
    load_config,
    run_experiment,
    serialize_config,
    write_outputs,
)
from .invariants import BENCHMARK_NAMES, CandidateExplosion, benchmark_group, generating_candidates
from .models import KINDS
from .permgroup import GroupError, parse_group
from .train import PRECISIONS


class UsageError(Exception):
    """Bad input detected after argument parsing (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _seeds(text: str) -> tuple[int, ...]:
    """``3`` means seeds 0..2; ``1,4,7`` lists them explicitly."""
    try:
        if "," in text:
            return tuple(int(s) for s in text.split(",") if s.strip())
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    if k < 1:
        raise argparse.ArgumentTypeError("need at least one seed")
    return tuple(range(k))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ginv", description="G-invariant networks built from a sum-product layer.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate a .ginvds dataset file")
    g.add_argument("--task", choices=("poly", "area"), required=True)
    g.add_argument("--poly", default="PZ5", choices=BENCHMARK_NAMES)
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES)
    g.add_argument("--counts", help="train,val,test counts")
    g.add_argument("--csv", action="store_true", help="also export each split as CSV")
    g.add_argument("--out", default=".")

    t = sub.add_parser("train", help="train one architecture over several seeds")
    t.add_argument("config", nargs="?", help="experiment config file")
    t.add_argument("--task", choices=("poly", "area"))
    t.add_argument("--poly", choices=BENCHMARK_NAMES)
    t.add_argument("--arch", choices=KINDS)
    t.add_argument("--group")
    t.add_argument("--n-mid", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--seeds", type=_seeds)
    t.add_argument("--seed", type=int, help="dataset seed")
    t.add_argument("--batch", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--l2", type=float)
    t.add_argument("--precision", choices=sorted(PRECISIONS))
    t.add_argument("--mc-samples", type=int)
    t.add_argument("--dataset", help=".ginvds file to train on")
    t.add_argument("--out")
    t.add_argument("--dump-config", action="store_true", help="print the merged config and exit")

    r = sub.add_parser("reproduce", help="run a table or figure reproduction suite")
    r.add_argument("target", choices=sorted(SUITES))
    r.add_argument("--epochs", type=int, help="override the epoch count (smoke runs)")
    r.add_argument("--seeds", type=_seeds)
    r.add_argument("--seed", type=int, default=DEFAULT_SEED, help="dataset seed")
    r.add_argument("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES)
    r.add_argument("--precision", choices=sorted(PRECISIONS), default="f32")
    r.add_argument("--out", default="reports")

    gr = sub.add_parser("group", help="list a permutation group")
    gr.add_argument("spec", help="e.g. Z5, D8, S3xS2, gen:(1 2 3 4);(1 3)")
    gr.add_argument("--zero-based", action="store_true")

    inv = sub.add_parser("invariants", help="list symmetrised invariant candidates")
    inv.add_argument("--group", required=True)
    inv.add_argument("--vars", type=int)
    inv.add_argument("--max-degree", type=int)
    inv.add_argument("--cap", type=int, default=20_000)
    return p


def _parse_counts(text: str | None, default):
    if text is None:
        return default
    try:
        counts = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad counts {text!r}")
    if len(counts) != 3 or min(counts) < 0:
        raise UsageError("counts must be three non-negative integers")
    return counts


def cmd_gen_data(args) -> int:
    if args.mc_samples < 1:
        raise UsageError("--mc-samples must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.task == "poly":
        ds = gen_poly_dataset(args.poly, _parse_counts(args.counts, POLY_COUNTS), args.seed)
        stem = f"{args.poly}_seed{args.seed}"
    else:
        ds = gen_area_dataset(_parse_counts(args.counts, AREA_COUNTS), args.seed, args.mc_samples)
        stem = f"area_seed{args.seed}"
    path = out / f"{stem}.ginvds"
    save_dataset(ds, path)
    print(f"wrote {path} ({'/'.join(map(str, ds.counts))})")
    if args.csv:
        for split in ("train", "val", "test"):
            csv_path = out / f"{stem}_{split}.csv"
            csv_path.write_text(export_csv(ds, split))
            print(f"wrote {csv_path}")
    return 0


_OVERRIDES = {
    "task": "task", "poly": "poly", "arch": "arch", "group": "group", "n_mid": "n_mid",
    "epochs": "epochs", "seeds": "seeds", "seed": "data_seed", "batch": "batch", "lr": "lr",
    "l2": "l2", "precision": "precision", "mc_samples": "mc_samples", "dataset": "dataset",
    "out": "out",
}


def _train_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {dst: getattr(args, src) for src, dst in _OVERRIDES.items() if getattr(args, src) is not None}
    cfg = dataclasses.replace(cfg, **changes)
    if cfg.dataset:
        if not Path(cfg.dataset).exists():
            raise UsageError(f"dataset not found: {cfg.dataset}")
        ds = load_dataset(cfg.dataset)
        cfg = dataclasses.replace(cfg, task=ds.task, poly=ds.meta.get("poly", ""), counts=ds.counts)
    if not args.config:
        # fill dimensions that follow from the task when no config fixed them
        if cfg.task == "area":
            cfg = dataclasses.replace(
                cfg, n=4, n_in=2, counts=cfg.counts if cfg.dataset else AREA_COUNTS,
                group=args.group or "Z4", n_mid=args.n_mid or 2,
                epochs=args.epochs or 300, poly="",
            )
        elif args.group is None:
            cfg = dataclasses.replace(cfg, group=benchmark_group(cfg.poly).label)
        if args.arch == "Conv1D_Ginv" and args.n_mid is None and cfg.task == "poly":
            cfg = dataclasses.replace(cfg, n_mid=118)
        cfg = dataclasses.replace(cfg, name=f"{cfg.task}_{cfg.arch}")
    try:
        return cfg.validate()
    except (ValueError, GroupError) as e:
        raise ConfigError(str(e)) from e


def cmd_train(args) -> int:
    cfg = _train_config(args)
    if args.dump_config:
        print(serialize_config(cfg), end="")
        return 0
    agg = run_experiment(cfg, checkpoint_dir=cfg.out)
    out = write_outputs(cfg, agg, cfg.out)
    m, s = agg.mean, agg.std
    print(f"{cfg.name}: test MAE {m['test_mae']:.6f} ± {s['test_mae']:.6f} "
          f"over {len(agg.runs)} seed(s); params {agg.runs[0].param_count}; outputs in {out}")
    return 0


def cmd_reproduce(args) -> int:
    opts = SuiteOptions(
        epochs=args.epochs, seeds=args.seeds or (tuple(range(5)) if args.target == "fig3" else tuple(range(10))),
        data_seed=args.seed, mc_samples=args.mc_samples, precision=args.precision,
    )
    res = SUITES[args.target](opts)
    out = res.write(args.out)
    print(res.report(), end="")
    print(f"report written to {out}")
    return 0 if res.passed else 1


def cmd_group(args) -> int:
    g = parse_group(args.spec)
    print(f"group {g.label}: degree {g.degree}, order {g.order}")
    for i, p in enumerate(g.elements):
        print(f"{i:>4}  {p.cycle_notation(one_based=not args.zero_based)}  {list(p.mapping)}")
    return 0


def cmd_invariants(args) -> int:
    g = parse_group(args.group)
    polys = generating_candidates(g, args.vars, args.max_degree, cap=args.cap)
    deg = g.order if args.max_degree is None else args.max_degree
    print(f"{len(polys)} invariant candidates for {g.label} up to degree {deg}")
    for p in polys:
        print(p.format())
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "reproduce": cmd_reproduce,
    "group": cmd_group,
    "invariants": cmd_invariants,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, GroupError, FileNotFoundError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {' '.join(str(msg).split())}", file=sys.stderr)
        return 2
    except (CandidateExplosion, RuntimeError, OSError) as e:
        print(f"error: {' '.join(str(e).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
