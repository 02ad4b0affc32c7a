"""Command-line entry point (``cfbias``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bias import bias_report
from .dgp import TOY_KINDS, gen_toy
from .ingest import build_empirical_dataset, load_csv, load_dataset, save_dataset
from .policy import SOURCES, PolicySpec, assign


def _cmd_gen_toy(args) -> int:
    ds = gen_toy(args.kind, args.n, args.seed, args.noise_sd)
    save_dataset(ds, args.out, {"generator": "toy", "kind": args.kind, "n": args.n,
                                "seed": args.seed, "noise_sd": args.noise_sd})
    print(f"wrote {args.kind} (n={ds.n}) to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    ds = build_empirical_dataset(load_csv(args.cov), load_csv(args.resp), args.arm0, args.arm1,
                                 args.k, args.standardize_arms, name=args.name)
    save_dataset(ds, args.out, {"cov": str(args.cov), "resp": str(args.resp), "arm0": args.arm0,
                                "arm1": args.arm1, "k": args.k,
                                "standardize_arms": args.standardize_arms})
    print(f"wrote {ds.name} (n={ds.n}, d={ds.d}) to {args.out}")
    return 0


def _cmd_bias(args) -> int:
    ds = load_dataset(args.dataset)
    obs = assign(ds, PolicySpec(args.source, args.beta, args.seed, args.m))
    print(bias_report(obs).to_json())
    return 0


def _cmd_sweep(args) -> int:
    from .harness import load_config, run_sweep

    cfg_path = Path(args.config)
    cfg = load_config(cfg_path)
    out = args.out or cfg.output_dir
    if out is None:
        print("error: no output directory (use --out or output_dir in the config)", file=sys.stderr)
        return 2
    table = run_sweep(cfg, out, workers=args.workers, resume=not args.fresh,
                      base_dir=cfg_path.parent)
    n_fail = len(table.failed)
    print(f"{len(table.rows)} cells, {n_fail} failed; results in {out}")
    return 1 if n_fail else 0


def _cmd_plot(args) -> int:
    from .harness.plots import plot_results_dir

    written = plot_results_dir(args.results, args.out, sources=args.source or None,
                               learners=args.learner or None)
    print(f"wrote {len(written)} SVG files to {args.out}")
    return 0 if written else 1


def _cmd_selftest(args) -> int:
    from .proptests import run_selftest

    verdict = run_selftest(quick=args.quick)
    print(json.dumps(verdict, indent=2, default=float))
    return 0 if verdict["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfbias", description=__doc__)
    p.add_argument("--version", action="version", version=f"cfbias {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-toy", help="write a toy potential-outcome dataset")
    s.add_argument("--kind", choices=TOY_KINDS, required=True)
    s.add_argument("--n", type=int, default=4000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise-sd", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_gen_toy)

    s = sub.add_parser("ingest", help="build a dataset from covariate and response CSVs")
    s.add_argument("--cov", required=True)
    s.add_argument("--resp", required=True)
    s.add_argument("--arm0", required=True)
    s.add_argument("--arm1", required=True)
    s.add_argument("--k", type=int, default=200)
    s.add_argument("--standardize-arms", action="store_true")
    s.add_argument("--name", default="empirical")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_ingest)

    s = sub.add_parser("bias", help="print the bias report of one simulated policy as JSON")
    s.add_argument("--dataset", required=True)
    s.add_argument("--source", choices=SOURCES, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m", type=int, default=20)
    s.set_defaults(func=_cmd_bias)

    s = sub.add_parser("sweep", help="run a configured sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--workers", type=int, help="worker processes (default: $CFBIAS_WORKERS or 1)")
    s.add_argument("--fresh", action="store_true", help="ignore partial results from an earlier run")
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("plot", help="render SVG panels from sweep results")
    s.add_argument("--results", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--source", action="append", help="restrict to a policy source (repeatable)")
    s.add_argument("--learner", action="append", help="restrict to a learner (repeatable)")
    s.set_defaults(func=_cmd_plot)

    s = sub.add_parser("selftest", help="run the property checks and print a JSON verdict")
    s.add_argument("--quick", action="store_true")
    s.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
