"""Command line entry point: ``superres run | sweep-f | fit-pla | preset``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .harness import (PRESETS, ConfigError, emit_results, estimate_pla_exponent,
                      load_config, read_results_csv, run_experiment,
                      sweep_superresolution_factor)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superres", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    for name, help_ in (("run", "run one experiment batch"),
                        ("sweep-f", "run a batch across several super-resolution factors")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--config", required=True, help="JSON experiment config")
        c.add_argument("--seed", type=int, help="override master_seed")
        c.add_argument("--out", default="results", help="output directory")
        c.add_argument("--trials", type=int, help="override trial count")
        c.add_argument("--threads", type=int, default=1, help="worker processes")
        c.add_argument("--timings", action="store_true",
                       help="write runtime_ms (output is then not byte-reproducible)")
        c.add_argument("--plot", action="store_true", help="also render PNG plots")
        if name == "sweep-f":
            c.add_argument("--F", help="comma-separated factors overriding F_list")

    c = sub.add_parser("fit-pla", help="fit error ~ F^alpha per algorithm from results.csv")
    c.add_argument("--in", dest="path", required=True)
    c.add_argument("--eta", type=float, help="use the filtered error at this eta")
    c.add_argument("--max-F", type=int, help="restrict the fit to F <= max-F")

    c = sub.add_parser("preset", help="print a bundled experiment config as JSON")
    c.add_argument("name", choices=sorted(PRESETS))
    return p


def _experiment(args) -> dict:
    config = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if getattr(args, "F", None):
        changes["F_list"] = tuple(int(v) for v in args.F.split(","))
    if changes:
        config = dataclasses.replace(config, **changes)
    if args.command == "sweep-f":
        if len(config.F_list) < 2:
            raise ConfigError("sweep-f needs at least two values in F_list")
        table = sweep_superresolution_factor(config, args.threads)
    else:
        table = run_experiment(config, args.threads)
    files = emit_results(table, args.out, timings=args.timings, render=args.plot)
    return {"rows": len(table.rows), "files": [str(f) for f in files]}


def _fit(args) -> dict:
    table = read_results_csv(args.path)
    metric = "unfiltered" if args.eta is None else "filtered"
    agg = table.aggregate(metric, args.eta)
    series: dict[tuple, list] = {}
    for (alg, F, snr), a in agg.items():
        if args.max_F is None or F <= args.max_F:
            series.setdefault((alg, snr), []).append((F, a["median"]))
    fits = []
    for (alg, snr), pts in series.items():
        pts.sort()
        F, err = np.array(pts).T
        alpha = estimate_pla_exponent(err, F) if len(pts) >= 2 else None
        fits.append({"algorithm": alg, "snr": snr, "eta": args.eta,
                     "F": F.astype(int).tolist(), "median_error": err.tolist(),
                     "alpha": alpha})
    return {"fits": fits}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "preset":
            out = PRESETS[args.name].to_dict()
        elif args.command == "fit-pla":
            out = _fit(args)
        else:
            out = _experiment(args)
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2 if isinstance(exc, (ConfigError, ValueError, OSError)) else 1
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
