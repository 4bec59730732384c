"""Command line entry point: ``thinmach {simulate,sweep,acoustics,verify,rates}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .config import ExperimentConfig, dump_config, load_config, validate
from .errors import ConfigError


def _config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.out:
        over["out"] = args.out
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "eps", None) is not None and args.command == "sweep":
        over["eps"] = tuple(args.eps)
    if over:
        cfg = validate(cfg.with_overrides(**over))
    return cfg


def cmd_simulate(args):
    from .experiments import run_single
    from .report import plot_run

    cfg = _config(args)
    eps = args.eps[0] if args.eps else cfg.eps[0]
    res = run_single(cfg, eps, cfg.out, progress=_progress if args.verbose else None)
    plot_run(res.rows, os.path.join(res.directory, "run.png"))
    print(json.dumps(res.summary, indent=2, sort_keys=True))
    return 0


def cmd_sweep(args):
    from .experiments import run_sweep
    from .report import plot_run, plot_sweep

    cfg = _config(args)
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
    summary, done = run_sweep(cfg, cfg.out, threads=args.threads)
    for r in done:
        plot_run(r.rows, os.path.join(r.directory, "run.png"))
    if done:
        plot_sweep(summary, [r.summary for r in done], os.path.join(cfg.out, "sweep.png"))
    print(json.dumps({k: summary.get(k) for k in ("alpha", "fits", "flags", "partial", "errors")}, indent=2, sort_keys=True))
    return 1 if summary.get("partial") else 0


def cmd_acoustics(args):
    from .acoustics import AcousticState, gaussian_pulse, strichartz_exponents, strichartz_scaling_check
    from .diagnostics import fit_rate
    from .field import Torus2
    from .report import plot_scaling

    cfg = _config(args)
    tor = Torus2(cfg.L, cfg.N)
    a = float(np.sqrt(cfg.A * cfg.gamma))
    s0 = AcousticState(tor, gaussian_pulse(tor, cfg.pulse_sigma), np.zeros((2,) + tor.shape))
    eps = args.eps or [1.0, 0.5, 0.25, 0.125]
    rows = strichartz_scaling_check(s0, args.p, cfg.T, eps, a)
    fit = fit_rate([(r.eps, r.norm) for r in rows])
    q, sigma = strichartz_exponents(args.p)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "strichartz.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "mixed_norm", "ratio_to_eps_1_over_q", "rescaled_norm", "identity_rel_err"])
        for r in rows:
            w.writerow([repr(r.eps), repr(r.norm), repr(r.ratio), repr(r.rescaled), repr(r.identity_err)])
    plot_scaling(rows, fit.slope, os.path.join(cfg.out, "strichartz.png"))
    print(json.dumps({"p": args.p, "q": q, "sigma": sigma, "slope": fit.slope, "expected": 1.0 / q,
                      "max_identity_err": max(r.identity_err for r in rows)}, indent=2))
    return 0


def cmd_verify(args):
    from .verify import run_suite

    rep = run_suite(args.suite)
    print(json.dumps(rep, indent=2))
    return 0 if rep["passed"] else 1


def cmd_rates(args):
    """Re-fit sweep rates from the per-run summaries already on disk."""
    from .experiments import summarize_sweep

    cfg = _config(args)
    root = cfg.out
    sums = []
    for name in sorted(os.listdir(root)):
        p = os.path.join(root, name, "summary.json")
        if os.path.isfile(p):
            with open(p, encoding="utf-8") as fh:
                sums.append(json.load(fh))
    if len(sums) < 3:
        print(f"need at least three run summaries under {root}, found {len(sums)}", file=sys.stderr)
        return 2
    sums.sort(key=lambda s: -s["eps"])
    summary = summarize_sweep(cfg, sums)
    print(json.dumps({k: summary[k] for k in ("alpha", "fits", "flags")}, indent=2, sort_keys=True))
    return 0


def _progress(rid, k, t):
    logging.getLogger("thinmach").info("%s sample %d t=%.4g", rid, k, t)


def build_parser():
    ap = argparse.ArgumentParser(prog="thinmach", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides run.out)")
        p.add_argument("--eps", type=float, nargs="+", metavar="E", help="Mach number(s)")
        p.add_argument("--threads", type=int, default=1, metavar="N", help="concurrent runs in a sweep")
        p.add_argument("--seed", type=int, metavar="S", help="seed for random data components")

    for name, fn, hlp in (
        ("simulate", cmd_simulate, "single run at one eps"),
        ("sweep", cmd_sweep, "eps sweep with rate fits"),
        ("acoustics", cmd_acoustics, "Strichartz scaling study"),
        ("rates", cmd_rates, "re-fit rates from an existing sweep directory"),
    ):
        p = sub.add_parser(name, help=hlp)
        common(p)
        p.set_defaults(func=fn)
        if name == "acoustics":
            p.add_argument("--p", type=float, default=4.0, help="space exponent p in (2, inf)")
    p = sub.add_parser("verify", help="built-in property and golden checks")
    p.add_argument("suite", nargs="?", default="all",
                   choices=("field", "thermo", "acoustics", "limit2d", "cns3d", "diagnostics", "all"))
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
