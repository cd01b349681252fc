"""Command line entry point: ``sindy-si {bench,fit,generate,sdp-solve}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import METHODS, NOISE_PRESETS, BoxSampler, lorenz_config, lorenz_field, smib_config, smib_field
from .bench import run_benchmark
from .ode import generate_dataset, load_dataset, save_dataset
from .poly import monomial_basis
from .regress import build_regression, ols, sindy
from .sdp import get_backend, read_sdp, verify
from .sindysi import SindySiConfig, SiFailure, fit_si, fit_sindy_si
from .sos import Region, SideInfoSpec

log = logging.getLogger("sindy_si")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _add_bench(sub):
    p = sub.add_parser("bench", help="cross-validation benchmark on a reference system")
    p.add_argument("system", choices=["lorenz", "smib"])
    p.add_argument("--noise", choices=sorted(NOISE_PRESETS), default=None,
                   help="noise preset (lorenz default: low; smib default: 1e-5/1e-3)")
    p.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    p.add_argument("--folds", type=int, default=20, help="number of trajectories / folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true", help="100 trajectories")
    p.add_argument("--xi2", type=_floats, default=(0.0,), help="comma separated xi2 grid for SINDy-SI")
    p.add_argument("--oracle", action="store_true", help="score against the noiseless field")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("bench_out"))
    p.add_argument("--no-plot", action="store_true", help="skip the J_k figure")
    p.set_defaults(func=cmd_bench)


def _add_fit(sub):
    p = sub.add_parser("fit", help="fit a model to a dataset CSV")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--method", choices=METHODS, default="SINDY_SI")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--xi2", type=float, default=0.0)
    p.add_argument("--side-info", type=Path, default=None, help="JSON side-information file")
    p.add_argument("--region-center", type=_floats, default=None)
    p.add_argument("--region-radius", type=float, default=None)
    p.add_argument("--mult-degree", type=int, default=None)
    p.add_argument("--out", type=Path, required=True, help="output stem; writes <out>.csv and <out>.json")
    p.set_defaults(func=cmd_fit)


def _add_generate(sub):
    p = sub.add_parser("generate", help="simulate a noisy dataset from a reference system")
    p.add_argument("system", choices=["lorenz", "smib"])
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--noise", choices=sorted(NOISE_PRESETS), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)


def _add_sdp(sub):
    p = sub.add_parser("sdp-solve", help="solve an SDP in the sparse text format")
    p.add_argument("file", type=Path)
    p.add_argument("--backend", choices=["ipm", "cvxpy"], default="ipm")
    p.add_argument("--tol", type=float, default=1e-6, help="verification tolerance")
    p.add_argument("--out", type=Path, default=None, help="write variable values, one per line")
    p.set_defaults(func=cmd_sdp)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sindy-si", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_bench(sub)
    _add_fit(sub)
    _add_generate(sub)
    _add_sdp(sub)
    return parser


def _config(args):
    if args.system == "lorenz":
        return lorenz_config(noise=args.noise or "low", m=args.folds, seed=args.seed, full=args.full,
                             methods=tuple(args.methods), xi2_grid=args.xi2, oracle=args.oracle,
                             workers=args.workers)
    return smib_config(m=args.folds, seed=args.seed, noise=args.noise, full=args.full,
                       methods=tuple(args.methods), xi2_grid=args.xi2, oracle=args.oracle, workers=args.workers)


def cmd_bench(args) -> int:
    cfg = _config(args)
    report = run_benchmark(cfg, out_dir=args.out)
    w = csv.writer(sys.stdout)
    w.writerow(["method", "average_J", "failed_folds", "folds"])
    for method in report.costs:
        w.writerow([method, f"{report.average(method):.6g}", report.failures(method), cfg.m])
    if not args.no_plot:
        from .plotting import plot_fold_costs

        fig = plot_fold_costs(report, args.out / "jk.png")
        log.info("figure written to %s", fig)
    return 0


def _spec(args, nvars: int) -> SideInfoSpec:
    region = None
    if args.region_radius is not None:
        center = args.region_center or (0.0,) * nvars
        if len(center) != nvars:
            raise SystemExit(f"--region-center needs {nvars} values")
        region = Region(center, args.region_radius)
    if args.side_info is None:
        return SideInfoSpec()
    return SideInfoSpec.from_dict(json.loads(args.side_info.read_text()), nvars, region)


def cmd_fit(args) -> int:
    data = load_dataset(args.data)
    prob = build_regression(data, monomial_basis(data.n, args.degree))
    spec = _spec(args, data.n)
    cfg = SindySiConfig(lam=args.lam, xi2=args.xi2, mult_degree=args.mult_degree)
    try:
        if args.method == "OLS":
            fit = ols(prob)
        elif args.method == "SINDY":
            fit = sindy(prob, args.lam)
        elif args.method == "SI":
            fit = fit_si(prob, spec, cfg)
        else:
            fit = fit_sindy_si(prob, spec, cfg)
    except SiFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    csv_path, json_path = fit.save(args.out)
    print(fit.describe())
    print(f"status={fit.status} iterations={fit.iterations} -> {csv_path}, {json_path}")
    return 0


def cmd_generate(args) -> int:
    if args.system == "lorenz":
        cfg, field = lorenz_config(noise=args.noise or "low", m=args.m, seed=args.seed), lorenz_field()
    else:
        cfg, field = smib_config(m=args.m, seed=args.seed, noise=args.noise), smib_field()
    data = generate_dataset(field, cfg.m, cfg.r, cfg.t_span, BoxSampler(cfg.ic_low, cfg.ic_high),
                            cfg.sigma_S, cfg.sigma_Y, cfg.seed)
    csv_path, json_path = save_dataset(data, args.out)
    print(f"{data.m} trajectories x {data.r} rows -> {csv_path}, {json_path}")
    return 0


def cmd_sdp(args) -> int:
    prob = read_sdp(args.file)
    sol = get_backend(args.backend).solve(prob)
    rep = verify(prob, sol, args.tol)
    print(f"status,{sol.status.value}")
    print(f"primal_objective,{sol.primal_obj:.12g}")
    print(f"dual_objective,{sol.dual_obj:.12g}")
    print(f"iterations,{sol.iterations}")
    print(f"verify,{'pass' if rep.passed else 'fail'},{rep.summary()}")
    if args.out is not None:
        np.savetxt(args.out, sol.values, fmt="%.17g")
    return 0 if sol.status.ok and rep.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
