"""Cross-validation harness and the two reference systems.

Every benchmark generates one dataset and trains each method on a single
trajectory ("fold"), scoring it on all other trajectories. All methods see
the same data for a given seed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .ode import BoxSampler, Dataset, VectorField, generate_dataset
from .poly import Polynomial, monomial_basis
from .regress import FitResult, build_regression, ols, sindy
from .sdp import SolverOptions
from .sindysi import SindySiConfig, SiFailure, fit_si, fit_sindy_si
from .sos import Equilibrium, Region, SideInfoSpec, SignedComponent, SignedDerivative

log = logging.getLogger(__name__)

__all__ = [
    "METHODS", "NOISE_PRESETS", "lorenz_field", "smib_field", "smib_equilibrium", "smib_taylor_reference",
    "lorenz_side_info", "smib_side_info", "BenchmarkConfig", "FoldResult", "CvReport", "cv_cost",
    "lorenz_config", "smib_config", "generate_benchmark_data", "run_benchmark", "write_report",
]

METHODS = ("OLS", "SINDY", "SI", "SINDY_SI")

NOISE_PRESETS = {
    "low": (1e-4, 1e-2),
    "mid": (1e-3, 1e-1),
    "high": (1e-2, 1.0),
}

SMIB_PARAMS = {"alpha": 0.0106, "p_m": 1.0, "e": 1.21, "v": 1.0, "chi": 0.28, "beta": 0.03}


# reference systems ---------------------------------------------------------------------

def lorenz_field(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> VectorField:
    def f(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([sigma * (x2 - x1), rho * x1 - x2 - x1 * x3, -beta * x3 + x1 * x2], axis=-1)

    return VectorField(3, f, "lorenz", vectorized=True)


def smib_field(alpha: float = 0.0106, p_m: float = 1.0, e: float = 1.21, v: float = 1.0,
               chi: float = 0.28, beta: float = 0.03) -> VectorField:
    """Swing equation of a generator against an infinite bus."""
    k = e * v / chi

    def f(x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x2, (p_m - k * np.sin(x1) - beta * x2) / (2 * alpha)], axis=-1)

    return VectorField(2, f, "smib", vectorized=True)


def smib_equilibrium(p_m: float = 1.0, e: float = 1.21, v: float = 1.0, chi: float = 0.28) -> np.ndarray:
    return np.array([math.pi - math.asin(p_m * chi / (e * v)), 0.0])


def smib_taylor_reference(order: int = 7, **params) -> tuple[Polynomial, Polynomial]:
    """Taylor expansion of the swing equation in ``x1`` about 0, up to ``order``."""
    if order not in (1, 3, 5, 7):
        raise ValueError("order must be odd and at most 7")
    p = {**SMIB_PARAMS, **params}
    k = p["e"] * p["v"] / p["chi"]
    two_a = 2 * p["alpha"]
    f1 = Polynomial.variable(1, 2)
    terms = {(0, 0): p["p_m"] / two_a, (0, 1): -p["beta"] / two_a}
    for deg in range(1, order + 1, 2):
        # sin x = sum (-1)^j x^(2j+1) / (2j+1)!
        sign = (-1) ** ((deg - 1) // 2)
        terms[(deg, 0)] = -k * sign / math.factorial(deg) / two_a
    return f1, Polynomial(terms, 2)


def lorenz_side_info(center=(0.0, 0.0, 25.0), radius: float = 75.0) -> SideInfoSpec:
    """Equilibrium at the origin and ``-d f_i / d x_i >= 0`` on a ball around the attractor."""
    region = Region(center, radius)
    return SideInfoSpec([Equilibrium((0.0, 0.0, 0.0))]
                        + [SignedDerivative(i, i, -1, region) for i in range(3)])


def smib_side_info(radius: float = 25.0) -> SideInfoSpec:
    """Known equilibrium; ``f1`` has the sign of ``x2`` on a ball."""
    region = Region((0.0, 0.0), radius)
    x2 = Polynomial.variable(1, 2)
    return SideInfoSpec([
        Equilibrium(tuple(smib_equilibrium())),
        SignedComponent(0, 1, region, activation=x2),
        SignedComponent(0, -1, region, activation=-x2),
    ])


# configuration and report --------------------------------------------------------------

@dataclass
class BenchmarkConfig:
    """Scenario settings; ``system`` is ``"lorenz"``, ``"smib"`` or ``"custom"`` (dataset supplied by the caller)."""

    system: str
    m: int
    r: int
    t_span: tuple
    sigma_S: float
    sigma_Y: float
    degree: int
    methods: tuple = METHODS
    lam: float = 0.1
    xi2_grid: tuple = (0.0,)
    seed: int = 0
    ic_low: tuple = ()
    ic_high: tuple = ()
    region_center: tuple | None = None
    region_radius: float | None = None
    side_info: dict | None = None
    mult_degree: int | None = None
    oracle: bool = False
    workers: int = 1
    output_mode: str = "measured"
    solver_gap_tol: float = 1e-7

    def __post_init__(self):
        if not self.methods:
            raise ValueError("method list is empty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.m < 2:
            raise ValueError("cross-validation needs at least two trajectories")
        if not self.xi2_grid:
            raise ValueError("xi2 grid is empty")
        self.methods = tuple(self.methods)
        self.xi2_grid = tuple(float(v) for v in self.xi2_grid)
        self.t_span = tuple(self.t_span)

    @property
    def folds(self) -> int:
        return self.m

    def field(self) -> VectorField:
        if self.system == "lorenz":
            return lorenz_field()
        if self.system == "smib":
            return smib_field()
        if self.system == "custom":
            raise ValueError("a custom system has no built-in field; pass the dataset to run_benchmark")
        raise ValueError(f"unknown system {self.system!r}")

    def spec(self, nvars: int | None = None) -> SideInfoSpec:
        if self.system == "custom" and self.side_info is None:
            return SideInfoSpec()
        n = nvars if nvars is not None else self.field().nvars
        region = None
        if self.region_radius is not None:
            region = Region(self.region_center or (0.0,) * n, self.region_radius)
        if self.side_info is not None:
            return SideInfoSpec.from_dict(self.side_info, n, region)
        if self.system == "lorenz":
            return lorenz_side_info() if region is None else lorenz_side_info(region.center, region.radius)
        return smib_side_info() if region is None else smib_side_info(region.radius)

    def labels(self) -> list[str]:
        """Method labels; SINDy-SI gets one label per xi2 when the grid has several values."""
        out = []
        for m in self.methods:
            if m == "SINDY_SI" and len(self.xi2_grid) > 1:
                out += [f"SINDY_SI_xi2={x:g}" for x in self.xi2_grid]
            else:
                out.append(m)
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def lorenz_config(noise: str = "low", m: int = 20, seed: int = 0, full: bool = False, **kw) -> BenchmarkConfig:
    """Lorenz scenario; ``full`` switches to 100 trajectories."""
    sS, sY = NOISE_PRESETS[noise]
    base = dict(system="lorenz", m=100 if full else m, r=40, t_span=(0.0, 10.0), sigma_S=sS, sigma_Y=sY,
                degree=5, lam=0.1, seed=seed, ic_low=(-20.0, -20.0, 0.0), ic_high=(20.0, 20.0, 40.0))
    base.update(kw)
    return BenchmarkConfig(**base)


def smib_config(m: int = 20, seed: int = 0, noise: str | None = None, full: bool = False,
                **kw) -> BenchmarkConfig:
    """SMIB scenario; the default noise is (1e-5, 1e-3), ``noise`` selects a preset instead."""
    sS, sY = NOISE_PRESETS[noise] if noise else (1e-5, 1e-3)
    xe = smib_equilibrium()[0]
    base = dict(system="smib", m=100 if full else m, r=20, t_span=(0.0, 1.0), sigma_S=sS, sigma_Y=sY,
                degree=7, lam=1e-2, seed=seed, ic_low=(xe - 1.0, -2.0), ic_high=(xe + 1.0, 2.0))
    base.update(kw)
    return BenchmarkConfig(**base)


@dataclass
class FoldResult:
    method: str
    fold: int
    cost: float
    status: str
    runtime: float
    model: FitResult | None = None
    error: str = ""


@dataclass
class CvReport:
    config: BenchmarkConfig
    costs: dict
    status: dict
    runtimes: dict
    models: dict = field(default_factory=dict)
    dataset_meta: dict = field(default_factory=dict)

    def average(self, method: str) -> float:
        """Mean ``J_k`` over folds that did not fail (NaN if all failed)."""
        vals = [c for c, s in zip(self.costs[method], self.status[method]) if s != "failed"]
        return float(np.mean(vals)) if vals else float("nan")

    def failures(self, method: str) -> int:
        return sum(s == "failed" for s in self.status[method])

    @property
    def averages(self) -> dict:
        return {m: self.average(m) for m in self.costs}

    def best_fold(self, method: str) -> int:
        """One-based fold with the lowest cost."""
        c = np.array(self.costs[method], dtype=float)
        c[np.array(self.status[method]) == "failed"] = np.inf
        return int(np.argmin(c)) + 1

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "dataset": self.dataset_meta,
            "methods": {
                m: {"average": self.average(m), "failures": self.failures(m), "costs": self.costs[m],
                    "status": self.status[m], "runtime": self.runtimes[m]}
                for m in self.costs
            },
        }


# cost ----------------------------------------------------------------------------------

def cv_cost(model: FitResult | Callable, data: Dataset, k: int, oracle: VectorField | None = None) -> float:
    """Mean output error of ``model`` on every trajectory except the one-based fold ``k``.

    The reference outputs are the recorded ones unless ``oracle`` is given,
    in which case the noiseless field at the recorded states is used.
    """
    if not 1 <= k <= data.m:
        raise IndexError(f"fold {k} outside 1..{data.m}")
    predict = model.predict if isinstance(model, FitResult) else model
    total = 0.0
    count = 0
    for j in range(data.m):
        if j == k - 1:
            continue
        X = data.trajectories[j].states
        Y = oracle.eval_many(X) if oracle is not None else data.outputs[j]
        total += float(np.sum(np.linalg.norm(Y - predict(X), axis=1)))
        count += X.shape[0]
    return total / count


# runner --------------------------------------------------------------------------------

def _si_config(cfg: BenchmarkConfig, xi2: float) -> SindySiConfig:
    return SindySiConfig(lam=cfg.lam, xi2=xi2, mult_degree=cfg.mult_degree,
                         solver=SolverOptions(gap_tol=cfg.solver_gap_tol, feas_tol=cfg.solver_gap_tol))


def _fit(label: str, prob, cfg: BenchmarkConfig, spec: SideInfoSpec) -> FitResult:
    if label == "OLS":
        return ols(prob)
    if label == "SINDY":
        return sindy(prob, cfg.lam)
    if label == "SI":
        return fit_si(prob, spec, _si_config(cfg, 0.0))
    xi2 = float(label.split("=")[1]) if "=" in label else cfg.xi2_grid[0]
    return fit_sindy_si(prob, spec, _si_config(cfg, xi2))


def _run_fold(cfg: BenchmarkConfig, data: Dataset, k: int) -> list[FoldResult]:
    basis = monomial_basis(data.n, cfg.degree)
    prob = build_regression(data.subset([k - 1]), basis)
    spec = cfg.spec(data.n)
    oracle = cfg.field() if cfg.oracle else None
    out = []
    for label in cfg.labels():
        t0 = time.perf_counter()
        try:
            model = _fit(label, prob, cfg, spec)
        except (SiFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
            log.warning("%s fold %d failed: %s", label, k, exc)
            out.append(FoldResult(label, k, float("nan"), "failed", time.perf_counter() - t0, None, str(exc)))
            continue
        cost = cv_cost(model, data, k, oracle)
        status = model.status if np.isfinite(cost) else "failed"
        out.append(FoldResult(label, k, cost, status, time.perf_counter() - t0, model))
    return out


def generate_benchmark_data(cfg: BenchmarkConfig) -> Dataset:
    return generate_dataset(cfg.field(), cfg.m, cfg.r, cfg.t_span, BoxSampler(cfg.ic_low, cfg.ic_high),
                            cfg.sigma_S, cfg.sigma_Y, cfg.seed, output_mode=cfg.output_mode)


def run_benchmark(cfg: BenchmarkConfig, out_dir=None, data: Dataset | None = None,
                  progress: Callable[[FoldResult], None] | None = None) -> CvReport:
    """Train every method on every fold and score it on the rest.

    Folds run in a process pool when ``cfg.workers > 1``; results are always
    collected in fold order. With ``out_dir`` the report files are written.
    """
    if data is None:
        data = generate_benchmark_data(cfg)
    folds = range(1, data.m + 1)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_fold, [cfg] * data.m, [data] * data.m, folds))
    else:
        results = []
        for k in folds:
            res = _run_fold(cfg, data, k)
            if progress:
                for r in res:
                    progress(r)
            results.append(res)
    labels = cfg.labels()
    costs = {m: [] for m in labels}
    status = {m: [] for m in labels}
    runtimes = {m: [] for m in labels}
    models = {m: [] for m in labels}
    for fold in results:
        for r in fold:
            costs[r.method].append(r.cost)
            status[r.method].append(r.status)
            runtimes[r.method].append(r.runtime)
            models[r.method].append(r.model)
    report = CvReport(cfg, costs, status, runtimes, models, data.metadata())
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def _slug(label: str) -> str:
    return label.replace("=", "_")


def write_report(report: CvReport, out_dir) -> list[Path]:
    """``report.json``, ``jk_<method>.csv`` and ``model_<method>_fold<k>.csv`` files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, default=_json_default))
    written.append(path)
    for method, costs in report.costs.items():
        path = out / f"jk_{_slug(method)}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fold", "J_k", "status"])
            for k, (c, s) in enumerate(zip(costs, report.status[method]), start=1):
                w.writerow([k, repr(float(c)), s])
        written.append(path)
        for k, model in enumerate(report.models.get(method, []), start=1):
            if model is None:
                continue
            path = out / f"model_{_slug(method)}_fold{k}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["term", "output", "coefficient"])
                for term, j, coef in model.to_rows():
                    w.writerow([term, j, repr(coef)])
            written.append(path)
    return written


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return str(obj)
