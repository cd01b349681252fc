"""End-to-end acceptance criteria, one test per criterion at its stated tolerance.

Each test prints a ``criterion N: PASS|FAIL`` line; the lines are repeated in
the terminal summary. The benchmark criteria (5, 6, 8) take several minutes.
"""

import os
import time
from math import comb

import numpy as np
import pytest

from sdp_cases import eigen_bound, scalar_lp, schur_trace
from si_cases import decay_problem, iteration_violations, random_full_rank, random_instance
from sindy_si.bench import (lorenz_config, lorenz_side_info, run_benchmark, smib_config,
                            smib_taylor_reference)
from sindy_si.poly import Polynomial, monomial_basis
from sindy_si.regress import ols, sindy
from sindy_si.sdp import SolverStatus, solve, verify
from sindy_si.sindysi import SindySiConfig, fit_si, fit_sindy_si
from sindy_si.sos import (AffinePolynomial, Equilibrium, SideInfoSpec, certificate_problem, check_side_info,
                          compile_side_info, compile_signed_inequality)


WORKERS = min(4, os.cpu_count() or 1)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def lorenz_reports():
    """Desk-scale Lorenz runs, computed once and shared by criteria 5, 6 and 7."""
    cache = {}

    def get(noise):
        if noise not in cache:
            cache[noise] = _timed(lambda: run_benchmark(lorenz_config(noise=noise, workers=WORKERS)))
        return cache[noise]

    return get


def test_criterion_01_solver_examples(criterion):
    B = np.random.default_rng(7).normal(size=(5, 3))
    schur, M = schur_trace(B)
    cases = {
        "eigen_bound": (eigen_bound(), lambda s: abs(s.values[0] - 1.0)),
        "schur_trace": (schur, lambda s: abs(s.primal_obj - np.linalg.norm(B, "fro") ** 2)),
        "scalar_lp": (scalar_lp(), lambda s: abs(s.values[0])),
    }
    details, ok = [], True
    for name, (prob, err) in cases.items():
        sol, dt = _timed(lambda: solve(prob))
        e = err(sol)
        good = sol.status is SolverStatus.OPTIMAL and e <= 1e-6 and verify(prob, sol, 1e-6).passed and dt < 1.0
        ok &= good
        details.append(f"{name} err={e:.1e} {dt:.2f}s")
    criterion(1, ok, "; ".join(details))


def test_criterion_02_sos_certificates(criterion):
    t0 = time.perf_counter()
    x = Polynomial.variable(0, 1)
    sq = certificate_problem([compile_signed_inequality(AffinePolynomial(1, 1 + x * x, {}))])[0]
    neg = certificate_problem([compile_signed_inequality(AffinePolynomial(1, -(x * x), {}))])[0]
    st_sq, st_neg = solve(sq).status, solve(neg).status
    cc = compile_side_info(lorenz_side_info(), monomial_basis(3, 5), np.ones(56))
    sizes = [blk.gram_sizes for blk in cc.sos_blocks]
    expected = {"residual": comb(3 + 2, 2), "region": comb(3 + 1, 1)}
    dt = time.perf_counter() - t0
    ok = (st_sq is SolverStatus.OPTIMAL and st_neg is SolverStatus.INFEASIBLE
          and all(s == expected for s in sizes) and expected == {"residual": 10, "region": 4} and dt < 5.0)
    criterion(2, ok, f"1+x^2 {st_sq.value}, -x^2 {st_neg.value}, gram sizes {sizes[0]}, {dt:.2f}s")


def test_criterion_03_baseline_equivalence(criterion):
    worst = 0.0
    for seed in range(20):
        prob = random_full_rank(seed)
        assert prob.h <= 10 and prob.Phi.shape[0] >= 2 * prob.h
        a, b = fit_si(prob).W_normalized, ols(prob).W_normalized
        worst = max(worst, float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))))
    criterion(3, worst <= 1e-5, f"worst relative deviation {worst:.2e} over 20 instances")


def test_criterion_04_sparse_recovery(criterion):
    prob = decay_problem()
    fits = {"SINDy": sindy(prob, 0.1),
            "SINDy-SI": fit_sindy_si(prob, SideInfoSpec([Equilibrium((0.0,))]), SindySiConfig(lam=0.1))}
    ok, details = True, []
    for name, fit in fits.items():
        Wp = fit.W_physical[:, 0]
        support = np.flatnonzero(Wp).tolist()
        good = support == [1] and abs(Wp[1] + 1.0) <= 1e-4
        ok &= good
        details.append(f"{name} support={support} coef={Wp[1]:.6f}")
    criterion(4, ok, "; ".join(details))


def _averages(report):
    return {m: report.average(m) for m in report.costs}


def _fmt(avg, report):
    return ", ".join(f"{m}={v:.4g}({report.failures(m)} failed)" for m, v in avg.items())


@pytest.mark.slow
def test_criterion_05_lorenz_low_noise(criterion, lorenz_reports):
    report, dt = lorenz_reports("low")
    a = _averages(report)
    ordering = a["SINDY_SI"] < a["SI"] < min(a["OLS"], a["SINDY"])
    margin = a["SI"] / a["SINDY_SI"]
    ok = ordering and margin >= 10.0 and dt < 1800
    criterion(5, ok, f"{_fmt(a, report)}; SI/SINDy-SI={margin:.3g}; {dt:.0f}s")


@pytest.mark.slow
def test_criterion_06_lorenz_mid_high_noise(criterion, lorenz_reports):
    ok, details = True, []
    for noise in ("mid", "high"):
        report, dt = lorenz_reports(noise)
        a = _averages(report)
        ok &= a["SINDY_SI"] < a["SI"] and dt < 1800
        details.append(f"[{noise}] {_fmt(a, report)}; {dt:.0f}s")
    criterion(6, ok, " | ".join(details))


@pytest.mark.slow
def test_criterion_07_lorenz_side_information(criterion, lorenz_reports):
    spec = lorenz_side_info()
    rng = np.random.default_rng(2024)
    worst_eq, worst_ineq, count = 0.0, np.inf, 0
    for noise in ("low", "mid", "high"):
        report, _ = lorenz_reports(noise)
        for model in report.models["SINDY_SI"]:
            if model is None:
                continue
            checks = check_side_info(model.polynomials(), spec, 1000, rng)
            worst_eq = max(worst_eq, checks[0]["norm"])
            worst_ineq = min(worst_ineq, min(c["min_value"] for c in checks[1:]))
            count += 1
    ok = count > 0 and worst_eq <= 1e-6 and worst_ineq >= -1e-5
    criterion(7, ok, f"{count} models; max |f(0)|={worst_eq:.2e}; min -df_i/dx_i={worst_ineq:.3g}")


@pytest.mark.slow
def test_criterion_08_smib(criterion):
    report, dt = _timed(lambda: run_benchmark(smib_config(workers=WORKERS)))
    k = report.best_fold("SINDY_SI")
    model = report.models["SINDY_SI"][k - 1]
    f1, f2 = model.polynomials()
    _, ref2 = smib_taylor_reference()
    problems = []
    c = f1.coeff((0, 1))
    if abs(c - 1.0) > 0.05:
        problems.append(f"f1 x2 coefficient {c:.4g}")
    if set(f1.terms) - {(0, 1)}:
        problems.append(f"f1 has {len(set(f1.terms) - {(0, 1)})} extra terms")
    allowed = {(1, 0), (3, 0), (5, 0), (7, 0), (0, 1), (0, 0)}
    extra = set(f2.terms) - allowed
    if extra:
        problems.append(f"f2 has {len(extra)} terms outside the Taylor support")
    for mono in set(f2.terms) & allowed:
        if np.sign(f2.coeff(mono)) != np.sign(ref2.coeff(mono)):
            problems.append(f"f2 sign mismatch at {mono}")
    for mono, target in (((0, 1), -1.415), ((0, 0), 47.17)):
        if abs(f2.coeff(mono) - target) > 0.25 * abs(target):
            problems.append(f"f2 coefficient {mono}={f2.coeff(mono):.4g}")
    ok = not problems and dt < 1200
    a = _averages(report)
    criterion(8, ok, f"best fold {k}; {_fmt(a, report)}; {dt:.0f}s; " + ("; ".join(problems) or "model matches"))


def test_criterion_09_iteration_invariants(criterion):
    t0 = time.perf_counter()
    bad = []
    for seed in range(50):
        prob, spec, lam, xi2 = random_instance(seed)
        assert prob.n == 2 and prob.basis.degree <= 3
        fit = fit_sindy_si(prob, spec, SindySiConfig(lam=lam, xi2=xi2))
        bad += [f"seed {seed}: {v}" for v in iteration_violations(fit, prob.h, prob.n)]
    dt = time.perf_counter() - t0
    criterion(9, not bad and dt < 300, f"50 instances, {len(bad)} violations, {dt:.1f}s" + (f"; {bad[0]}" if bad else ""))


def _csv_bytes(path):
    return {p.name: p.read_bytes() for p in sorted(path.glob("*.csv"))}


def test_criterion_10_determinism(criterion, tmp_path):
    configs = {"lorenz": lorenz_config(m=3, seed=11), "smib": smib_config(m=3, seed=11)}
    diffs, total = [], 0
    for name, cfg in configs.items():
        run_benchmark(cfg, out_dir=tmp_path / f"{name}_a")
        cfg.workers = 2
        run_benchmark(cfg, out_dir=tmp_path / f"{name}_b")
        a, b = _csv_bytes(tmp_path / f"{name}_a"), _csv_bytes(tmp_path / f"{name}_b")
        total += len(a)
        diffs += [f"{name}/{f}" for f in a.keys() | b.keys() if a.get(f) != b.get(f)]
    criterion(10, total > 0 and not diffs, f"{total} CSV files compared; {len(diffs)} differ" +
              (f" ({diffs[0]})" if diffs else ""))
