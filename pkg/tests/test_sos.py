import json
from math import comb
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sindy_si.bench import lorenz_side_info, smib_equilibrium, smib_side_info
from sindy_si.poly import Polynomial, gram_expand, monomial_basis
from sindy_si.regress import SupportSet, ols, regression_from_arrays
from sindy_si.sdp import SolverStatus, solve
from sindy_si.sos import (
    AffinePolynomial, DegreeError, Equilibrium, OddSymmetry, Region, SideInfoSpec, SignedComponent,
    SignedDerivative, assemble_sdp, certificate_problem, check_side_info, compile_equilibrium,
    compile_odd_symmetry, compile_side_info, compile_signed_inequality, sample_ball,
)

ROOT = Path(__file__).resolve().parents[1]


def constant_target(p):
    return AffinePolynomial(p.nvars, p, {})


def test_region_polynomials():
    reg = Region((0, 0, 25), 75)
    assert reg.g()(np.array([0.0, 0.0, 25.0])) == 75 ** 2
    assert abs(reg.g()(np.array([75.0, 0.0, 25.0]))) < 1e-9
    u = np.array([0.3, -0.2, 0.1])
    x = np.array(reg.center) + 75 * u
    p = Polynomial.variable(2, 3) ** 2 - 3 * Polynomial.variable(0, 3)
    assert abs(reg.to_unit(p)(u) - p(x)) < 1e-9
    with pytest.raises(ValueError):
        Region((0, 0), 0.0)


def test_equilibrium_at_origin_hits_constant_only():
    basis = monomial_basis(3, 2)
    rows = compile_equilibrium((0, 0, 0), basis, np.full(len(basis), 2.0))
    assert rows == [({(0, j): 0.5}, 0.0) for j in range(3)]


def test_equilibrium_rows_at_smib_point():
    basis = monomial_basis(2, 7)
    scales = np.linspace(1, 3, len(basis))
    xeq = smib_equilibrium()
    rows = compile_equilibrium(xeq, basis, scales)
    assert len(rows) == 2
    expect = basis.eval(np.asarray(xeq)) / scales
    for j, (row, rhs) in enumerate(rows):
        assert rhs == 0.0
        for (i, jj), v in row.items():
            assert jj == j and v == pytest.approx(expect[i], rel=1e-15)
        assert len(row) == np.count_nonzero(expect)


def test_odd_symmetry_rows():
    idx = sorted(i for row, _ in compile_odd_symmetry(monomial_basis(1, 3)) for (i, _j) in row)
    assert idx == [0, 2]
    basis = monomial_basis(2, 2)
    killed = {basis.monomials[i] for row, _ in compile_odd_symmetry(basis) for (i, j) in row if j == 0}
    assert killed == {(0, 0), (2, 0), (1, 1), (0, 2)}


def test_one_plus_square_is_certified():
    x = Polynomial.variable(0, 1)
    blk = compile_signed_inequality(constant_target(1 + x * x))
    prob, grams = certificate_problem([blk])
    sol = solve(prob)
    assert sol.status is SolverStatus.OPTIMAL
    np.testing.assert_allclose(sol.values[grams[0].index], np.eye(2), atol=1e-9)


def test_one_plus_square_with_region_multiplier():
    x = Polynomial.variable(0, 1)
    blk = compile_signed_inequality(constant_target(1 + x * x), Region((0.0,), 2.0), mult_degree=0)
    prob, grams = certificate_problem([blk])
    sol = solve(prob)
    assert sol.status.ok
    z = sol.values[grams[1].index]
    assert np.linalg.eigvalsh(z)[0] >= -1e-7


def test_negative_square_is_infeasible():
    x = Polynomial.variable(0, 1)
    prob, _ = certificate_problem([compile_signed_inequality(constant_target(-(x * x)))])
    assert solve(prob).status is SolverStatus.INFEASIBLE


def test_certificate_problem_rejects_model_terms():
    blk = compile_signed_inequality(AffinePolynomial(1, Polynomial.zero(1), {(0, 0): Polynomial.variable(0, 1)}))
    with pytest.raises(ValueError):
        certificate_problem([blk])


def test_lorenz_derivative_block_sizes():
    basis = monomial_basis(3, 5)
    spec = lorenz_side_info()
    cc = compile_side_info(spec, basis, np.ones(len(basis)))
    assert len(cc.linear_eqs) == 3
    for blk in cc.sos_blocks:
        assert blk.target.degree == 4
        assert blk.gram_sizes == {"residual": comb(3 + 2, 2), "region": comb(3 + 1, 1)}


def test_degree_errors():
    x = Polynomial.variable(0, 1)
    t = constant_target(x ** 4)
    with pytest.raises(DegreeError):
        compile_signed_inequality(t, Region((0.0,), 1.0), mult_degree=1)
    with pytest.raises(DegreeError):
        compile_signed_inequality(t, max_half_degree=1)


def test_multiplier_degree_default():
    x = Polynomial.variable(0, 2)
    act = Polynomial.variable(1, 2)
    blk = compile_signed_inequality(constant_target(x ** 7), Region((0.0, 0.0), 1.0), activation=act)
    assert blk.z_half.degree == 3 and blk.w_half.degree == 3
    assert blk.residual_half.degree == 4


def test_golden_config_counts():
    golden = json.loads((ROOT / "tests" / "golden" / "side_info_counts.json").read_text())
    for name, g in golden.items():
        data = json.loads((ROOT / "configs" / f"{name}_side_info.json").read_text())
        spec = SideInfoSpec.from_dict(data, g["nvars"])
        basis = monomial_basis(g["nvars"], g["degree"])
        counts = compile_side_info(spec, basis, np.ones(len(basis))).counts()
        assert {k: counts[k] for k in counts} == {k: g[k] for k in counts}
        # every matching system covers all monomials up to twice the residual half-degree
        for sizes, eqs in zip(g["gram_sizes"], g["matching_eqs"]):
            n = g["nvars"]
            half = next(k for k in range(10) if comb(n + k, k) == sizes["residual"])
            assert eqs == comb(n + 2 * half, 2 * half)


def test_shipped_configs_match_builders():
    lor = SideInfoSpec.from_dict(json.loads((ROOT / "configs" / "lorenz_side_info.json").read_text()), 3)
    assert lor == lorenz_side_info()
    smib = SideInfoSpec.from_dict(json.loads((ROOT / "configs" / "smib_side_info.json").read_text()), 2)
    assert smib == smib_side_info()


def test_spec_json_round_trip():
    reg = Region((1.0, 2.0), 3.0)
    spec = SideInfoSpec([Equilibrium((0.0, 1.0)), OddSymmetry(), SignedDerivative(1, 0, -1, reg, 2),
                         SignedComponent(0, 1, reg, Polynomial.variable(1, 2) - 0.5)])
    back = SideInfoSpec.from_dict(json.loads(spec.dumps()), 2)
    assert back == spec
    with pytest.raises(ValueError):
        SideInfoSpec.from_dict({"constraints": [{"type": "lyapunov"}]}, 2)


def _small_problem(rng, rows=30, n=2, d=2):
    X = rng.uniform(-1, 1, size=(rows, n))
    Y = np.column_stack([-X[:, 0] + 0.3 * X[:, 1] ** 2, -2 * X[:, 1] + X[:, 0] * X[:, 1]])[:, :n]
    Y = Y + 0.01 * rng.normal(size=Y.shape)
    return regression_from_arrays(X, Y, monomial_basis(n, d))


def test_empty_spec_reproduces_least_squares(rng):
    prob = _small_problem(rng)
    comp = assemble_sdp(prob)
    sol = solve(comp.problem)
    W = comp.W(sol.values)
    ref = ols(prob).W_normalized
    assert np.max(np.abs(W - ref)) <= 1e-5 * max(1.0, np.abs(ref).max())
    resid = np.sum((prob.Y - prob.Phi @ W) ** 2)
    assert abs(sol.primal_obj - resid) <= 1e-5 * resid


def test_uncompressed_block_matches_compressed(rng):
    prob = _small_problem(rng, rows=12)
    a = solve(assemble_sdp(prob, compress=False).problem)
    b = solve(assemble_sdp(prob, compress=True).problem)
    assert abs(a.primal_obj - b.primal_obj) <= 1e-6 * (1 + a.primal_obj)


def test_lorenz_fold_schur_block_size(rng):
    X = rng.uniform(-10, 10, size=(40, 3))
    prob = regression_from_arrays(X, rng.normal(size=(40, 3)), monomial_basis(3, 5))
    comp = assemble_sdp(prob, lorenz_side_info())
    assert comp.problem.block_sizes == [43, 10, 4, 10, 4, 10, 4]


def test_full_support_gives_zero_model(rng):
    prob = _small_problem(rng)
    comp = assemble_sdp(prob, support=SupportSet.full(prob.h, prob.n))
    sol = solve(comp.problem)
    assert np.all(comp.W(sol.values) == 0.0)
    ynorm = np.sum(prob.Y ** 2)
    assert abs(sol.primal_obj - ynorm) <= 1e-6 * ynorm


def _solve_constrained(rng, xi2=0.0):
    prob = _small_problem(rng)
    reg = Region((0.0, 0.0), 1.5)
    # the gate keeps the equilibrium off the set where f2 <= 0 is certified, so the SDP has an interior
    spec = SideInfoSpec([Equilibrium((0.0, 0.0)), SignedDerivative(0, 0, -1, reg),
                         SignedComponent(1, -1, reg, Polynomial.variable(1, 2) - 0.5)])
    comp = assemble_sdp(prob, spec, xi2=xi2, reference_W=ols(prob).W_normalized)
    sol = solve(comp.problem, gap_tol=1e-9, feas_tol=1e-9)
    assert sol.status.ok
    return prob, spec, comp, sol


def test_constrained_solution_invariants(rng):
    prob, spec, comp, sol = _solve_constrained(rng)
    W = comp.W(sol.values)
    resid = np.sum((prob.Y - prob.Phi @ W) ** 2)
    assert np.trace(comp.M(sol.values)) + comp.offset >= resid - 1e-7
    for g in comp.gram_matrices(sol.values):
        assert np.linalg.eigvalsh(g["Q"])[0] >= -1e-7
    assert max(comp.certificate_mismatch(sol.values)) <= 1e-6
    fit_polys = [Polynomial.from_coefficients(prob.basis, (W / prob.scales[:, None])[:, j]) for j in range(2)]
    checks = check_side_info(fit_polys, spec, rng=rng)
    assert checks[0]["norm"] <= 1e-6
    assert all(c["min_value"] >= -1e-5 for c in checks[1:])


def test_gamma_box_is_tight(rng):
    xi2 = 0.5
    _prob, _spec, comp, sol = _solve_constrained(rng, xi2)
    W = comp.W(sol.values)
    assert abs(comp.gamma(sol.values) - xi2 * np.abs(W).max()) <= 1e-7


def test_odd_symmetry_model(rng):
    X = rng.uniform(-1, 1, size=(40, 2))
    Y = np.column_stack([X[:, 0] ** 3 - X[:, 1] + 0.2, X[:, 0] * X[:, 1] + X[:, 1]])
    prob = regression_from_arrays(X, Y, monomial_basis(2, 3))
    comp = assemble_sdp(prob, SideInfoSpec([OddSymmetry()]))
    sol = solve(comp.problem)
    Wp = comp.W(sol.values) / prob.scales[:, None]
    polys = [Polynomial.from_coefficients(prob.basis, Wp[:, j]) for j in range(2)]
    pts = rng.normal(size=(100, 2))
    for p in polys:
        assert np.max(np.abs(p(pts) + p(-pts))) <= 1e-9


def test_sample_ball_stays_inside(rng):
    reg = Region((1.0, -2.0, 3.0), 4.0)
    pts = sample_ball(reg, 2000, rng)
    assert np.all(np.linalg.norm(pts - np.array(reg.center), axis=1) <= 4.0 + 1e-12)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(1, 2))
def test_random_sos_is_certified(seed, k):
    rng = np.random.default_rng(seed)
    half = monomial_basis(2, k)
    L = rng.normal(size=(len(half), len(half)))
    p = gram_expand(L @ L.T + 0.1 * np.eye(len(half)), half)
    prob, grams = certificate_problem([compile_signed_inequality(constant_target(p))])
    sol = solve(prob)
    assert sol.status.ok
    Q = sol.values[grams[0].index]
    assert np.linalg.eigvalsh(Q)[0] >= -1e-7
    diff = gram_expand(Q, half) - p
    assert max((abs(c) for c in diff.terms.values()), default=0.0) <= 1e-6
