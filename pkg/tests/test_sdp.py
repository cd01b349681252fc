import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdp_cases import eigen_bound, pencil, pencil_oracle, scalar_lp, schur_trace
from sindy_si.sdp import (
    SdpBuilder, SdpProblem, SdpSolution, SolverStatus, get_backend, read_sdp, solve, verify, write_sdp,
)


def test_eigen_bound():
    sol = solve(eigen_bound())
    assert sol.status is SolverStatus.OPTIMAL
    assert abs(sol.values[0] - 1) <= 1e-6


def test_schur_trace_is_frobenius(rng):
    B = rng.normal(size=(4, 2))
    prob, M = schur_trace(B)
    sol = solve(prob)
    assert sol.status is SolverStatus.OPTIMAL
    assert abs(sol.primal_obj - np.sum(B ** 2)) <= 1e-6
    np.testing.assert_allclose(sol.values[M], B.T @ B, atol=1e-5)
    assert verify(prob, sol, 1e-6).passed


def test_scalar_lp():
    sol = solve(scalar_lp())
    assert sol.status is SolverStatus.OPTIMAL
    assert abs(sol.values[0]) <= 1e-6


def test_infeasible():
    b = SdpBuilder()
    x = b.add_vars(1, "x")[0]
    b.add_objective(x, 1.0)
    k = b.new_block(2)
    b.add_coeff(k, 0, 0, x, 1.0)
    b.add_coeff(k, 1, 1, x, -1.0)
    b.set_const(k, 0, 0, -1.0)
    b.set_const(k, 1, 1, -1.0)
    assert solve(b.build()).status is SolverStatus.INFEASIBLE


def test_inconsistent_equalities():
    b = SdpBuilder()
    x = b.add_vars(1, "x")[0]
    b.add_eq({x: 1.0}, 1.0)
    b.add_eq({x: 1.0}, 2.0)
    b.add_psd_variable(np.array([[x]]))
    assert solve(b.build()).status is SolverStatus.INFEASIBLE


def test_unbounded_is_not_optimal():
    b = SdpBuilder()
    x = b.add_vars(1, "x")[0]
    b.add_objective(x, -1.0)
    b.add_psd_variable(np.array([[x]]))
    assert solve(b.build(), max_iter=60).status is not SolverStatus.OPTIMAL


def test_equalities_and_inequalities():
    # min x + y s.t. x = 2y, y >= 0.5, [[x, 1], [1, 1]] PSD  ->  x = 1, y = 0.5
    b = SdpBuilder()
    x, y = b.add_vars(2, "v")
    b.add_objective(x, 1.0)
    b.add_objective(y, 1.0)
    b.add_eq({x: 1.0, y: -2.0}, 0.0)
    b.add_ineq({y: -1.0}, -0.5)
    k = b.new_block(2)
    b.add_coeff(k, 0, 0, x, 1.0)
    b.set_const(k, 0, 1, 1.0)
    b.set_const(k, 1, 1, 1.0)
    sol = solve(b.build())
    np.testing.assert_allclose(sol.values, [1.0, 0.5], atol=1e-6)


def test_problem_validation():
    with pytest.raises(ValueError):
        SdpProblem(2, np.zeros(3), [], np.zeros((0, 2)), [], np.zeros((0, 2)), [])


def test_verify_hand_point_and_perturbation(rng):
    B = rng.normal(size=(4, 2))
    prob, M = schur_trace(B)
    y = np.zeros(prob.nvars)
    y[M] = B.T @ B + 0.1 * np.eye(2)
    pt = SdpSolution(y, SolverStatus.OPTIMAL, prob.objective_value(y), prob.objective_value(y), 0)
    assert verify(prob, pt, 1e-6).passed
    y[M[0, 0]] -= 1.0 + 0.1
    assert not verify(prob, pt, 1e-6).passed


def test_verify_flags_linear_rows():
    b = SdpBuilder()
    x = b.add_vars(1, "x")[0]
    b.add_eq({x: 1.0}, 1.0)
    b.add_ineq({x: 1.0}, 0.5)
    prob = b.build()
    rep = verify(prob, SdpSolution(np.array([1.0]), SolverStatus.OPTIMAL, 0, 0, 0), 1e-6)
    assert [c.name for c in rep.failures] == ["ineq[0]"]


def test_weak_duality_at_solution(rng):
    for _ in range(5):
        prob, _ = schur_trace(rng.normal(size=(5, 3)))
        sol = solve(prob)
        assert sol.primal_obj >= sol.dual_obj - 1e-9 * (1 + abs(sol.primal_obj))


def test_permutation_invariance(rng):
    prob, _ = schur_trace(rng.normal(size=(4, 3)))
    perm = rng.permutation(prob.nvars)
    base = solve(prob).values
    permuted = solve(prob.permuted(perm)).values
    back = np.empty_like(permuted)
    back[perm] = permuted
    np.testing.assert_allclose(back, base, atol=1e-6)


def test_objective_scaling(rng):
    prob, _ = schur_trace(rng.normal(size=(4, 2)))
    base = solve(prob)
    prob.objective = prob.objective * 1e3
    big = solve(prob)
    assert abs(big.primal_obj - 1e3 * base.primal_obj) <= 1e-6 * abs(big.primal_obj)
    np.testing.assert_allclose(big.values, base.values, rtol=1e-5, atol=1e-7)


@settings(max_examples=40)
@given(st.integers(0, 100_000), st.sampled_from([-1.0, 1.0]))
def test_pencil_against_bisection(seed, c):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(3, 3))
    B = G @ G.T + 0.5 * np.eye(3)
    A = rng.normal(size=(3, 3))
    A = A + A.T
    ev = np.linalg.eigvalsh(A)
    if ev[0] > -0.1 or ev[-1] < 0.1:
        A = A - np.mean(ev) * np.eye(3)
        ev = np.linalg.eigvalsh(A)
    if ev[0] > -0.1 or ev[-1] < 0.1:
        return
    sol = solve(pencil(c, A, B))
    assert sol.status is SolverStatus.OPTIMAL
    assert abs(sol.values[0] - pencil_oracle(c, A, B)) <= 1e-6 * (1 + abs(sol.values[0]))


def test_text_round_trip(tmp_path, rng):
    prob, _ = schur_trace(rng.normal(size=(3, 2)))
    path = write_sdp(prob, tmp_path / "p.sdp")
    back = read_sdp(path)
    assert back.nvars == prob.nvars and back.block_sizes == prob.block_sizes
    np.testing.assert_array_equal(back.objective, prob.objective)
    for a, c in zip(back.blocks, prob.blocks):
        np.testing.assert_array_equal(a.const, c.const)
        assert abs(a.coeffs - c.coeffs).max() == 0
    write_sdp(back, tmp_path / "q.sdp")
    assert (tmp_path / "q.sdp").read_text() == path.read_text()


def test_documented_example_file():
    from pathlib import Path

    prob = read_sdp(Path(__file__).resolve().parents[1] / "docs" / "example.sdp")
    sol = solve(prob)
    np.testing.assert_allclose(sol.values, [1.0, 0.25], atol=1e-6)


def test_cvxpy_backend_agrees(rng):
    pytest.importorskip("cvxpy")
    prob, _ = schur_trace(rng.normal(size=(4, 2)))
    ours = get_backend("ipm").solve(prob)
    theirs = get_backend("cvxpy").solve(prob)
    assert theirs.status.ok
    assert abs(ours.primal_obj - theirs.primal_obj) <= 1e-5 * (1 + abs(ours.primal_obj))


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("mosek")
