"""Pluggable solver backends.

Anything with ``solve(prob) -> SdpSolution`` can serve; the built-in
interior-point method is the default and :class:`CvxpyBackend` hands the same
problem to an external conic solver for cross-checking.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .ipm import SdpSolution, SolverOptions, SolverStatus, solve
from .problem import SdpProblem


class SdpBackend(Protocol):
    name: str

    def solve(self, prob: SdpProblem) -> SdpSolution: ...


class InteriorPointBackend:
    name = "ipm"

    def __init__(self, options: SolverOptions | None = None, **kwargs):
        self.options = options or SolverOptions(**kwargs)

    def solve(self, prob: SdpProblem) -> SdpSolution:
        return solve(prob, options=self.options)


class CvxpyBackend:
    """Solve through cvxpy (optional dependency)."""

    name = "cvxpy"

    def __init__(self, solver: str = "CLARABEL", **solver_opts):
        self.solver = solver
        self.solver_opts = solver_opts

    def solve(self, prob: SdpProblem) -> SdpSolution:
        import cvxpy as cp

        y = cp.Variable(prob.nvars)
        cons = []
        for blk in prob.blocks:
            k = blk.size
            expr = blk.const + cp.reshape(blk.coeffs @ y, (k, k), order="C")
            cons.append(0.5 * (expr + expr.T) >> 0)
        if prob.eq_rows.shape[0]:
            cons.append(prob.eq_rows @ y == prob.eq_rhs)
        if prob.ineq_rows.shape[0]:
            cons.append(prob.ineq_rows @ y <= prob.ineq_rhs)
        cvx = cp.Problem(cp.Minimize(prob.objective @ y + prob.offset), cons)
        try:
            cvx.solve(solver=self.solver, **self.solver_opts)
        except cp.error.SolverError as exc:
            return SdpSolution(np.full(prob.nvars, np.nan), SolverStatus.NUMERICAL_FAILURE,
                               np.nan, np.nan, 0, info={"error": str(exc)})
        status = {
            cp.OPTIMAL: SolverStatus.OPTIMAL,
            cp.OPTIMAL_INACCURATE: SolverStatus.NEAR_OPTIMAL,
            cp.INFEASIBLE: SolverStatus.INFEASIBLE,
            cp.INFEASIBLE_INACCURATE: SolverStatus.INFEASIBLE,
            cp.UNBOUNDED: SolverStatus.UNBOUNDED,
            cp.UNBOUNDED_INACCURATE: SolverStatus.UNBOUNDED,
        }.get(cvx.status, SolverStatus.NUMERICAL_FAILURE)
        vals = y.value if y.value is not None else np.full(prob.nvars, np.nan)
        obj = float(cvx.value) if status.ok else np.nan
        return SdpSolution(np.asarray(vals, dtype=float), status, obj, obj,
                           int(cvx.solver_stats.num_iters or 0), info={"solver": self.solver})


def get_backend(name: str = "ipm", **kwargs) -> SdpBackend:
    if name == "ipm":
        return InteriorPointBackend(**kwargs)
    if name == "cvxpy":
        return CvxpyBackend(**kwargs)
    raise ValueError(f"unknown SDP backend {name!r}")
