"""Independent a-posteriori check of an SDP solution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .ipm import SdpSolution
from .problem import SdpProblem

__all__ = ["Check", "VerifyReport", "verify"]


@dataclass
class Check:
    name: str
    value: float
    limit: float
    passed: bool


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        bad = self.failures
        if not bad:
            return f"all {len(self.checks)} checks passed"
        return f"{len(bad)}/{len(self.checks)} checks failed: " + ", ".join(c.name for c in bad[:10])


def verify(prob: SdpProblem, sol: SdpSolution, tol: float = 1e-6) -> VerifyReport:
    """Recompute block eigenvalues, linear residuals and the duality gap.

    Block and row checks use the primal values only. The gap check rebuilds
    the dual objective from the stored block multipliers, solving for the
    equality multipliers by least squares; without stored multipliers the
    solver's reported objectives are compared instead.
    """
    y = np.asarray(sol.values, dtype=float)
    rep = VerifyReport()
    for b, blk in enumerate(prob.blocks):
        scale = 1.0 + np.abs(blk.const).max(initial=0.0)
        lam = la.eigvalsh(blk.value(y))[0]
        rep.checks.append(Check(f"block[{b}]{blk.name}", lam, -tol * scale, lam >= -tol * scale))
    eq = prob.eq_rows @ y - prob.eq_rhs
    for i, res in enumerate(eq):
        lim = tol * (1.0 + abs(prob.eq_rhs[i]))
        rep.checks.append(Check(f"eq[{i}]", abs(res), lim, abs(res) <= lim))
    ineq = prob.ineq_rows @ y - prob.ineq_rhs
    for i, res in enumerate(ineq):
        lim = tol * (1.0 + abs(prob.ineq_rhs[i]))
        rep.checks.append(Check(f"ineq[{i}]", res, lim, res <= lim))
    pobj = prob.objective_value(y)
    if sol.block_duals and len(sol.block_duals) == len(prob.blocks):
        grad = prob.objective.copy()
        dual = prob.offset
        for blk, X in zip(prob.blocks, sol.block_duals):
            grad -= blk.coeffs.T @ X.ravel()
            dual -= float(np.sum(blk.const * X))
            lam = la.eigvalsh(X)[0]
            ok = lam >= -tol * (1.0 + np.abs(X).max())
            rep.checks.append(Check(f"dual_psd{blk.name}", lam, 0.0, ok))
        x = sol.ineq_duals
        if x.size:
            grad += prob.ineq_rows.T @ x
            dual -= float(prob.ineq_rhs @ x)
        if prob.eq_rows.shape[0]:
            nu = np.linalg.lstsq(prob.eq_rows.T.toarray(), grad, rcond=None)[0]
            grad -= prob.eq_rows.T @ nu
            dual += float(prob.eq_rhs @ nu)
        stat = np.linalg.norm(grad) / (1.0 + np.linalg.norm(prob.objective))
        rep.checks.append(Check("stationarity", stat, tol, stat <= tol))
    else:
        dual = sol.dual_obj
    gap = abs(pobj - dual) / (1.0 + abs(pobj))
    rep.checks.append(Check("duality_gap", gap, tol, bool(gap <= tol)))
    return rep
