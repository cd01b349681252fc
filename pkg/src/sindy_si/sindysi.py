"""Least squares with side information, alone and inside sequential thresholding."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .regress import FitResult, RegressionProblem, SupportSet, ols, residual_sq, sparseness
from .sdp import SdpSolution, SolverOptions, get_backend, verify
from .sos import CompiledSdp, SideInfoSpec, assemble_sdp

log = logging.getLogger(__name__)

__all__ = ["SindySiConfig", "SiFailure", "fit_si", "fit_sindy_si", "solve_si"]


class SiFailure(RuntimeError):
    """The side-information SDP returned no usable solution."""

    def __init__(self, message: str, solution: SdpSolution | None = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class SindySiConfig:
    lam: float = 0.1
    xi2: float = 0.0
    N: int | None = None
    mult_degree: int | None = None
    backend: str = "ipm"
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(gap_tol=1e-7, feas_tol=1e-7))
    unit_coordinates: bool = True
    verify_tol: float | None = None
    # divide each certificate by its size at the least-squares fit
    scale_certificates: bool = True


def solve_si(prob: RegressionProblem, spec: SideInfoSpec | None, support: SupportSet | None = None,
             xi2: float = 0.0, config: SindySiConfig | None = None) -> tuple[np.ndarray, CompiledSdp, SdpSolution]:
    """Solve one side-information SDP; returns normalized ``W``, the compiled problem and the raw solution.

    The SDP is posed for outputs scaled to unit RMS (with ``xi2`` rescaled to
    match), which is an equivalent problem since every side-information
    constraint is homogeneous in ``W``. The returned ``W`` is in the original
    units; the compiled problem and solution are in the scaled ones.
    """
    cfg = config or SindySiConfig()
    t0 = time.perf_counter()
    sigma = float(np.sqrt(np.mean(prob.Y ** 2)))
    sigma = sigma if sigma > 0 else 1.0
    scaled = RegressionProblem(prob.Phi, prob.Y / sigma, prob.scales, prob.basis)
    ref = ols(scaled, support).W_normalized if cfg.scale_certificates else None
    comp = assemble_sdp(scaled, spec, support, xi2=xi2 / sigma, mult_degree=cfg.mult_degree,
                        unit_coordinates=cfg.unit_coordinates, reference_W=ref)
    backend = get_backend(cfg.backend, options=cfg.solver) if cfg.backend == "ipm" else get_backend(cfg.backend)
    sol = backend.solve(comp.problem)
    sol.info["assemble_and_solve_time"] = time.perf_counter() - t0
    sol.info["output_scale"] = sigma
    if not sol.status.ok:
        raise SiFailure(f"SDP solver status {sol.status.value}", sol)
    if cfg.verify_tol is not None:
        rep = verify(comp.problem, sol, cfg.verify_tol)
        sol.info["verify"] = rep.summary()
        if not rep.passed:
            raise SiFailure(f"solution failed verification: {rep.summary()}", sol)
    return comp.W(sol.values) * sigma, comp, sol


def _diag(comp: CompiledSdp, sol: SdpSolution) -> dict:
    return {
        "solver_status": sol.status.value,
        "solver_iterations": sol.iterations,
        "gap": float(sol.gap),
        "block_sizes": comp.problem.block_sizes,
        "nvars": comp.problem.nvars,
        "equalities": int(comp.problem.eq_rows.shape[0]),
        "certificate_mismatch": [float(v) for v in comp.certificate_mismatch(sol.values)],
        "solve_time": float(sol.info.get("assemble_and_solve_time", np.nan)),
        "output_scale": float(sol.info.get("output_scale", 1.0)),
    }


def fit_si(prob: RegressionProblem, spec: SideInfoSpec | None = None, config: SindySiConfig | None = None,
           support: SupportSet | None = None) -> FitResult:
    """Least squares subject to side information, no thresholding.

    Raises :class:`SiFailure` if the solver does not reach an optimal or
    near-optimal point.
    """
    cfg = config or SindySiConfig()
    support = support or SupportSet.empty()
    W, comp, sol = solve_si(prob, spec, support, 0.0, cfg)
    status = "ok" if sol.status.value == "optimal" else sol.status.value
    return FitResult(W, prob.scales.copy(), prob.basis, support, "SI", 1, [residual_sq(prob, W)], status,
                     diagnostics=_diag(comp, sol))


def fit_sindy_si(prob: RegressionProblem, spec: SideInfoSpec | None = None,
                 config: SindySiConfig | None = None) -> FitResult:
    """Sequential thresholding where every refit is the side-information SDP.

    The first solve has no l1-type term. Later solves fix the accumulated
    eliminations to zero and add ``gamma >= xi2 * |w|`` to the objective.
    Iteration stops when thresholding eliminates nothing new, or after ``N``
    solves. If a later solve fails, the last successful iterate is returned
    with status ``"solver_failure"``; a failure of the first solve raises.

    Each ``history`` entry records the support, the residual, ``W`` and the
    optimal SDP objective ``tr(M) + gamma`` (in the unit-RMS output scaling).
    """
    cfg = config or SindySiConfig()
    N = prob.h * prob.n if cfg.N is None else cfg.N
    if N < 1:
        raise ValueError("N must be at least 1")
    W, comp, sol = solve_si(prob, spec, SupportSet.empty(), 0.0, cfg)
    E = SupportSet.empty()
    history = [{"iteration": 1, "support": E, "objective": residual_sq(prob, W), "W": W,
                "sdp_objective": sol.primal_obj}]
    diag = _diag(comp, sol)
    status = "ok"
    it = 1
    for it in range(2, N + 1):
        new = sparseness(W, cfg.lam) - E
        if not new:
            it -= 1
            break
        E_next = E | new
        try:
            W_next, comp, sol = solve_si(prob, spec, E_next, cfg.xi2, cfg)
        except SiFailure as exc:
            log.warning("side-information solve failed at iteration %d: %s", it, exc)
            status = "solver_failure"
            diag["failure"] = {"iteration": it, "reason": str(exc)}
            it -= 1
            break
        E, W = E_next, W_next
        diag = _diag(comp, sol)
        history.append({"iteration": it, "support": E, "objective": residual_sq(prob, W), "W": W,
                        "sdp_objective": sol.primal_obj})
    diag.update({"lambda": cfg.lam, "xi2": cfg.xi2, "N": N})
    return FitResult(W, prob.scales.copy(), prob.basis, E, "SINDY-SI", it, [h["objective"] for h in history],
                     status, diagnostics=diag, history=history)
