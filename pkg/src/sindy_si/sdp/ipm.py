"""Primal-dual interior-point method for :class:`SdpProblem`.

Pipeline:

1. equality rows are removed by parametrising ``y = y0 + N u`` over their
   null space (inconsistent rows mean the problem is infeasible);
2. directions of ``u`` that change neither a block nor the objective are
   dropped, and the rest are whitened, so the Schur complement matrix is
   nonsingular and well scaled;
3. the remaining pure LMI problem ``min c.v  s.t.  F0 + F(v) >= 0`` is solved
   with an infeasible-start Mehrotra predictor-corrector using the
   Nesterov-Todd direction. Linear inequalities form one diagonal block.

The dual variable ``X`` of every block is kept, so solutions can be checked
independently by :func:`verify`.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .problem import SdpProblem

log = logging.getLogger(__name__)

__all__ = ["SolverStatus", "SdpSolution", "SolverOptions", "solve"]


class SolverStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"

    @property
    def ok(self) -> bool:
        return self in (SolverStatus.OPTIMAL, SolverStatus.NEAR_OPTIMAL)


@dataclass
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    # looser tolerances accepted as NEAR_OPTIMAL when progress stalls
    near_factor: float = 1e3
    infeas_tol: float = 1e-8
    rank_tol: float = 1e-10
    verbose: bool = False


@dataclass
class SdpSolution:
    values: np.ndarray
    status: SolverStatus
    primal_obj: float
    dual_obj: float
    iterations: int
    block_duals: list[np.ndarray] = field(default_factory=list)
    ineq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    info: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return abs(self.primal_obj - self.dual_obj) / (1.0 + abs(self.primal_obj))


# reduction of equalities and flat directions --------------------------------------------

def _nullspace_reduce(prob: SdpProblem, rank_tol: float):
    n = prob.nvars
    A = prob.eq_rows.toarray()
    b = prob.eq_rhs.copy()
    if A.shape[0] == 0:
        return np.zeros(n), np.eye(n), 0.0
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0
    resid0 = np.abs(b[zero]).max(initial=0.0)
    A, b, norms = A[~zero], b[~zero], norms[~zero]
    if A.shape[0] == 0:
        return np.zeros(n), np.eye(n), resid0
    A /= norms[:, None]
    b = b / norms
    U, s, Vt = la.svd(A, full_matrices=True, lapack_driver="gesvd")
    rank = int(np.sum(s > rank_tol * max(1.0, s[0]) * max(A.shape)))
    y0 = Vt[:rank].T @ ((U[:, :rank].T @ b) / s[:rank])
    resid = max(resid0, np.abs(A @ y0 - b).max(initial=0.0))
    return y0, Vt[rank:].T, resid


@dataclass
class _Reduced:
    c: np.ndarray
    F0: list[np.ndarray]
    F: list[np.ndarray]          # (p, k, k) per block
    f0: np.ndarray               # linear inequality slack constants
    Fl: np.ndarray               # (nl, p)
    lift: np.ndarray             # y = y_base + lift @ v
    y_base: np.ndarray
    offset: float


def _reduce(prob: SdpProblem, opts: SolverOptions):
    y0, N, eq_resid = _nullspace_reduce(prob, opts.rank_tol)
    b_scale = 1.0 + np.abs(prob.eq_rhs).max(initial=0.0)
    blocks_u = []
    F0 = []
    for blk in prob.blocks:
        k = blk.size
        F0.append(blk.value(y0))
        blocks_u.append(np.asarray(blk.coeffs @ N))          # (k*k, q)
    A_in = prob.ineq_rows
    f0 = prob.ineq_rhs - A_in @ y0
    Fl_u = -np.asarray(A_in @ N)
    c_u = N.T @ prob.objective
    offset = prob.offset + float(prob.objective @ y0)
    q = N.shape[1]
    if q == 0:
        red = _Reduced(np.zeros(0), F0, [np.zeros((0, b.size, b.size)) for b in prob.blocks], f0,
                       np.zeros((len(f0), 0)), np.zeros((prob.nvars, 0)), y0, offset)
        return red, eq_resid / b_scale
    # rows: upper triangles of every block, inequality rows, objective
    stack = []
    for blk, Bu in zip(prob.blocks, blocks_u):
        k = blk.size
        iu = np.triu_indices(k)
        stack.append(Bu.reshape(k, k, q)[iu])
    stack.append(Fl_u)
    cn = np.linalg.norm(c_u)
    stack.append(c_u[None, :] / max(cn, 1e-300) if cn > 0 else c_u[None, :])
    G = np.vstack(stack)
    _, s, Vt = la.svd(G, full_matrices=False, lapack_driver="gesdd")
    rank = int(np.sum(s > opts.rank_tol * max(s[0], 1e-300))) if s.size else 0
    T = Vt[:rank].T / s[:rank]
    lift = N @ T
    F = [(Bu @ T).T.reshape(rank, blk.size, blk.size) for blk, Bu in zip(prob.blocks, blocks_u)]
    F = [0.5 * (Fi + Fi.transpose(0, 2, 1)) for Fi in F]
    red = _Reduced(T.T @ c_u, F0, F, f0, Fl_u @ T, lift, y0, offset)
    return red, eq_resid / b_scale


# interior point core ---------------------------------------------------------------------

def _max_step(L, D):
    """Largest alpha with L L^T + alpha D PSD (inf when unbounded)."""
    Linv = la.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    M = Linv @ D @ Linv.T
    lam = la.eigvalsh(0.5 * (M + M.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _lp_step(x, dx):
    neg = dx < 0
    return np.inf if not np.any(neg) else float(np.min(-x[neg] / dx[neg]))


class _Ipm:
    def __init__(self, red: _Reduced, opts: SolverOptions):
        self.r = red
        self.o = opts
        self.p = red.c.size
        self.sizes = [F0.shape[0] for F0 in red.F0]
        self.nl = red.f0.size
        self.ntot = sum(self.sizes) + self.nl
        self.Fflat = [F.reshape(self.p, k * k) for F, k in zip(red.F, self.sizes)]

    # linear maps
    def Fop(self, v, b):
        k = self.sizes[b]
        return (v @ self.Fflat[b]).reshape(k, k)

    def Fadj(self, Z, b):
        return self.Fflat[b] @ Z.ravel()

    def run(self):
        r, o = self.r, self.o
        p = self.p
        c = r.c
        v = np.zeros(p)
        X, S = [], []
        for b, k in enumerate(self.sizes):
            Fn = np.linalg.norm(self.Fflat[b], axis=1) if p else np.zeros(0)
            xi = max(10.0, np.sqrt(k), k * np.max((1 + np.abs(c)) / (1 + Fn), initial=0.0))
            eta = max(10.0, np.sqrt(k), np.max(Fn, initial=0.0), np.linalg.norm(r.F0[b]))
            X.append(xi * np.eye(k))
            S.append(eta * np.eye(k))
        if self.nl:
            Fn = np.linalg.norm(r.Fl, axis=0)
            xi = max(10.0, np.sqrt(self.nl), self.nl * np.max((1 + np.abs(c)) / (1 + Fn), initial=0.0))
            eta = max(10.0, np.sqrt(self.nl), np.max(Fn, initial=0.0), np.linalg.norm(r.f0))
            x = np.full(self.nl, xi)
            s = np.full(self.nl, eta)
        else:
            x = s = np.zeros(0)
        F0norm = np.sqrt(sum(np.sum(F0 ** 2) for F0 in r.F0) + np.sum(r.f0 ** 2))
        cnorm = np.linalg.norm(c)
        best = None
        status = SolverStatus.MAX_ITER
        it = 0
        stall = 0
        for it in range(o.max_iter + 1):
            # residuals
            Rd = [r.F0[b] + self.Fop(v, b) - S[b] for b in range(len(S))]
            rd = r.f0 + r.Fl @ v - s if self.nl else np.zeros(0)
            FX = sum((self.Fadj(X[b], b) for b in range(len(X))), np.zeros(p))
            if self.nl:
                FX = FX + r.Fl.T @ x
            rp = c - FX
            XS = sum(np.sum(X[b] * S[b]) for b in range(len(X))) + x @ s
            mu = XS / max(self.ntot, 1)
            pobj = c @ v
            F0X = sum(np.sum(r.F0[b] * X[b]) for b in range(len(X))) + r.f0 @ x
            dobj = -F0X
            pinf = np.sqrt(sum(np.sum(R ** 2) for R in Rd) + rd @ rd) / (1 + F0norm)
            dinf = np.linalg.norm(rp) / (1 + cnorm)
            gap = abs(pobj - dobj) / (1 + abs(pobj))
            if not (np.isfinite(pobj) and np.isfinite(dobj) and np.isfinite(mu)):
                status = SolverStatus.NUMERICAL_FAILURE
                break
            err = max(pinf / o.feas_tol, dinf / o.feas_tol, gap / o.gap_tol)
            if best is None or err < best[0]:
                best = (err, v.copy(), [Xb.copy() for Xb in X], x.copy(), pobj, dobj, it, pinf, dinf, gap)
            if o.verbose:
                log.info("it %3d pobj %+.8e dobj %+.8e gap %.1e pinf %.1e dinf %.1e mu %.1e",
                         it, pobj, dobj, gap, pinf, dinf, mu)
            if err <= 1.0:
                status = SolverStatus.OPTIMAL
                break
            # infeasibility certificate: X >= 0 with F*(X) ~ 0 and <F0, X> < 0
            if F0X < 0 and np.linalg.norm(FX) <= o.infeas_tol * (-F0X):
                status = SolverStatus.INFEASIBLE
                break
            if pobj < -1e12 * (1 + cnorm) and pinf < 1e-6:
                status = SolverStatus.UNBOUNDED
                break
            if it == o.max_iter:
                break
            try:
                step = self._step(v, X, S, x, s, Rd, rd, rp, mu)
            except (np.linalg.LinAlgError, la.LinAlgError, FloatingPointError):
                step = None
            if step is None:
                status = SolverStatus.NUMERICAL_FAILURE
                break
            v, X, S, x, s, ap, ad = step
            if o.verbose:
                log.info("    step ap %.2e ad %.2e", ap, ad)
            stall = stall + 1 if max(ap, ad) < 1e-7 else 0
            if stall >= 5:
                break
        err, v, X, x, pobj, dobj, bit, pinf, dinf, gap = best
        if status in (SolverStatus.MAX_ITER, SolverStatus.NUMERICAL_FAILURE) and err <= o.near_factor:
            status = SolverStatus.NEAR_OPTIMAL
        return v, X, x, status, pobj, dobj, it, {"pinf": pinf, "dinf": dinf, "gap": gap, "best_iter": bit}

    def _step(self, v, X, S, x, s, Rd, rd, rp, mu):
        r = self.r
        nb = len(X)
        G, Ginv, W, lam, LX, LS = [], [], [], [], [], []
        for b in range(nb):
            Lx = la.cholesky(X[b], lower=True)
            Ls = la.cholesky(S[b], lower=True)
            U, d, Vt = la.svd(Ls.T @ Lx)
            Gb = (Lx @ Vt.T) / np.sqrt(d)
            Ginvb = (np.sqrt(d)[:, None] * Vt) @ la.solve_triangular(Lx, np.eye(len(d)), lower=True)
            G.append(Gb)
            Ginv.append(Ginvb)
            W.append(Gb @ Gb.T)
            lam.append(d)
            LX.append(Lx)
            LS.append(Ls)
        # Schur complement matrix
        p = self.p
        H = np.zeros((p, p))
        for b in range(nb):
            WFW = np.matmul(np.matmul(W[b], r.F[b]), W[b]).reshape(p, -1)
            H += self.Fflat[b] @ WFW.T
        if self.nl:
            H += r.Fl.T @ ((x / s)[:, None] * r.Fl)
        H = 0.5 * (H + H.T)
        Hfac0 = self._factor(H)

        def Hfac(rhs):
            # iterative refinement against the unfactored matrix
            dv = Hfac0(rhs)
            for _ in range(3):
                res = rhs - H @ dv
                if np.linalg.norm(res) <= 1e-14 * (1 + np.linalg.norm(rhs)):
                    break
                dv = dv + Hfac0(res)
            return dv

        def direction(Rc, rc):
            rhs = -rp.copy()
            for b in range(nb):
                rhs += self.Fadj(Rc[b] - W[b] @ Rd[b] @ W[b], b)
            if self.nl:
                rhs += r.Fl.T @ (rc - (x / s) * rd)
            dv = Hfac(rhs)
            dS = [Rd[b] + self.Fop(dv, b) for b in range(nb)]
            dX = []
            for b in range(nb):
                D = Rc[b] - W[b] @ dS[b] @ W[b]
                dX.append(0.5 * (D + D.T))
            if self.nl:
                ds = rd + r.Fl @ dv
                dx = rc - (x / s) * ds
            else:
                ds = dx = np.zeros(0)
            return dv, dX, dS, dx, ds

        def steps(dX, dS, dx, ds):
            ap = min([_max_step(LX[b], dX[b]) for b in range(nb)] + [_lp_step(x, dx)])
            ad = min([_max_step(LS[b], dS[b]) for b in range(nb)] + [_lp_step(s, ds)])
            return ap, ad

        # predictor
        dv, dX, dS, dx, ds = direction([-Xb for Xb in X], -x)
        ap, ad = steps(dX, dS, dx, ds)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = (sum(np.sum((X[b] + ap * dX[b]) * (S[b] + ad * dS[b])) for b in range(nb))
                  + (x + ap * dx) @ (s + ad * ds)) / max(self.ntot, 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
        # corrector
        Rc = []
        for b in range(nb):
            dXt = Ginv[b] @ dX[b] @ Ginv[b].T
            dSt = G[b].T @ dS[b] @ G[b]
            corr = 0.5 * (dXt @ dSt + dSt @ dXt)
            d = lam[b]
            Z = -corr
            Z[np.diag_indices_from(Z)] += sigma * mu - d ** 2
            Zt = 2.0 * Z / (d[:, None] + d[None, :])
            Rc.append(G[b] @ Zt @ G[b].T)
        rc = (sigma * mu - x * s - dx * ds) / s if self.nl else np.zeros(0)
        dv, dX, dS, dx, ds = direction(Rc, rc)
        ap_max, ad_max = steps(dX, dS, dx, ds)
        tau = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, tau * ap_max)
        ad = min(1.0, tau * ad_max)
        X = [X[b] + ap * dX[b] for b in range(nb)]
        S = [S[b] + ad * dS[b] for b in range(nb)]
        X = [0.5 * (M + M.T) for M in X]
        S = [0.5 * (M + M.T) for M in S]
        if self.nl:
            x = x + ap * dx
            s = s + ad * ds
        v = v + ad * dv
        return v, X, S, x, s, ap, ad

    @staticmethod
    def _factor(H):
        scale = np.sqrt(np.maximum(np.diag(H), 1e-300))
        Hs = H / scale[:, None] / scale[None, :]
        reg = 0.0
        for _ in range(8):
            try:
                cf = la.cho_factor(Hs + reg * np.eye(len(H)), lower=True, check_finite=True)
                return lambda rhs: la.cho_solve(cf, rhs / scale) / scale
            except la.LinAlgError:
                reg = 1e-14 if reg == 0 else reg * 100
        lst = la.pinvh(Hs)
        return lambda rhs: (lst @ (rhs / scale)) / scale


def solve(prob: SdpProblem, gap_tol: float = 1e-8, feas_tol: float = 1e-8, max_iter: int = 200,
          options: SolverOptions | None = None) -> SdpSolution:
    """Solve ``prob``; always returns the best iterate together with an honest status."""
    opts = options or SolverOptions(gap_tol=gap_tol, feas_tol=feas_tol, max_iter=max_iter)
    t0 = time.perf_counter()
    red, eq_resid = _reduce(prob, opts)
    if eq_resid > max(opts.feas_tol, 1e-9) * 10:
        return SdpSolution(red.y_base, SolverStatus.INFEASIBLE, np.nan, np.nan, 0,
                           info={"reason": "inconsistent equality constraints", "eq_resid": eq_resid})
    ipm = _Ipm(red, opts)
    if ipm.p == 0:
        return _fixed_point(prob, red, opts, eq_resid, t0)
    with np.errstate(invalid="raise", divide="raise", over="raise"):
        try:
            v, X, x, status, pobj, dobj, its, info = ipm.run()
        except FloatingPointError:
            v, X, x = np.zeros(ipm.p), [], np.zeros(0)
            status, pobj, dobj, its, info = SolverStatus.NUMERICAL_FAILURE, np.nan, np.nan, 0, {}
    y = red.y_base + red.lift @ v
    info.update({"eq_resid": eq_resid, "reduced_vars": ipm.p, "time": time.perf_counter() - t0})
    return SdpSolution(y, status, pobj + red.offset, dobj + red.offset, its, X, x, info)


def _fixed_point(prob, red, opts, eq_resid, t0):
    """Every variable is pinned by the equalities: only feasibility is left to decide."""
    y = red.y_base
    worst = min([la.eigvalsh(F0)[0] for F0 in red.F0 if F0.size] + [red.f0.min(initial=np.inf)])
    ok = worst >= -opts.feas_tol
    status = SolverStatus.OPTIMAL if ok else SolverStatus.INFEASIBLE
    obj = red.offset
    return SdpSolution(y, status, obj, obj if ok else np.nan, 0,
                       info={"eq_resid": eq_resid, "reduced_vars": 0, "min_eig": worst,
                             "time": time.perf_counter() - t0})
