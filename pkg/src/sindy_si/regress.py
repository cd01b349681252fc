"""Regression problems, least squares baselines and sequential thresholding.

Coefficients live in two scales: ``W_normalized`` multiplies the
unit-norm regressor columns, ``W_physical = W_normalized / scales[:, None]``
multiplies the raw monomials. Thresholding always happens on the normalized
scale so one ``lam`` is meaningful for every basis function.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.linalg as la

from .ode import Dataset
from .poly import PolyBasis, Polynomial

__all__ = ["RegressionProblem", "SupportSet", "FitResult", "build_regression", "regression_from_arrays",
           "ols", "sparseness", "sindy"]


@dataclass(frozen=True)
class SupportSet:
    """Set of eliminated ``(basis index, output index)`` pairs, zero-based."""

    eliminated: frozenset = frozenset()

    @classmethod
    def empty(cls) -> "SupportSet":
        return cls(frozenset())

    @classmethod
    def full(cls, h: int, n: int) -> "SupportSet":
        return cls(frozenset((i, j) for i in range(h) for j in range(n)))

    @classmethod
    def from_mask(cls, mask) -> "SupportSet":
        return cls(frozenset(map(tuple, np.argwhere(np.asarray(mask, dtype=bool)).tolist())))

    def mask(self, h: int, n: int) -> np.ndarray:
        out = np.zeros((h, n), dtype=bool)
        for i, j in self.eliminated:
            out[i, j] = True
        return out

    def __or__(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(self.eliminated | other.eliminated)

    def __sub__(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(self.eliminated - other.eliminated)

    def __le__(self, other: "SupportSet") -> bool:
        return self.eliminated <= other.eliminated

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.eliminated

    def __len__(self) -> int:
        return len(self.eliminated)

    def __iter__(self):
        return iter(sorted(self.eliminated))

    def __bool__(self) -> bool:
        return bool(self.eliminated)


@dataclass
class RegressionProblem:
    Phi: np.ndarray
    Y: np.ndarray
    scales: np.ndarray
    basis: PolyBasis

    def __post_init__(self):
        if self.Phi.shape[0] != self.Y.shape[0]:
            raise ValueError("Phi and Y need the same number of rows")
        if self.Phi.shape[1] != len(self.basis) or self.scales.shape != (len(self.basis),):
            raise ValueError("Phi columns, scales and basis size disagree")

    @property
    def h(self) -> int:
        return self.Phi.shape[1]

    @property
    def n(self) -> int:
        return self.Y.shape[1]

    @property
    def rows(self) -> int:
        return self.Phi.shape[0]

    @property
    def Phi_raw(self) -> np.ndarray:
        return self.Phi * self.scales


def regression_from_arrays(X, Y, basis: PolyBasis, normalize: bool = True) -> RegressionProblem:
    """Regression problem from stacked states ``X`` (rows x n) and outputs ``Y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    if X.shape[1] != basis.nvars:
        raise ValueError(f"basis has {basis.nvars} variables, data has {X.shape[1]}")
    Phi = basis.eval(X)
    scales = np.ones(Phi.shape[1])
    if normalize:
        norms = np.linalg.norm(Phi, axis=0)
        scales = np.where(norms > 0, norms, 1.0)
        Phi = Phi / scales
    return RegressionProblem(Phi, Y.copy(), scales, basis)


def build_regression(data: Dataset, basis: PolyBasis, normalize: bool = True) -> RegressionProblem:
    """Stack every trajectory's regressor and output blocks in trajectory order."""
    if data.m == 0:
        raise ValueError("empty dataset")
    X = np.vstack([tr.states for tr in data.trajectories])
    Y = np.vstack(data.outputs)
    return regression_from_arrays(X, Y, basis, normalize)


@dataclass
class FitResult:
    W_normalized: np.ndarray
    scales: np.ndarray
    basis: PolyBasis
    support: SupportSet
    method: str
    iterations: int = 1
    objective_history: list[float] = field(default_factory=list)
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)

    @property
    def W_physical(self) -> np.ndarray:
        return self.W_normalized / self.scales[:, None]

    @property
    def n(self) -> int:
        return self.W_normalized.shape[1]

    def predict(self, X) -> np.ndarray:
        """Model output at physical states ``X`` (one row per point)."""
        X = np.asarray(X, dtype=float)
        return self.basis.eval(X) @ self.W_physical

    def polynomials(self) -> list[Polynomial]:
        Wp = self.W_physical
        return [Polynomial.from_coefficients(self.basis, Wp[:, j]) for j in range(self.n)]

    def nonzeros(self) -> int:
        return int(np.count_nonzero(self.W_normalized))

    def describe(self) -> str:
        return "\n".join(f"f{j + 1}(x) = {p.to_string()}" for j, p in enumerate(self.polynomials()))

    def to_rows(self) -> list[tuple[str, int, float]]:
        labels = self.basis.labels()
        Wp = self.W_physical
        return [(labels[i], j + 1, float(Wp[i, j]))
                for j in range(self.n) for i in range(len(labels)) if self.W_normalized[i, j] != 0.0]

    def diagnostics_dict(self) -> dict:
        return {
            "method": self.method,
            "status": self.status,
            "iterations": self.iterations,
            "objective_history": [float(v) for v in self.objective_history],
            "eliminated": len(self.support),
            "nonzeros": self.nonzeros(),
            **self.diagnostics,
        }

    def save(self, path) -> tuple[Path, Path]:
        """Write ``<path>.csv`` (term, output, coefficient) and ``<path>.json`` diagnostics."""
        path = Path(path)
        csv_path, json_path = path.with_suffix(".csv"), path.with_suffix(".json")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["term", "output", "coefficient"])
            for term, out, coef in self.to_rows():
                w.writerow([term, out, repr(coef)])
        json_path.write_text(json.dumps(self.diagnostics_dict(), indent=2, default=_jsonable))
        return csv_path, json_path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def residual_sq(prob: RegressionProblem, W) -> float:
    return float(np.sum((prob.Y - prob.Phi @ W) ** 2))


def ols(prob: RegressionProblem, fixed_zero: SupportSet | None = None) -> FitResult:
    """Least squares per output column over the columns not eliminated there.

    Uses a complete orthogonal factorization (pivoted QR), so rank-deficient
    systems get the minimum-norm solution and are flagged.
    """
    fixed_zero = fixed_zero or SupportSet.empty()
    mask = fixed_zero.mask(prob.h, prob.n)
    W = np.zeros((prob.h, prob.n))
    deficient = []
    ranks = []
    for j in range(prob.n):
        keep = np.flatnonzero(~mask[:, j])
        if keep.size == 0:
            ranks.append(0)
            continue
        sol, _res, rank, _sv = la.lstsq(prob.Phi[:, keep], prob.Y[:, j], lapack_driver="gelsy")
        W[keep, j] = sol
        ranks.append(int(rank))
        if rank < keep.size:
            deficient.append(j)
    return FitResult(W, prob.scales.copy(), prob.basis, fixed_zero, "OLS", 1, [residual_sq(prob, W)],
                     diagnostics={"rank_deficient": bool(deficient), "deficient_outputs": deficient,
                                  "ranks": ranks})


def sparseness(W, lam: float) -> SupportSet:
    """Indices of entries with ``|w| < lam`` (strict)."""
    if lam <= 0:
        raise ValueError("threshold must be positive")
    return SupportSet.from_mask(np.abs(np.asarray(W)) < lam)


def sindy(prob: RegressionProblem, lam: float, N: int | None = None) -> FitResult:
    """Sequentially thresholded least squares.

    Solve, threshold, refit with the accumulated eliminations fixed to zero.
    Stops when thresholding adds nothing new (returning the current iterate)
    or after ``N`` solves, ``N`` defaulting to ``h * n``.
    """
    N = prob.h * prob.n if N is None else N
    if N < 1:
        raise ValueError("N must be at least 1")
    fit = ols(prob)
    E = SupportSet.empty()
    objective = [fit.objective_history[0]]
    history = [{"iteration": 1, "support": E, "objective": objective[0], "W": fit.W_normalized}]
    rank_flag = fit.diagnostics["rank_deficient"]
    it = 1
    for it in range(2, N + 1):
        new = sparseness(fit.W_normalized, lam) - E
        if not new:
            it -= 1
            break
        E = E | new
        fit = ols(prob, E)
        rank_flag = rank_flag or fit.diagnostics["rank_deficient"]
        objective.append(fit.objective_history[0])
        history.append({"iteration": it, "support": E, "objective": objective[-1], "W": fit.W_normalized})
    return FitResult(fit.W_normalized, prob.scales.copy(), prob.basis, fit.support, "SINDY", it, objective,
                     diagnostics={"rank_deficient": rank_flag, "lambda": lam, "N": N}, history=history)


def support_of(W) -> SupportSet:
    return SupportSet.from_mask(np.asarray(W) == 0.0)


def union(sets: Iterable[SupportSet]) -> SupportSet:
    out = SupportSet.empty()
    for s in sets:
        out = out | s
    return out
