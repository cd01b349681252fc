"""Multivariate polynomials over a monomial basis.

Monomials are tuples of nonnegative exponents. Bases are ordered graded
lexicographically: by total degree first, then lexicographically with
``x1`` as the most significant variable, so ``basis(2, 2)`` is
``[1, x1, x2, x1^2, x1*x2, x2^2]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]

#: Largest basis :func:`monomial_basis` will build.
MAX_BASIS_SIZE = 2_000_000


class BasisCapacityError(ValueError):
    """Requested basis has more monomials than :data:`MAX_BASIS_SIZE`."""


def grlex_key(mono: Monomial) -> tuple:
    return (sum(mono),) + tuple(-e for e in mono)


def _monomials_of_degree(nvars: int, degree: int) -> list[Monomial]:
    # compositions of `degree` into `nvars` parts, lexicographically descending
    if nvars == 1:
        return [(degree,)]
    out = []
    for first in range(degree, -1, -1):
        for rest in _monomials_of_degree(nvars - 1, degree - first):
            out.append((first,) + rest)
    return out


@dataclass(frozen=True)
class PolyBasis:
    """Ordered list of monomials; ``eval`` maps states to regressor rows."""

    nvars: int
    degree: int
    monomials: tuple[Monomial, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {m: k for k, m in enumerate(self.monomials)}
        if len(index) != len(self.monomials):
            raise ValueError("duplicate monomials in basis")
        if any(len(m) != self.nvars for m in self.monomials):
            raise ValueError("monomial length does not match nvars")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __getitem__(self, k: int) -> Monomial:
        return self.monomials[k]

    def index(self, mono: Monomial) -> int:
        return self._index[tuple(mono)]

    def __contains__(self, mono) -> bool:
        return tuple(mono) in self._index

    @property
    def exponents(self) -> np.ndarray:
        """``(h, nvars)`` integer array of exponents."""
        return np.array(self.monomials, dtype=int).reshape(len(self), self.nvars)

    def eval(self, x) -> np.ndarray:
        """Evaluate every basis monomial.

        ``x`` of shape ``(nvars,)`` gives a length-``h`` vector; ``(k, nvars)``
        gives a ``(k, h)`` matrix.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.nvars:
            raise ValueError(f"expected points with {self.nvars} coordinates, got {pts.shape[1]}")
        out = _eval_monomials(self.exponents, pts)
        return out[0] if single else out

    def labels(self, names: Sequence[str] | None = None) -> list[str]:
        return [monomial_str(m, names) for m in self.monomials]


def _eval_monomials(exps: np.ndarray, pts: np.ndarray) -> np.ndarray:
    maxdeg = int(exps.max()) if exps.size else 0
    # powers[p, i, k] = pts[p, i] ** k, built by repeated multiplication so 0**0 == 1
    powers = np.ones((pts.shape[0], pts.shape[1], maxdeg + 1))
    for k in range(1, maxdeg + 1):
        powers[:, :, k] = powers[:, :, k - 1] * pts
    out = np.ones((pts.shape[0], exps.shape[0]))
    for i in range(pts.shape[1]):
        out *= powers[:, i, exps[:, i]]
    return out


def monomial_basis(nvars: int, degree: int) -> PolyBasis:
    """All monomials of total degree ``<= degree`` in graded-lex order."""
    if nvars < 1 or degree < 0:
        raise ValueError("need nvars >= 1 and degree >= 0")
    size = comb(nvars + degree, degree)
    if size > MAX_BASIS_SIZE:
        raise BasisCapacityError(f"basis({nvars}, {degree}) has {size} monomials")
    monos = []
    for d in range(degree + 1):
        monos.extend(_monomials_of_degree(nvars, d))
    return PolyBasis(nvars, degree, tuple(monos))


def eval_basis(basis: PolyBasis, x) -> np.ndarray:
    return basis.eval(x)


def monomial_str(mono: Monomial, names: Sequence[str] | None = None) -> str:
    if names is None:
        names = [f"x{i + 1}" for i in range(len(mono))]
    parts = []
    for name, e in zip(names, mono):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) if parts else "1"


class Polynomial:
    """Real polynomial stored as ``{exponent tuple: coefficient}``.

    Exact zeros are dropped on construction; nothing else is pruned.
    Instances are treated as immutable.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, terms: Mapping[Monomial, float] | Iterable = (), nvars: int | None = None):
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[Monomial, float] = {}
        for mono, c in items:
            mono = tuple(int(e) for e in mono)
            clean[mono] = clean.get(mono, 0.0) + float(c)
        if nvars is None:
            if not clean:
                raise ValueError("nvars is required for the zero polynomial")
            nvars = len(next(iter(clean)))
        if any(len(m) != nvars or min(m, default=0) < 0 for m in clean):
            raise ValueError("monomials must have nvars nonnegative exponents")
        self.nvars = nvars
        self._terms = {m: c for m, c in clean.items() if c != 0.0}

    # construction helpers
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls({}, nvars)

    @classmethod
    def constant(cls, c: float, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Polynomial":
        """The coordinate ``x_{i+1}`` (``i`` is zero-based)."""
        mono = [0] * nvars
        mono[i] = 1
        return cls({tuple(mono): 1.0}, nvars)

    @classmethod
    def from_coefficients(cls, basis: PolyBasis, coeffs) -> "Polynomial":
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(zip(basis.monomials, coeffs), basis.nvars)

    @property
    def terms(self) -> dict[Monomial, float]:
        return dict(self._terms)

    def coeff(self, mono: Monomial) -> float:
        return self._terms.get(tuple(mono), 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def monomials(self) -> list[Monomial]:
        return sorted(self._terms, key=grlex_key)

    def coefficients(self, basis: PolyBasis) -> np.ndarray:
        out = np.zeros(len(basis))
        for m, c in self._terms.items():
            out[basis.index(m)] = c
        return out

    def _check(self, other: "Polynomial"):
        if self.nvars != other.nvars:
            raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if np.isscalar(other):
            return Polynomial.constant(float(other), self.nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, 0.0) + c
        return Polynomial(terms, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()}, self.nvars)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return Polynomial({m: c * float(other) for m, c in self._terms.items()}, self.nvars)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[Monomial, float] = {}
        for (ma, ca), (mb, cb) in itertools.product(self._terms.items(), other._terms.items()):
            m = tuple(a + b for a, b in zip(ma, mb))
            terms[m] = terms.get(m, 0.0) + ca * cb
        return Polynomial(terms, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.constant(1.0, self.nvars)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self._terms.items())))

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at one point ``(nvars,)`` or many points ``(k, nvars)``."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.nvars:
            raise ValueError(f"expected points with {self.nvars} coordinates")
        if not self._terms:
            vals = np.zeros(pts.shape[0])
        else:
            monos = list(self._terms)
            exps = np.array(monos, dtype=int)
            coefs = np.array([self._terms[m] for m in monos])
            vals = _eval_monomials(exps, pts) @ coefs
        return float(vals[0]) if single else vals

    def diff(self, i: int) -> "Polynomial":
        """Partial derivative with respect to ``x_{i+1}`` (zero-based ``i``)."""
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        terms = {}
        for m, c in self._terms.items():
            if m[i] > 0:
                dm = list(m)
                dm[i] -= 1
                terms[tuple(dm)] = c * m[i]
        return Polynomial(terms, self.nvars)

    def affine_substitute(self, center, scale: float) -> "Polynomial":
        """Return ``q(u) = p(center + scale * u)``."""
        center = np.asarray(center, dtype=float)
        if center.shape != (self.nvars,):
            raise ValueError("center has the wrong dimension")
        # (c + s u)^e expanded once per (variable, exponent)
        cache: dict[tuple[int, int], Polynomial] = {}

        def factor(i, e):
            key = (i, e)
            if key not in cache:
                terms = {}
                for k in range(e + 1):
                    mono = [0] * self.nvars
                    mono[i] = k
                    terms[tuple(mono)] = comb(e, k) * center[i] ** (e - k) * scale**k
                cache[key] = Polynomial(terms, self.nvars)
            return cache[key]

        out = Polynomial.zero(self.nvars)
        for m, c in self._terms.items():
            term = Polynomial.constant(c, self.nvars)
            for i, e in enumerate(m):
                if e:
                    term = term * factor(i, e)
            out = out + term
        return out

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m in self.monomials():
            c = self._terms[m]
            ms = monomial_str(m, names)
            parts.append(f"{c:.6g}" if ms == "1" else f"{c:.6g}*{ms}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"Polynomial({self.to_string()})"

    __str__ = to_string


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    if p.nvars != q.nvars:
        raise ValueError(f"nvars mismatch: {p.nvars} vs {q.nvars}")
    return p * q


def partial_derivative(p: Polynomial, i: int) -> Polynomial:
    """``dp/dx_i`` with a one-based variable index, as in ``x1..xn``."""
    if not 1 <= i <= p.nvars:
        raise IndexError(f"variable index {i} out of range 1..{p.nvars}")
    return p.diff(i - 1)


def gram_expand(Q, halfbasis: PolyBasis | Sequence[Monomial], nvars: int | None = None) -> Polynomial:
    """Expand ``z(x)^T Q z(x)`` for the monomial vector ``z`` of ``halfbasis``."""
    monos = list(halfbasis.monomials if isinstance(halfbasis, PolyBasis) else halfbasis)
    if nvars is None:
        nvars = halfbasis.nvars if isinstance(halfbasis, PolyBasis) else len(monos[0])
    Q = np.asarray(Q, dtype=float)
    k = len(monos)
    if Q.shape != (k, k):
        raise ValueError(f"Gram matrix must be {k}x{k}, got {Q.shape}")
    terms: dict[Monomial, float] = {}
    for a in range(k):
        for b in range(k):
            if Q[a, b] != 0.0:
                m = tuple(x + y for x, y in zip(monos[a], monos[b]))
                terms[m] = terms.get(m, 0.0) + Q[a, b]
    return Polynomial(terms, nvars)
