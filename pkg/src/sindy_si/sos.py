"""Side information compiled into an SDP.

Equality side information (equilibria, odd symmetry) becomes linear rows on
the coefficient matrix. Inequality side information becomes a Putinar-type
certificate::

    target(x) - z(x) g(x) - w(x) a(x) = sigma(x),     z, w, sigma SOS

where ``g >= 0`` describes a ball and ``a >= 0`` an optional gating halfspace.
Each SOS polynomial is a Gram form over a monomial half-basis; matching
coefficients gives linear equations between Gram entries and the model
coefficients.

Certificates are written in ball coordinates ``u = (x - center) / radius``,
where ``g(u) = 1 - |u|^2``. An invertible affine change of variables keeps
degrees and SOS membership, so this is the same constraint as in ``x`` but
with far better scaled coefficients.

All model coefficients enter through the normalized ``W`` used by the
least-squares block (physical coefficient = normalized / scale).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil
from typing import Sequence, Union

import numpy as np

from .poly import Monomial, PolyBasis, Polynomial, gram_expand, grlex_key, monomial_basis
from .regress import RegressionProblem, SupportSet
from .sdp import SdpBuilder, SdpProblem

__all__ = [
    "Region", "Equilibrium", "OddSymmetry", "SignedDerivative", "SignedComponent", "SideInfoSpec",
    "AffinePolynomial", "SosBlock", "CompiledConstraints", "CompiledSdp", "DegreeError",
    "compile_equilibrium", "compile_odd_symmetry", "compile_signed_inequality", "compile_side_info",
    "assemble_sdp", "certificate_problem", "sample_ball", "check_side_info",
]


class DegreeError(ValueError):
    """Gram half-bases cannot represent the requested certificate."""


@dataclass(frozen=True)
class Region:
    """Ball ``{x : radius^2 - |x - center|^2 >= 0}``."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def nvars(self) -> int:
        return len(self.center)

    def g(self) -> Polynomial:
        """``g`` in physical coordinates."""
        n = self.nvars
        out = Polynomial.constant(self.radius ** 2, n)
        for i, c in enumerate(self.center):
            d = Polynomial.variable(i, n) - c
            out = out - d * d
        return out

    def g_unit(self) -> Polynomial:
        """``g`` in ball coordinates, divided by ``radius^2``: ``1 - |u|^2``."""
        n = self.nvars
        out = Polynomial.constant(1.0, n)
        for i in range(n):
            u = Polynomial.variable(i, n)
            out = out - u * u
        return out

    def to_unit(self, p: Polynomial) -> Polynomial:
        return p.affine_substitute(self.center, self.radius)

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Equilibrium:
    point: tuple

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(p) for p in self.point))


@dataclass(frozen=True)
class OddSymmetry:
    """``f(x) = -f(-x)``."""


@dataclass(frozen=True)
class SignedDerivative:
    """``sign * d f_component / d x_variable >= 0`` on ``region`` (zero-based indices)."""

    component: int
    variable: int
    sign: int
    region: Region | None
    mult_degree: int | None = None


@dataclass(frozen=True)
class SignedComponent:
    """``sign * f_component(x) >= 0`` on ``region`` wherever ``activation(x) >= 0``."""

    component: int
    sign: int
    region: Region | None
    activation: Polynomial | None = None
    mult_degree: int | None = None


Constraint = Union[Equilibrium, OddSymmetry, SignedDerivative, SignedComponent]


@dataclass
class SideInfoSpec:
    constraints: list = field(default_factory=list)

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def to_dict(self) -> dict:
        """JSON form; component and variable indices are one-based there."""
        out = []
        for c in self.constraints:
            if isinstance(c, Equilibrium):
                out.append({"type": "equilibrium", "point": list(c.point)})
            elif isinstance(c, OddSymmetry):
                out.append({"type": "odd_symmetry"})
            elif isinstance(c, SignedDerivative):
                out.append({"type": "signed_derivative", "component": c.component + 1,
                            "variable": c.variable + 1, "sign": c.sign,
                            "region": c.region.to_dict() if c.region else None,
                            "mult_degree": c.mult_degree})
            elif isinstance(c, SignedComponent):
                act = None
                if c.activation is not None:
                    act = [[list(m), v] for m, v in sorted(c.activation.terms.items(), key=lambda t: grlex_key(t[0]))]
                out.append({"type": "signed_component", "component": c.component + 1, "sign": c.sign,
                            "region": c.region.to_dict() if c.region else None,
                            "activation": act, "mult_degree": c.mult_degree})
        return {"constraints": out}

    @classmethod
    def from_dict(cls, data: dict, nvars: int, region: Region | None = None) -> "SideInfoSpec":
        """Parse the JSON form; ``region`` fills in entries that omit one."""
        cons = []
        for item in data.get("constraints", []):
            kind = item["type"]
            reg = item.get("region")
            reg = Region(reg["center"], reg["radius"]) if reg else region
            if kind == "equilibrium":
                cons.append(Equilibrium(item["point"]))
            elif kind == "odd_symmetry":
                cons.append(OddSymmetry())
            elif kind == "signed_derivative":
                cons.append(SignedDerivative(item["component"] - 1, item["variable"] - 1, int(item["sign"]), reg,
                                             item.get("mult_degree")))
            elif kind == "signed_component":
                act = item.get("activation")
                act_poly = Polynomial([(tuple(m), v) for m, v in act], nvars) if act else None
                cons.append(SignedComponent(item["component"] - 1, int(item["sign"]), reg, act_poly,
                                            item.get("mult_degree")))
            else:
                raise ValueError(f"unknown side-information type {kind!r}")
        return cls(cons)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# target polynomials affine in W --------------------------------------------------------

@dataclass
class AffinePolynomial:
    """``const(x) + sum_{(i, j)} W[i, j] * terms[(i, j)](x)``."""

    nvars: int
    const: Polynomial
    terms: dict

    @property
    def degree(self) -> int:
        return max([self.const.degree] + [p.degree for p in self.terms.values()])

    def monomials(self) -> set:
        out = set(self.const.terms)
        for p in self.terms.values():
            out |= set(p.terms)
        return out

    def evaluate(self, W) -> Polynomial:
        out = self.const
        for (i, j), p in self.terms.items():
            if W[i, j] != 0.0:
                out = out + p * float(W[i, j])
        return out


@lru_cache(maxsize=64)
def _basis_polys(basis: PolyBasis, region: Region | None, op: tuple) -> tuple:
    """Each basis monomial, optionally differentiated, in ball coordinates."""
    out = []
    for mono in basis.monomials:
        p = Polynomial({mono: 1.0}, basis.nvars)
        if op[0] == "diff":
            p = p.diff(op[1])
        if region is not None:
            p = region.to_unit(p)
        out.append(p)
    return tuple(out)


def _target(basis: PolyBasis, scales, support: SupportSet, component: int, sign: int,
            region: Region | None, op: tuple) -> AffinePolynomial:
    polys = _basis_polys(basis, region, op)
    terms = {}
    for i, p in enumerate(polys):
        if (i, component) in support or p.is_zero():
            continue
        terms[(i, component)] = p * (sign / scales[i])
    return AffinePolynomial(basis.nvars, Polynomial.zero(basis.nvars), terms)


def compile_equilibrium(point, basis: PolyBasis, scales, support: SupportSet | None = None) -> list:
    """One row per output: ``sum_i W[i, j] phi_i(point) / scale_i = 0``.

    Rows are ``({(i, j): coefficient}, rhs)``; fully eliminated rows are dropped.
    """
    support = support or SupportSet.empty()
    phi = basis.eval(np.asarray(point, dtype=float)) / np.asarray(scales)
    n = basis.nvars
    rows = []
    for j in range(n):
        row = {(i, j): float(phi[i]) for i in range(len(basis)) if phi[i] != 0.0 and (i, j) not in support}
        if row:
            rows.append((row, 0.0))
    return rows


def compile_odd_symmetry(basis: PolyBasis, support: SupportSet | None = None) -> list:
    """``W[i, j] = 0`` for every even-degree monomial ``i`` (constant included)."""
    support = support or SupportSet.empty()
    rows = []
    for j in range(basis.nvars):
        for i, mono in enumerate(basis.monomials):
            if sum(mono) % 2 == 0 and (i, j) not in support:
                rows.append(({(i, j): 1.0}, 0.0))
    return rows


def _half(nvars: int, deg: int) -> PolyBasis:
    return monomial_basis(nvars, deg)


def _even_multiplier_degree(target_deg: int, other_deg: int) -> int:
    """Smallest even ``d >= 0`` with ``d + other_deg >= target_deg``."""
    d = max(0, target_deg - other_deg)
    return d + (d % 2)


@dataclass
class SosBlock:
    """``target - z g - w a`` must equal the residual SOS form."""

    target: AffinePolynomial
    residual_half: PolyBasis
    g: Polynomial | None = None
    z_half: PolyBasis | None = None
    activation: Polynomial | None = None
    w_half: PolyBasis | None = None
    region: Region | None = None
    label: str = ""
    # the certificate is posed for target / scale
    scale: float = 1.0

    @property
    def gram_sizes(self) -> dict:
        out = {"residual": len(self.residual_half)}
        if self.z_half is not None:
            out["region"] = len(self.z_half)
        if self.w_half is not None:
            out["activation"] = len(self.w_half)
        return out

    def monomials(self) -> list[Monomial]:
        """Every monomial that gets a matching equation."""
        mons = set(self.target.monomials())
        for half, mult in ((self.residual_half, None), (self.z_half, self.g), (self.w_half, self.activation)):
            if half is None:
                continue
            prods = {tuple(a + b for a, b in zip(p, q)) for p in half for q in half}
            if mult is None:
                mons |= prods
            else:
                for m in prods:
                    for t in mult.terms:
                        mons.add(tuple(a + b for a, b in zip(m, t)))
        return sorted(mons, key=grlex_key)


def compile_signed_inequality(target: AffinePolynomial, region: Region | None = None,
                              activation: Polynomial | None = None, mult_degree: int | None = None,
                              activation_degree: int | None = None, max_half_degree: int | None = None,
                              unit_coordinates: bool = True, label: str = "") -> SosBlock:
    """Degree bookkeeping for one certificate.

    ``target`` and ``activation`` must already be in the coordinates the
    certificate is written in (ball coordinates when ``unit_coordinates``).
    Multiplier degrees default to the smallest even degree that reaches the
    target degree; the region multiplier also reaches the degree of the
    activation term.
    """
    n = target.nvars
    deg_t = max(target.degree, 0)
    top = deg_t
    w_half = None
    if activation is not None:
        if activation.degree < 0:
            raise ValueError("activation polynomial is zero")
        a_deg = activation.degree
        if activation_degree is None:
            activation_degree = _even_multiplier_degree(deg_t, a_deg)
        if activation_degree < 0 or activation_degree % 2:
            raise DegreeError(f"activation multiplier degree must be even, got {activation_degree}")
        w_half = _half(n, activation_degree // 2)
        top = max(top, activation_degree + a_deg)
    g = None
    z_half = None
    if region is not None:
        g = region.g_unit() if unit_coordinates else region.g()
        if mult_degree is None:
            # z g must reach the top degree, otherwise the leading Gram block is pinned to zero
            mult_degree = _even_multiplier_degree(top, 2)
        if mult_degree < 0 or mult_degree % 2:
            raise DegreeError(f"multiplier degree must be even and nonnegative, got {mult_degree}")
        z_half = _half(n, mult_degree // 2)
        top = max(top, mult_degree + 2)
    res_deg = ceil(top / 2)
    if max_half_degree is not None and res_deg > max_half_degree:
        raise DegreeError(f"certificate needs half-degree {res_deg} > {max_half_degree}")
    return SosBlock(target, _half(n, res_deg), g, z_half, activation, w_half, region, label)


@dataclass
class CompiledConstraints:
    linear_eqs: list = field(default_factory=list)
    sos_blocks: list = field(default_factory=list)

    def counts(self) -> dict:
        return {
            "linear_eqs": len(self.linear_eqs),
            "sos_blocks": len(self.sos_blocks),
            "gram_sizes": [b.gram_sizes for b in self.sos_blocks],
            "matching_eqs": [len(b.monomials()) for b in self.sos_blocks],
        }


def compile_side_info(spec: SideInfoSpec, basis: PolyBasis, scales,
                      support: SupportSet | None = None, mult_degree: int | None = None,
                      unit_coordinates: bool = True) -> CompiledConstraints:
    support = support or SupportSet.empty()
    scales = np.asarray(scales, dtype=float)
    out = CompiledConstraints()
    for k, c in enumerate(spec):
        if isinstance(c, Equilibrium):
            if len(c.point) != basis.nvars:
                raise ValueError("equilibrium dimension does not match the basis")
            out.linear_eqs += compile_equilibrium(c.point, basis, scales, support)
        elif isinstance(c, OddSymmetry):
            out.linear_eqs += compile_odd_symmetry(basis, support)
        elif isinstance(c, (SignedDerivative, SignedComponent)):
            if c.sign not in (1, -1):
                raise ValueError("sign must be +1 or -1")
            region = c.region
            if region is not None and region.nvars != basis.nvars:
                raise ValueError("region dimension does not match the basis")
            coord_region = region if unit_coordinates else None
            if isinstance(c, SignedDerivative):
                op = ("diff", c.variable)
                activation = None
                label = f"{'+' if c.sign > 0 else '-'}df{c.component + 1}/dx{c.variable + 1}"
            else:
                op = ("id",)
                activation = c.activation
                label = f"{'+' if c.sign > 0 else '-'}f{c.component + 1}"
            target = _target(basis, scales, support, c.component, c.sign, coord_region, op)
            if activation is not None:
                if coord_region is not None:
                    activation = coord_region.to_unit(activation)
                big = max(abs(v) for v in activation.terms.values())
                activation = activation * (1.0 / big)
            md = c.mult_degree if c.mult_degree is not None else mult_degree
            out.sos_blocks.append(compile_signed_inequality(
                target, region, activation, md, unit_coordinates=unit_coordinates, label=f"{k}:{label}"))
        else:
            raise TypeError(f"unsupported side information {c!r}")
    return out


# assembly ------------------------------------------------------------------------------

@dataclass
class GramVar:
    name: str
    half: PolyBasis
    index: np.ndarray
    block: int


@dataclass
class CompiledSdp:
    """An assembled SDP plus the bookkeeping needed to read solutions back."""

    problem: SdpProblem
    W_index: np.ndarray
    M_index: np.ndarray
    gamma_index: int | None
    grams: list
    constraints: CompiledConstraints
    schur_block: int
    schur_size: int
    offset: float
    xi2: float

    def W(self, values) -> np.ndarray:
        values = np.asarray(values)
        out = np.zeros(self.W_index.shape)
        active = self.W_index >= 0
        out[active] = values[self.W_index[active]]
        return out

    def M(self, values) -> np.ndarray:
        return np.asarray(values)[self.M_index]

    def gamma(self, values) -> float:
        return 0.0 if self.gamma_index is None else float(values[self.gamma_index])

    def gram_matrices(self, values) -> list[dict]:
        values = np.asarray(values)
        return [{"name": gv.name, "half": gv.half, "Q": values[gv.index]} for gv in self.grams]

    def certificate_mismatch(self, values) -> list[float]:
        """Per SOS block: max coefficient error of ``target - z g - w a - sigma``."""
        W = self.W(values)
        grams = {gv.name: values[gv.index] for gv in self.grams}
        out = []
        for k, blk in enumerate(self.constraints.sos_blocks):
            p = blk.target.evaluate(W) * (1.0 / blk.scale)
            p = p - gram_expand(grams[f"sos{k}.residual"], blk.residual_half)
            if blk.z_half is not None:
                p = p - gram_expand(grams[f"sos{k}.region"], blk.z_half) * blk.g
            if blk.w_half is not None:
                p = p - gram_expand(grams[f"sos{k}.activation"], blk.w_half) * blk.activation
            out.append(max((abs(c) for c in p.terms.values()), default=0.0))
        return out


def assemble_sdp(prob: RegressionProblem, spec: SideInfoSpec | None = None, support: SupportSet | None = None,
                 xi2: float = 0.0, mult_degree: int | None = None, compress: bool | None = None,
                 constraints: CompiledConstraints | None = None, unit_coordinates: bool = True,
                 reference_W=None) -> CompiledSdp:
    """Least-squares Schur block, side information and optional l1-type box in one SDP.

    Variables are the surviving normalized coefficients, the symmetric
    ``n x n`` bound ``M`` on the residual Gram matrix, ``gamma`` when
    ``xi2 > 0``, and one Gram matrix per SOS form. The objective is
    ``tr(M) + gamma``.

    With more data rows than basis functions the residual block is compressed
    through a QR factorization of ``Phi`` (``compress=None`` decides
    automatically); the discarded orthogonal residual enters as a constant
    objective offset, so objective values still equal the squared residual.

    ``reference_W`` (for instance a least-squares fit) sets the scale of every
    certificate: each target is divided by its largest coefficient at the
    reference, which keeps the Gram matrices comparable in size to the
    residual block. Positive scaling does not change SOS membership.
    """
    spec = spec or SideInfoSpec()
    support = support or SupportSet.empty()
    if xi2 < 0:
        raise ValueError("xi2 must be nonnegative")
    h, n = prob.h, prob.n
    if prob.basis.nvars != n:
        raise ValueError("state dimension and output dimension differ")
    if constraints is None:
        constraints = compile_side_info(spec, prob.basis, prob.scales, support, mult_degree, unit_coordinates)
    if reference_W is not None:
        for sblk in constraints.sos_blocks:
            big = max((abs(v) for v in sblk.target.evaluate(reference_W).terms.values()), default=0.0)
            sblk.scale = big if big > 0 else 1.0
    b = SdpBuilder()
    mask = support.mask(h, n)
    W_index = -np.ones((h, n), dtype=int)
    for j in range(n):
        for i in range(h):
            if not mask[i, j]:
                W_index[i, j] = b.add_vars(1, f"W[{i},{j}]")[0]
    M_index = b.add_symmetric(n, "M")
    for j in range(n):
        b.add_objective(int(M_index[j, j]), 1.0)

    # residual block [[M, R^T], [R, I]], R = Y - Phi W
    Phi, Y = prob.Phi, prob.Y
    offset = 0.0
    if compress is None:
        compress = prob.rows > h
    if compress and prob.rows > h:
        Q, Rf = np.linalg.qr(Phi, mode="reduced")
        QtY = Q.T @ Y
        offset = float(np.sum(Y ** 2) - np.sum(QtY ** 2))
        Phi, Y = Rf, QtY
    rows = Phi.shape[0]
    size = n + rows
    blk = b.new_block(size, "residual")
    for a in range(n):
        for c in range(a, n):
            b.add_coeff(blk, a, c, int(M_index[a, c]), 1.0)
    for r in range(rows):
        b.set_const(blk, n + r, n + r, 1.0)
        for j in range(n):
            if Y[r, j] != 0.0:
                b.set_const(blk, n + r, j, float(Y[r, j]))
            for i in range(h):
                if W_index[i, j] >= 0 and Phi[r, i] != 0.0:
                    b.add_coeff(blk, n + r, j, int(W_index[i, j]), -float(Phi[r, i]))
    b.offset = offset

    for row, rhs in constraints.linear_eqs:
        mapped = {int(W_index[i, j]): v for (i, j), v in row.items() if W_index[i, j] >= 0}
        if mapped:
            b.add_eq(mapped, rhs)

    grams = []
    for k, sblk in enumerate(constraints.sos_blocks):
        grams += _emit_sos(b, sblk, W_index, f"sos{k}")

    gamma_index = None
    if xi2 > 0:
        gamma_index = int(b.add_vars(1, "gamma")[0])
        b.add_objective(gamma_index, 1.0)
        b.add_ineq({gamma_index: -1.0}, 0.0)
        for i, j in zip(*np.nonzero(W_index >= 0)):
            v = int(W_index[i, j])
            b.add_ineq({v: xi2, gamma_index: -1.0}, 0.0)
            b.add_ineq({v: -xi2, gamma_index: -1.0}, 0.0)
    return CompiledSdp(b.build(), W_index, M_index, gamma_index, grams, constraints, 0, size, offset, xi2)


def certificate_problem(blocks: Sequence[SosBlock]) -> tuple[SdpProblem, list[GramVar]]:
    """Pure feasibility SDP for certificates whose targets do not involve ``W``."""
    b = SdpBuilder()
    grams = []
    for k, sblk in enumerate(blocks):
        if sblk.target.terms:
            raise ValueError("target depends on model coefficients; use assemble_sdp")
        grams += _emit_sos(b, sblk, np.zeros((0, 0), dtype=int), f"sos{k}")
    return b.build(), grams


def _gram_products(half: PolyBasis, mult: Polynomial | None):
    """Yield ``(a, b, monomial, coefficient)`` for ``z_a z_b * mult``."""
    monos = half.monomials
    for a in range(len(monos)):
        for c in range(a, len(monos)):
            base = tuple(x + y for x, y in zip(monos[a], monos[c]))
            factor = 1.0 if a == c else 2.0
            if mult is None:
                yield a, c, base, factor
            else:
                for t, v in mult.terms.items():
                    yield a, c, tuple(x + y for x, y in zip(base, t)), factor * v


def _emit_sos(b: SdpBuilder, sblk: SosBlock, W_index, name: str) -> list[GramVar]:
    rows: dict = {}
    rhs: dict = {}

    def row(mono):
        if mono not in rows:
            rows[mono] = {}
            rhs[mono] = 0.0
        return rows[mono]

    inv = 1.0 / sblk.scale
    for mono, v in sblk.target.const.terms.items():
        row(mono)
        rhs[mono] -= v * inv
    for (i, j), p in sblk.target.terms.items():
        var = int(W_index[i, j])
        if var < 0:
            continue
        for mono, v in p.terms.items():
            r = row(mono)
            r[var] = r.get(var, 0.0) + v * inv
    grams = []
    parts = [("residual", sblk.residual_half, None)]
    if sblk.z_half is not None:
        parts.append(("region", sblk.z_half, sblk.g))
    if sblk.w_half is not None:
        parts.append(("activation", sblk.w_half, sblk.activation))
    for kind, half, mult in parts:
        idx = b.add_symmetric(len(half), f"{name}.{kind}")
        blk = b.add_psd_variable(idx, f"{name}.{kind}")
        grams.append(GramVar(f"{name}.{kind}", half, idx, blk))
        for a, c, mono, coef in _gram_products(half, mult):
            r = row(mono)
            var = int(idx[a, c])
            r[var] = r.get(var, 0.0) - coef
    for mono in sorted(rows, key=grlex_key):
        if rows[mono]:
            b.add_eq(rows[mono], rhs[mono])
        elif abs(rhs[mono]) > 0:
            b.add_eq({}, rhs[mono])
    return grams


# sampled checks ------------------------------------------------------------------------

def sample_ball(region: Region, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from the ball."""
    n = region.nvars
    d = rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rad = region.radius * rng.uniform(size=(count, 1)) ** (1.0 / n)
    return np.asarray(region.center) + rad * d


def check_side_info(polys: Sequence[Polynomial], spec: SideInfoSpec, samples: int = 1000,
                    rng: np.random.Generator | None = None) -> list[dict]:
    """Evaluate every side-information item on a fitted model.

    Equalities report ``|f(point)|`` (or the symmetry defect); inequalities
    report the smallest signed value over uniform samples of the region,
    restricted to the activation halfspace.
    """
    rng = rng or np.random.default_rng(0)
    out = []
    n = len(polys)
    for c in spec:
        if isinstance(c, Equilibrium):
            val = float(np.linalg.norm([p(np.asarray(c.point)) for p in polys]))
            out.append({"constraint": "equilibrium", "norm": val})
        elif isinstance(c, OddSymmetry):
            pts = rng.normal(size=(samples, n))
            val = max(float(np.max(np.abs(p(pts) + p(-pts)))) for p in polys)
            out.append({"constraint": "odd_symmetry", "max_defect": val})
        else:
            region = c.region or Region((0.0,) * n, 1.0)
            pts = sample_ball(region, samples, rng)
            if isinstance(c, SignedDerivative):
                vals = c.sign * polys[c.component].diff(c.variable)(pts)
                name = f"signed_derivative f{c.component + 1}/x{c.variable + 1}"
            else:
                vals = c.sign * polys[c.component](pts)
                if c.activation is not None:
                    vals = vals[c.activation(pts) >= 0]
                name = f"signed_component f{c.component + 1}"
            out.append({"constraint": name, "min_value": float(np.min(vals)) if vals.size else np.inf,
                        "samples": int(vals.size)})
    return out
