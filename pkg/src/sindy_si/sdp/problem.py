"""Block-diagonal SDP container and its sparse text format.

A problem is::

    minimize    c . y + offset
    subject to  C_b + sum_i y_i A_{b,i}  is PSD    for every block b
                A_eq y  = b_eq
                A_in y <= b_in

with ``y`` a vector of free scalar variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

__all__ = ["LmiBlock", "SdpProblem", "SdpBuilder", "write_sdp", "read_sdp", "FORMAT_HEADER"]

FORMAT_HEADER = "# sparse-sdp v1"


@dataclass
class LmiBlock:
    """Affine symmetric matrix ``const + sum_i y_i A_i`` required to be PSD.

    ``coeffs`` is a ``(size*size, nvars)`` sparse matrix whose column ``i`` is
    ``vec(A_i)`` (row-major, both triangles stored).
    """

    size: int
    const: np.ndarray
    coeffs: sp.csr_matrix
    name: str = ""

    def value(self, y) -> np.ndarray:
        k = self.size
        return self.const + (self.coeffs @ np.asarray(y, dtype=float)).reshape(k, k)


@dataclass
class SdpProblem:
    nvars: int
    objective: np.ndarray
    blocks: list[LmiBlock]
    eq_rows: sp.csr_matrix
    eq_rhs: np.ndarray
    ineq_rows: sp.csr_matrix
    ineq_rhs: np.ndarray
    offset: float = 0.0
    var_names: list[str] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.eq_rows = sp.csr_matrix(self.eq_rows, shape=(len(self.eq_rhs), self.nvars))
        self.ineq_rows = sp.csr_matrix(self.ineq_rows, shape=(len(self.ineq_rhs), self.nvars))
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float)
        self.ineq_rhs = np.asarray(self.ineq_rhs, dtype=float)
        if self.objective.shape != (self.nvars,):
            raise ValueError("objective length must equal nvars")
        for blk in self.blocks:
            k = blk.size
            if blk.const.shape != (k, k) or blk.coeffs.shape != (k * k, self.nvars):
                raise ValueError(f"block {blk.name!r} has inconsistent dimensions")
            if not np.allclose(blk.const, blk.const.T):
                raise ValueError(f"block {blk.name!r} constant is not symmetric")
            perm = np.arange(k * k).reshape(k, k).T.ravel()
            if abs(blk.coeffs - blk.coeffs[perm]).max() > 1e-12 * (1 + abs(blk.coeffs).max()):
                raise ValueError(f"block {blk.name!r} coefficients are not symmetric")

    @property
    def block_sizes(self) -> list[int]:
        return [b.size for b in self.blocks]

    def objective_value(self, y) -> float:
        return float(self.objective @ y + self.offset)

    def permuted(self, perm) -> "SdpProblem":
        """Same problem with variables reordered: new variable ``k`` is old ``perm[k]``."""
        perm = np.asarray(perm)
        names = [self.var_names[p] for p in perm] if self.var_names else None
        return SdpProblem(
            self.nvars, self.objective[perm],
            [LmiBlock(b.size, b.const, b.coeffs[:, perm].tocsr(), b.name) for b in self.blocks],
            self.eq_rows[:, perm], self.eq_rhs, self.ineq_rows[:, perm], self.ineq_rhs,
            self.offset, names)


class SdpBuilder:
    """Incremental construction of an :class:`SdpProblem`.

    Variables are allocated in named groups; block entries and linear rows are
    collected as triplets and assembled once in :meth:`build`.
    """

    def __init__(self):
        self.nvars = 0
        self.names: list[str] = []
        self.c: dict[int, float] = {}
        self.offset = 0.0
        self._blocks: list[dict] = []
        self._eq: list[tuple[dict, float]] = []
        self._in: list[tuple[dict, float]] = []

    def add_vars(self, count: int, prefix: str) -> np.ndarray:
        idx = np.arange(self.nvars, self.nvars + count)
        self.names.extend(f"{prefix}[{k}]" for k in range(count))
        self.nvars += count
        return idx

    def add_symmetric(self, k: int, prefix: str) -> np.ndarray:
        """Allocate a symmetric ``k x k`` matrix variable; returns the index matrix."""
        idx = np.empty((k, k), dtype=int)
        for a in range(k):
            for b in range(a, k):
                v = self.add_vars(1, f"{prefix}[{a},{b}]")[0]
                self.names[-1] = f"{prefix}[{a},{b}]"
                idx[a, b] = idx[b, a] = v
        return idx

    def add_objective(self, var: int, coef: float):
        self.c[var] = self.c.get(var, 0.0) + coef

    def new_block(self, size: int, name: str = "") -> int:
        self._blocks.append({"size": size, "const": np.zeros((size, size)), "rows": [], "cols": [],
                             "vals": [], "name": name})
        return len(self._blocks) - 1

    def set_const(self, block: int, i: int, j: int, value: float):
        blk = self._blocks[block]
        blk["const"][i, j] = value
        blk["const"][j, i] = value

    def add_coeff(self, block: int, i: int, j: int, var: int, value: float):
        """Add ``value * y_var`` to entries ``(i, j)`` and ``(j, i)``."""
        blk = self._blocks[block]
        k = blk["size"]
        blk["rows"].append(i * k + j)
        blk["cols"].append(var)
        blk["vals"].append(value)
        if i != j:
            blk["rows"].append(j * k + i)
            blk["cols"].append(var)
            blk["vals"].append(value)

    def add_psd_variable(self, idx: np.ndarray, name: str = "") -> int:
        """Constrain a symmetric matrix variable (index matrix) to be PSD."""
        k = idx.shape[0]
        b = self.new_block(k, name)
        for a in range(k):
            for c in range(a, k):
                self.add_coeff(b, a, c, int(idx[a, c]), 1.0)
        return b

    def add_eq(self, row: dict[int, float], rhs: float):
        self._eq.append((row, rhs))

    def add_ineq(self, row: dict[int, float], rhs: float):
        self._in.append((row, rhs))

    @staticmethod
    def _rows(rows, nvars):
        r, c, v = [], [], []
        for k, (row, _rhs) in enumerate(rows):
            for var, val in row.items():
                r.append(k)
                c.append(var)
                v.append(val)
        mat = sp.csr_matrix((v, (r, c)), shape=(len(rows), nvars))
        return mat, np.array([rhs for _row, rhs in rows], dtype=float)

    def build(self) -> SdpProblem:
        c = np.zeros(self.nvars)
        for var, val in self.c.items():
            c[var] = val
        blocks = []
        for blk in self._blocks:
            k = blk["size"]
            coeffs = sp.csr_matrix((blk["vals"], (blk["rows"], blk["cols"])), shape=(k * k, self.nvars))
            blocks.append(LmiBlock(k, blk["const"], coeffs, blk["name"]))
        A_eq, b_eq = self._rows(self._eq, self.nvars)
        A_in, b_in = self._rows(self._in, self.nvars)
        return SdpProblem(self.nvars, c, blocks, A_eq, b_eq, A_in, b_in, self.offset, list(self.names))


def _fmt(v: float) -> str:
    return repr(float(v))


def write_sdp(prob: SdpProblem, path) -> Path:
    """Write the sparse text format (see ``docs/sdp_format.md``). Indices are 1-based."""
    lines = [FORMAT_HEADER, f"nvars {prob.nvars}", f"blocks {len(prob.blocks)}",
             "sizes " + " ".join(str(b.size) for b in prob.blocks)]
    obj = [(i, v) for i, v in enumerate(prob.objective) if v != 0.0]
    lines.append(f"objective {len(obj)}")
    lines += [f"{i + 1} {_fmt(v)}" for i, v in obj]
    lines.append(f"offset {_fmt(prob.offset)}")
    const = []
    coef = []
    for b, blk in enumerate(prob.blocks):
        k = blk.size
        for i in range(k):
            for j in range(i, k):
                if blk.const[i, j] != 0.0:
                    const.append(f"{b + 1} {i + 1} {j + 1} {_fmt(blk.const[i, j])}")
        cc = blk.coeffs.tocoo()
        for var, row, val in sorted(zip(cc.col.tolist(), cc.row.tolist(), cc.data.tolist())):
            i, j = divmod(row, k)
            if i <= j and val != 0.0:
                coef.append(f"{var + 1} {b + 1} {i + 1} {j + 1} {_fmt(val)}")
    lines.append(f"constant {len(const)}")
    lines += const
    lines.append(f"coefficients {len(coef)}")
    lines += coef
    for tag, A, rhs in (("eq", prob.eq_rows, prob.eq_rhs), ("ineq", prob.ineq_rows, prob.ineq_rhs)):
        A = A.tocoo()
        lines.append(f"{tag} {A.shape[0]} {A.nnz}")
        for r, c, v in sorted(zip(A.row, A.col, A.data)):
            lines.append(f"{r + 1} {c + 1} {_fmt(v)}")
        lines += [_fmt(v) for v in rhs]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_sdp(path) -> SdpProblem:
    raw = [ln.strip() for ln in Path(path).read_text().splitlines()]
    toks = [ln for ln in raw if ln and not ln.startswith("#")]
    pos = 0

    def take(tag):
        nonlocal pos
        parts = toks[pos].split()
        if parts[0] != tag:
            raise ValueError(f"expected '{tag}' at line {pos + 1}, got {toks[pos]!r}")
        pos += 1
        return parts[1:]

    def body(count):
        nonlocal pos
        rows = [toks[pos + k].split() for k in range(count)]
        pos += count
        return rows

    nvars = int(take("nvars")[0])
    nblocks = int(take("blocks")[0])
    sizes = [int(s) for s in take("sizes")]
    if len(sizes) != nblocks:
        raise ValueError("block count does not match size list")
    c = np.zeros(nvars)
    for i, v in body(int(take("objective")[0])):
        c[int(i) - 1] = float(v)
    offset = float(take("offset")[0])
    consts = [np.zeros((k, k)) for k in sizes]
    for b, i, j, v in body(int(take("constant")[0])):
        b, i, j = int(b) - 1, int(i) - 1, int(j) - 1
        consts[b][i, j] = consts[b][j, i] = float(v)
    trip = [([], [], []) for _ in sizes]
    for var, b, i, j, v in body(int(take("coefficients")[0])):
        var, b, i, j = int(var) - 1, int(b) - 1, int(i) - 1, int(j) - 1
        k = sizes[b]
        rows, cols, vals = trip[b]
        rows.append(i * k + j)
        cols.append(var)
        vals.append(float(v))
        if i != j:
            rows.append(j * k + i)
            cols.append(var)
            vals.append(float(v))
    blocks = [LmiBlock(k, consts[b], sp.csr_matrix((trip[b][2], (trip[b][0], trip[b][1])), shape=(k * k, nvars)))
              for b, k in enumerate(sizes)]
    mats = []
    for tag in ("eq", "ineq"):
        nrows, nnz = (int(t) for t in take(tag))
        ent = body(nnz)
        A = sp.csr_matrix(([float(e[2]) for e in ent], ([int(e[0]) - 1 for e in ent], [int(e[1]) - 1 for e in ent])),
                          shape=(nrows, nvars))
        rhs = np.array([float(r[0]) for r in body(nrows)])
        mats.append((A, rhs))
    return SdpProblem(nvars, c, blocks, mats[0][0], mats[0][1], mats[1][0], mats[1][1], offset)
