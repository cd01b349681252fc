"""Small SDPs with closed-form optima, shared by the solver tests and the acceptance suite."""

import numpy as np

from sindy_si.sdp import SdpBuilder


def eigen_bound():
    """min t s.t. [[t, 1], [1, t]] PSD; optimum t = 1."""
    b = SdpBuilder()
    t = b.add_vars(1, "t")[0]
    b.add_objective(t, 1.0)
    k = b.new_block(2, "T")
    b.add_coeff(k, 0, 0, t, 1.0)
    b.add_coeff(k, 1, 1, t, 1.0)
    b.set_const(k, 0, 1, 1.0)
    return b.build()


def schur_trace(B):
    """min tr(M) s.t. [[M, B^T], [B, I]] PSD; optimum ||B||_F^2 at M = B^T B."""
    rows, n = B.shape
    b = SdpBuilder()
    M = b.add_symmetric(n, "M")
    for i in range(n):
        b.add_objective(int(M[i, i]), 1.0)
    k = b.new_block(n + rows, "schur")
    for i in range(n):
        for j in range(i, n):
            b.add_coeff(k, i, j, int(M[i, j]), 1.0)
    for a in range(rows):
        for i in range(n):
            b.set_const(k, i, n + a, B[a, i])
        b.set_const(k, n + a, n + a, 1.0)
    return b.build(), M


def scalar_lp():
    """max x s.t. x <= 0, written as min -x with the 1x1 block [-x] PSD."""
    b = SdpBuilder()
    x = b.add_vars(1, "x")[0]
    b.add_objective(x, -1.0)
    k = b.new_block(1, "neg")
    b.add_coeff(k, 0, 0, x, -1.0)
    return b.build()


def pencil(c, A, B):
    """min c x s.t. x A + B PSD."""
    b = SdpBuilder()
    x = b.add_vars(1, "x")[0]
    b.add_objective(x, c)
    k = b.new_block(A.shape[0], "pencil")
    for i in range(A.shape[0]):
        for j in range(i, A.shape[0]):
            b.add_coeff(k, i, j, x, A[i, j])
            b.set_const(k, i, j, B[i, j])
    return b.build()


def pencil_oracle(c, A, B, iters=200):
    """Bisection on the smallest eigenvalue; assumes B is PD and the feasible interval is bounded."""
    def feasible(x):
        return np.linalg.eigvalsh(x * A + B)[0] >= 0

    direction = -np.sign(c)
    lo, hi = 0.0, 1.0
    while feasible(direction * hi):
        hi *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if feasible(direction * mid) else (lo, mid)
    return direction * lo
