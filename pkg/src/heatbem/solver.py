"""Block-Toeplitz operator application and linear solves.

Space-time coefficient vectors are numpy arrays of shape (E_t, n_dof),
time-major; all routines accept and return that shape.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import BlockToeplitzMatrix


class LinearOperator:
    """Thin callable wrapper so operator sums/compositions stay lazy."""

    def __init__(self, apply_fn, shape=None):
        self._apply = apply_fn
        self.shape = shape

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self._apply(x)


def toeplitz_operator(matrix: BlockToeplitzMatrix,
                      transpose_blocks: bool = False) -> LinearOperator:
    return LinearOperator(lambda x: apply_toeplitz(matrix, x, transpose_blocks))


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    wall_time: float


def _effective_blocks(matrix: BlockToeplitzMatrix, transpose_blocks: bool):
    if transpose_blocks != matrix.transpose_blocks_on_apply:
        return matrix.blocks.transpose(0, 2, 1), True
    return matrix.blocks, False


def apply_toeplitz(matrix: BlockToeplitzMatrix, x: np.ndarray,
                   transpose_blocks: bool = False) -> np.ndarray:
    """y^k = sum_{i <= k} A^{k-i} x^i (A^d transposed when requested)."""
    blocks, _ = _effective_blocks(matrix, transpose_blocks)
    n_in = blocks.shape[2]
    x = np.asarray(x)
    if x.ndim == 1:
        x = x.reshape(-1, n_in)
    if x.shape[1] != n_in:
        raise ValueError(
            f"dimension mismatch: operator expects {n_in} spatial dofs, got {x.shape[1]}"
        )
    E_t = x.shape[0]
    y = np.empty((E_t, blocks.shape[1]))
    if matrix.diagonal_only:
        A0 = blocks[0]
        for k in range(E_t):
            y[k] = A0 @ x[k]
        return y
    if E_t > matrix.n_blocks:
        raise ValueError("more time steps than stored blocks")
    for k in range(E_t):
        acc = blocks[0] @ x[k]
        for d in range(1, k + 1):
            acc += blocks[d] @ x[k - d]
        y[k] = acc
    return y


def fgmres(
    op,
    rhs: np.ndarray,
    rel_tol: float = 1e-8,
    max_iter: int = 500,
    restart: int = 50,
    right_precond=None,
) -> tuple[np.ndarray, SolveReport]:
    """Flexible GMRES with Givens rotations and right preconditioning.

    The preconditioner may change between iterations (the preconditioned
    directions are stored explicitly), and the reported residual is the
    true relative residual of the returned iterate.
    """
    t0 = time.perf_counter()
    shape = np.shape(rhs)
    b = np.asarray(rhs, dtype=np.float64).ravel()

    def A(v):
        # force a copy: an operator may return (a view of) its input, and
        # the Arnoldi loop updates the result in place
        return np.array(op(v.reshape(shape)), dtype=np.float64).ravel()

    def M(v):
        if right_precond is None:
            return v
        return np.asarray(right_precond(v.reshape(shape))).ravel()

    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros(shape), SolveReport(0, 0.0, True, time.perf_counter() - t0)

    x = np.zeros_like(b)
    iterations = 0
    converged = False
    res = np.inf
    while iterations < max_iter and not converged:
        r = b - A(x)
        beta = np.linalg.norm(r)
        if beta <= rel_tol * norm_b:
            converged = True
            res = beta / norm_b
            break
        m = min(restart, max_iter - iterations)
        V = np.zeros((m + 1, b.size))
        Z = np.zeros((m, b.size))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        j_used = 0
        for j in range(m):
            Z[j] = M(V[j])
            w = A(Z[j])
            for i in range(j + 1):
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            if H[j + 1, j] > 0:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j] = H[j, j] / denom if denom > 0 else 1.0
            sn[j] = H[j + 1, j] / denom if denom > 0 else 0.0
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            iterations += 1
            j_used = j + 1
            if abs(g[j + 1]) <= rel_tol * norm_b or H[j, j] == 0.0:
                break
        y = scipy.linalg.solve_triangular(
            H[:j_used, :j_used], g[:j_used], lower=False
        )
        x = x + Z[:j_used].T @ y
        res = np.linalg.norm(b - A(x)) / norm_b
        if res <= rel_tol:
            converged = True
    return x.reshape(shape), SolveReport(
        iterations, float(res), converged, time.perf_counter() - t0
    )


def forward_block_solve(matrix: BlockToeplitzMatrix, rhs: np.ndarray,
                        transpose_blocks: bool = False) -> np.ndarray:
    """Causal time-marching solve of the block lower-triangular system:
    A^0 x^k = rhs^k - sum_{d >= 1} A^d x^{k-d}, with A^0 factorised once."""
    blocks, needs_T = _effective_blocks(matrix, transpose_blocks)
    rhs = np.asarray(rhs, dtype=np.float64)
    squeeze = rhs.ndim == 1
    if squeeze:
        rhs = rhs.reshape(-1, blocks.shape[1])
    E_t = rhs.shape[0]
    A0 = blocks[0]
    lu = scipy.linalg.lu_factor(np.ascontiguousarray(A0))
    x = np.empty((E_t, blocks.shape[2]))
    for k in range(E_t):
        acc = rhs[k].copy()
        if not matrix.diagonal_only:
            for d in range(1, k + 1):
                acc -= blocks[d] @ x[k - d]
        x[k] = scipy.linalg.lu_solve(lu, acc)
    return x.ravel() if squeeze else x


def build_hypersingular_preconditioner(V11: BlockToeplitzMatrix) -> LinearOperator:
    """Approximate inverse of the p1 x p1 single-layer operator, applied
    by causal forward substitution; used as a flexible right
    preconditioner for the hypersingular system."""
    return LinearOperator(lambda x: forward_block_solve(V11, x))
