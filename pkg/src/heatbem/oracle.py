"""Independent brute-force verification oracles.

These routines recompute the temporal weights and full Galerkin entries by
numerical time integration of the heat kernel itself, never touching the
closed-form antiderivatives they are meant to check.

The exact double time integral over [d h, (d+1) h] x [0, h] of a kernel
k(t - tau) collapses, by the substitution s = t - tau, to a single weighted
integral with the triangular hat weight (h - |s - d h|); the oracle
integrates that form with panel-adaptive Gauss quadrature, geometrically
graded toward s = 0 where the kernel has an essential (but integrable)
boundary layer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelParams, TemporalWeightKind
from .quadrature import gauss01, triangle_rule


class OracleToleranceError(RuntimeError):
    """Requested tolerance not reached within the subdivision budget."""


@dataclass(frozen=True)
class OracleConfig:
    tolerance: float = 1e-12
    max_depth: int = 40
    gauss_order: int = 12

    def __post_init__(self):
        if self.tolerance < 1e-13:
            raise ValueError("tolerance must be >= 1e-13")


def adaptive_gauss(f, breakpoints, config: OracleConfig = OracleConfig()):
    """Panel-adaptive Gauss quadrature of a vectorized integrand.

    Integrates f over the union of the intervals between consecutive
    breakpoints, bisecting panels until the local two-half refinement
    changes the panel value by less than its share of the tolerance.
    Returns (value, error_estimate).
    """
    pts = np.asarray(breakpoints, dtype=np.float64)
    if len(pts) < 2:
        raise ValueError("need at least two breakpoints")
    xs, ws = gauss01(config.gauss_order)

    def panel(lo, hi):
        h = hi - lo
        return h * float(np.dot(ws, f(lo + h * xs)))

    seeds = [
        (pts[i], pts[i + 1], panel(pts[i], pts[i + 1]), 0)
        for i in range(len(pts) - 1)
        if pts[i + 1] > pts[i]
    ]
    span = pts[-1] - pts[0]
    rough = sum(abs(s[2]) for s in seeds)
    scale = max(rough, 1e-13)

    total = 0.0
    err = 0.0
    budget_hit = False
    stack = list(seeds)
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = panel(lo, mid)
        right = panel(mid, hi)
        e = abs(left + right - est)
        tol_local = config.tolerance * scale * max((hi - lo) / span, 1e-6)
        if e <= tol_local or depth >= config.max_depth:
            if e > tol_local:
                budget_hit = True
            total += left + right
            err += e
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    if budget_hit and err > 10.0 * config.tolerance * scale:
        raise OracleToleranceError(
            f"adaptive quadrature stalled: error estimate {err:.3e}"
        )
    return total, err


def _graded_breakpoints(lo: float, hi: float, n_levels: int = 40):
    """Geometric panel grading toward lo = 0 (heat-kernel boundary layer)."""
    if lo > 0:
        return [lo, hi]
    return [0.0] + [hi * 2.0 ** (-k) for k in range(n_levels, -1, -1)]


def _heat_kernel_1d(rho: float, alpha: float):
    rho2 = rho * rho

    def g(s):
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros_like(s)
        pos = s > 0
        sp = s[pos]
        out[pos] = (4.0 * np.pi * alpha * sp) ** -1.5 * np.exp(-rho2 / (4.0 * alpha * sp))
        return out

    return g


def _heat_kernel_normal_1d(r, n_y, alpha: float):
    r = np.asarray(r, dtype=np.float64)
    rho2 = float(np.dot(r, r))
    rn = float(np.dot(r, n_y))

    def g(s):
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros_like(s)
        pos = s > 0
        sp = s[pos]
        out[pos] = (
            rn
            / (16.0 * (np.pi * alpha) ** 1.5 * sp ** 2.5)
            * np.exp(-rho2 / (4.0 * alpha * sp))
        )
        return out

    return g


def oracle_temporal_weight(
    kind: TemporalWeightKind,
    r,
    d: int,
    params: KernelParams,
    n_y=None,
    config: OracleConfig = OracleConfig(),
) -> float:
    """Temporal weight by direct numerical time integration of the kernel.

    Evaluates the double integral over the time cells of the heat kernel
    (or its scaled normal derivative), reduced to the hat-weighted single
    integral described in the module docstring; the hypersingular weight
    uses its kernel-difference form alpha * (int over cell d - int over
    cell d-1), which likewise never touches the closed forms.
    """
    if d < 0:
        raise ValueError("block index d must be non-negative")
    r = np.asarray(r, dtype=np.float64)
    rho = float(np.linalg.norm(r))
    if rho <= 0.0:
        raise ValueError("oracle requires a nonzero displacement")
    h = params.h_t
    a = params.alpha

    if kind is TemporalWeightKind.DoubleLayer:
        if n_y is None:
            raise ValueError("DoubleLayer weight requires the trial normal n_y")
        base = _heat_kernel_normal_1d(r, n_y, a)
    else:
        base = _heat_kernel_1d(rho, a)

    if kind is TemporalWeightKind.HypersingularD2:
        if d == 0:
            val, _ = adaptive_gauss(base, _graded_breakpoints(0.0, h), config)
            return a * val
        upper, _ = adaptive_gauss(base, [d * h, (d + 1) * h], config)
        lower, _ = adaptive_gauss(
            base, _graded_breakpoints((d - 1) * h, d * h), config
        )
        return a * (upper - lower)

    if d == 0:
        def f(s):
            return (h - s) * base(s)
        val, _ = adaptive_gauss(f, _graded_breakpoints(0.0, h), config)
        return val

    def f(s):
        return (h - np.abs(s - d * h)) * base(s)

    lo = (d - 1) * h
    left, _ = adaptive_gauss(f, _graded_breakpoints(lo, d * h), config)
    right, _ = adaptive_gauss(f, [d * h, (d + 1) * h], config)
    return left + right


_HATS = (
    lambda uv: 1.0 - uv[:, 0] - uv[:, 1],
    lambda uv: uv[:, 0],
    lambda uv: uv[:, 1],
)


def oracle_galerkin_entry(
    kind: TemporalWeightKind,
    mesh,
    i_test: int,
    i_trial: int,
    d: int,
    params: KernelParams,
    dense_order: int = 8,
    test_hat: int | None = None,
    trial_hat: int | None = None,
    config: OracleConfig = OracleConfig(),
) -> float:
    """Single Galerkin pair entry by brute force: a high-order spatial
    product rule with the temporal weight integrated numerically at every
    point pair.  Only meaningful for separated pairs (the temporal oracle
    needs rho > 0 at all nodes).  Optional local hat indices (0-2) insert
    piecewise-linear basis factors; None means the piecewise-constant 1.
    """
    rule = triangle_rule(dense_order)
    vt = mesh.vertices[mesh.triangles[i_test]]
    vs = mesh.vertices[mesh.triangles[i_trial]]
    xs = vt[0] + np.outer(rule.nodes[:, 0], vt[1] - vt[0]) + np.outer(rule.nodes[:, 1], vt[2] - vt[0])
    ys = vs[0] + np.outer(rule.nodes[:, 0], vs[1] - vs[0]) + np.outer(rule.nodes[:, 1], vs[2] - vs[0])
    wt = rule.weights.copy()
    wq = rule.weights.copy()
    if test_hat is not None:
        wt = wt * _HATS[test_hat](rule.nodes)
    if trial_hat is not None:
        wq = wq * _HATS[trial_hat](rule.nodes)
    n_x = mesh.normals[i_test]
    n_y = mesh.normals[i_trial]
    pair_factor = float(np.dot(n_x, n_y)) if kind is TemporalWeightKind.HypersingularD2 else 1.0

    acc = 0.0
    for p in range(len(wt)):
        for q in range(len(wq)):
            w = oracle_temporal_weight(kind, xs[p] - ys[q], d, params, n_y=n_y, config=config)
            acc += wt[p] * wq[q] * w
    return 4.0 * mesh.areas[i_test] * mesh.areas[i_trial] * pair_factor * acc
