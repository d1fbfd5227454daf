"""Boundary data projection, interior potential evaluation, manufactured
solutions, and error metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _field_numba as _fnb
from .kernels import KernelParams, fundamental, grad_fundamental_normal
from .quadrature import QuadratureConfig, gauss01, triangle_rule

#: quadrature orders used for projections and L2(Sigma) norms
_NORM_TRI_ORDER = 6
_NORM_TIME_POINTS = 4


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution u(x, t) = G_alpha(x - source_point, t) with the
    source placed outside the closure of the domain."""

    source_point: np.ndarray
    alpha: float

    def __post_init__(self):
        object.__setattr__(
            self, "source_point", np.asarray(self.source_point, dtype=np.float64)
        )

    def value(self, points, t, normals=None):
        return fundamental(np.asarray(points) - self.source_point, t, self.alpha)

    def dirichlet_trace(self, points, t, normals=None):
        return self.value(points, t)

    def neumann_trace(self, points, t, normals):
        return grad_fundamental_normal(
            np.asarray(points) - self.source_point, normals, t, self.alpha
        )


@dataclass(frozen=True)
class EvalPoint:
    """Interior evaluation point with time split t = k * h_t + eps."""

    x: np.ndarray
    t: float

    def decompose(self, h_t: float):
        ratio = self.t / h_t
        k = int(np.floor(ratio + 1e-12))
        eps = self.t - k * h_t
        if eps < 0.0 or abs(ratio - k) <= 1e-12 * max(1.0, abs(ratio)):
            eps = 0.0
        return k, eps


def _tri_quad(mesh, order: int):
    rule = triangle_rule(order)
    uv = rule.nodes
    hats = np.column_stack([1.0 - uv[:, 0] - uv[:, 1], uv[:, 0], uv[:, 1]])
    v = mesh.triangle_vertices()
    pts = (
        v[:, None, 0, :]
        + uv[None, :, 0, None] * (v[:, None, 1, :] - v[:, None, 0, :])
        + uv[None, :, 1, None] * (v[:, None, 2, :] - v[:, None, 0, :])
    )
    return np.ascontiguousarray(pts), hats, rule.weights


def _p1_mass(mesh) -> sp.csr_matrix:
    """Spatial p1 mass matrix: element blocks (area/12) * (I + ones)."""
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    E_x = mesh.n_triangles
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    vals = (mesh.areas[:, None, None] * local).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(mesh.n_vertices,) * 2)


def project_to_space(fn, mesh, timegrid, space: str) -> np.ndarray:
    """L2(Sigma_h) projection of fn(points, t, normals) onto X00
    (piecewise constant) or X10 (continuous piecewise linear in space,
    piecewise constant in time).  Returns coefficients (E_t, n_dof)."""
    if space not in ("X00", "X10"):
        raise ValueError("space must be 'X00' or 'X10'")
    qpts, hats, qw = _tri_quad(mesh, _NORM_TRI_ORDER)
    tq, tw = gauss01(_NORM_TIME_POINTS)
    h = timegrid.step
    E_t = timegrid.n_steps
    E_x = mesh.n_triangles
    normals = np.repeat(mesh.normals[:, None, :], qpts.shape[1], axis=1)

    if space == "X00":
        out = np.empty((E_t, E_x))
        for i in range(E_t):
            acc = np.zeros(E_x)
            for q, w in zip(tq, tw):
                vals = fn(qpts.reshape(-1, 3), timegrid.node(i) + q * h, normals.reshape(-1, 3))
                acc += w * (vals.reshape(E_x, -1) @ qw)
            # time average of the spatial element means (2A w sums / A = 2 w sums)
            out[i] = 2.0 * acc
        return out

    M = _p1_mass(mesh).toarray()
    cho = scipy.linalg.cho_factor(M)
    out = np.empty((E_t, mesh.n_vertices))
    wh = qw[:, None] * hats  # (nq, 3)
    for i in range(E_t):
        b = np.zeros(mesh.n_vertices)
        for q, w in zip(tq, tw):
            vals = fn(qpts.reshape(-1, 3), timegrid.node(i) + q * h, normals.reshape(-1, 3))
            loads = 2.0 * mesh.areas[:, None] * (vals.reshape(E_x, -1) @ wh)
            np.add.at(b, mesh.triangles.ravel(), (w * loads).ravel())
        out[i] = scipy.linalg.cho_solve(cho, b)
    return out


def _interp_density(coeffs: np.ndarray, mesh, hats: np.ndarray) -> np.ndarray:
    """Density values at spatial quadrature nodes, (E_t, E_x, nq)."""
    E_t = coeffs.shape[0]
    if coeffs.shape[1] == mesh.n_triangles:
        return np.repeat(coeffs[:, :, None], hats.shape[0], axis=2)
    nodal = coeffs[:, mesh.triangles]  # (E_t, E_x, 3)
    return nodal @ hats.T


def _decompose_points(points, timegrid):
    h = timegrid.step
    E_t = timegrid.n_steps
    k_arr = np.empty(len(points), dtype=np.int64)
    eps_arr = np.empty(len(points))
    cur_arr = np.empty(len(points), dtype=np.bool_)
    xs = np.empty((len(points), 3))
    for p, ep in enumerate(points):
        k, eps = ep.decompose(h)
        k_arr[p] = k
        eps_arr[p] = eps
        cur_arr[p] = eps > 0.0 and k < E_t
        xs[p] = ep.x
    return xs, k_arr, eps_arr, cur_arr


def _eval_potential(kind: int, coeffs, points, mesh, timegrid,
                    params: KernelParams,
                    config: QuadratureConfig = QuadratureConfig()):
    qpts, hats, qw = _tri_quad(mesh, config.regular_order + 2)
    dens = np.ascontiguousarray(_interp_density(np.asarray(coeffs), mesh, hats))
    xs, k_arr, eps_arr, cur_arr = _decompose_points(points, timegrid)
    # warn about points hugging the boundary (integrands become singular)
    warn = np.zeros(len(points), dtype=bool)
    threshold = 1e-8 * mesh.diameter
    for p in range(len(points)):
        d = np.min(np.linalg.norm(mesh.centroids - xs[p], axis=1))
        if d < threshold:
            warn[p] = True
    out = np.empty(len(points))
    _fnb._eval_potential(
        kind, xs, k_arr, eps_arr, cur_arr, dens, qpts, qw,
        mesh.areas, mesh.normals,
        timegrid.step, params.alpha, params.delta_eps, params.rho_eps,
        out,
    )
    return out, warn


def eval_single_layer_potential(w, points, mesh, timegrid, params,
                                config: QuadratureConfig = QuadratureConfig()):
    """Interior values of the single-layer potential of the piecewise
    constant density w, via the telescoped kernel-antiderivative sums."""
    return _eval_potential(0, w, points, mesh, timegrid, params, config)


def eval_double_layer_potential(u, points, mesh, timegrid, params,
                                config: QuadratureConfig = QuadratureConfig()):
    """Interior values of the double-layer potential of the piecewise
    linear density u."""
    return _eval_potential(1, u, points, mesh, timegrid, params, config)


def represent(w, u, points, mesh, timegrid, params,
              config: QuadratureConfig = QuadratureConfig()):
    """Representation formula: interior solution = (single layer of the
    Neumann density w) - (double layer of the Dirichlet density u)."""
    sv, warn1 = eval_single_layer_potential(w, points, mesh, timegrid, params, config)
    dv, warn2 = eval_double_layer_potential(u, points, mesh, timegrid, params, config)
    return sv - dv, warn1 | warn2


def relative_error_sigma(coeffs, fn, mesh, timegrid) -> float:
    """Relative L2(Sigma_h) error of the coefficient function against fn,
    with tensor quadrature (triangle order 6, 4 Gauss points per step)."""
    qpts, hats, qw = _tri_quad(mesh, _NORM_TRI_ORDER)
    tq, tw = gauss01(_NORM_TIME_POINTS)
    coeffs = np.asarray(coeffs)
    dens = _interp_density(coeffs, mesh, hats)  # (E_t, E_x, nq)
    normals = np.repeat(mesh.normals[:, None, :], qpts.shape[1], axis=1).reshape(-1, 3)
    h = timegrid.step
    num = 0.0
    den = 0.0
    area_w = 2.0 * mesh.areas[:, None] * qw[None, :]
    for i in range(timegrid.n_steps):
        for q, w in zip(tq, tw):
            vals = fn(qpts.reshape(-1, 3), timegrid.node(i) + q * h, normals)
            vals = vals.reshape(mesh.n_triangles, -1)
            num += w * h * np.sum(area_w * (vals - dens[i]) ** 2)
            den += w * h * np.sum(area_w * vals ** 2)
    if den == 0.0:
        raise ValueError("exact function has zero L2(Sigma) norm")
    return float(np.sqrt(num / den))


def eoc(errors) -> list:
    """Estimated orders of convergence log2(e_{k-1} / e_k)."""
    errors = list(errors)
    if any(e <= 0 for e in errors):
        raise ValueError("errors must be positive")
    return [float(np.log2(errors[k - 1] / errors[k])) for k in range(1, len(errors))]


def interior_evaluation_points(n_points: int = 10_000, n_axis: int = 22,
                               half_width: float = 0.5,
                               end_time: float = 1.0) -> list:
    """Deterministic interior evaluation cloud: the first n_points of the
    lexicographic n_axis^3 lattice spanning [-half_width, half_width]^3,
    paired with times cycling through ten evenly spaced values in
    [0.25, 0.75] * end_time (a short cycle keeps times uncorrelated with
    the lattice position)."""
    axis = np.linspace(-half_width, half_width, n_axis)
    pts = []
    times = end_time * (0.25 + 0.5 * (np.arange(n_points) % 10) / 9.0)
    idx = 0
    for a in axis:
        for b in axis:
            for c in axis:
                if idx >= n_points:
                    return pts
                pts.append(EvalPoint(np.array([a, b, c]), float(times[idx])))
                idx += 1
    return pts
