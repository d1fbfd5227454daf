"""Triangle-pair quadrature: regular product rules and Duffy-regularised
rules for identical / edge-adjacent / vertex-adjacent pairs.

The reference triangle is {(u, v): 0 <= u <= 1, 0 <= v <= 1 - u} with the
affine chart x = v0 + u (v1 - v0) + v (v2 - v0) and surface Jacobian
2 * area, so a physical pair integral is 4 * area_a * area_b times the
reference-domain quadrature sum.

Singular pairs use the Sauter-Schwab subdomain decomposition (6 / 5 / 2
subdomains for identical / common-edge / common-vertex pairs) pulled back
to a tensor Gauss rule on the unit 4-cube; the transformed integrands are
smooth, so plain Gauss converges rapidly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


# --------------------------------------------------------------------------
# 1D and triangle rules
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def gauss01(n_points: int):
    """Gauss-Legendre rule shifted to [0, 1]; exact to degree 2n - 1."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    x, w = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class TriangleRule:
    """Quadrature rule on the reference triangle; weights sum to 1/2."""

    order: int
    nodes: np.ndarray    # (n, 2) (u, v) coordinates
    weights: np.ndarray  # (n,)


def _orbit1():
    return [(1.0 / 3.0, 1.0 / 3.0)]


def _orbit3(a: float):
    # barycentric (a, b, b) with b = (1 - a)/2; (u, v) = (lambda1, lambda2)
    b = 0.5 * (1.0 - a)
    return [(b, b), (a, b), (b, a)]


def _orbit6(a: float, b: float, c: float):
    pts = []
    for l0, l1, l2 in (
        (a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)
    ):
        pts.append((l1, l2))
    return pts


# Symmetric positive rules; (orbit points, weight-per-point) with weights
# normalised to a unit-area triangle (divide by 2 below).
_SYMMETRIC_RULES = {
    1: [(_orbit1(), 1.0)],
    2: [(_orbit3(2.0 / 3.0), 1.0 / 3.0)],
    3: [(_orbit6(0.659027622374092, 0.231933368553031, 0.109039009072877),
         1.0 / 6.0)],
    4: [(_orbit3(0.816847572980459), 0.109951743655322),
        (_orbit3(0.108103018168070), 0.223381589678011)],
    5: [(_orbit1(), 0.225),
        (_orbit3(0.79742698535308720), 0.12593918054482717),
        (_orbit3(0.05971587178976981), 0.13239415278850616)],
    6: [(_orbit3(0.873821971016996), 0.050844906370207),
        (_orbit3(0.501426509658179), 0.116786275726379),
        (_orbit6(0.636502499121399, 0.310352451033785, 0.053145049844816),
         0.082851075618374)],
}

# orbit3 rules list the repeated barycentric coordinate pair via the
# distinct one; the _orbit3 docstring convention matches the tables the
# values were taken from (b repeated twice).


@lru_cache(maxsize=None)
def triangle_rule(order: int) -> TriangleRule:
    """Positive rule on the reference triangle, exact to the given order.

    Orders 1-6 are classical symmetric rules; 7-10 fall back to a
    collapsed (Duffy-type) tensor Gauss rule, which is exact to the
    stated order but not symmetric.
    """
    if order in _SYMMETRIC_RULES:
        nodes, weights = [], []
        for pts, w in _SYMMETRIC_RULES[order]:
            nodes.extend(pts)
            weights.extend([w / 2.0] * len(pts))
        return TriangleRule(order, np.array(nodes), np.array(weights))
    if 7 <= order <= 10:
        n = (order + 3) // 2  # 2n - 1 >= order + 1 covers the Jacobian factor
        s, ws = gauss01(n)
        t, wt = gauss01(n)
        S, T = np.meshgrid(s, t, indexing="ij")
        WS, WT = np.meshgrid(ws, wt, indexing="ij")
        u = S.ravel()
        v = (T * (1.0 - S)).ravel()
        w = (WS * WT * (1.0 - S)).ravel()
        return TriangleRule(order, np.column_stack([u, v]), w)
    raise ValueError(f"unsupported triangle rule order {order}")


# --------------------------------------------------------------------------
# Pair classification
# --------------------------------------------------------------------------

def classify_pair(mesh, i_test: int, i_trial: int):
    """Adjacency class of an element pair plus vertex alignments.

    Returns (case, perm_test, perm_trial) where case is one of
    'separated', 'common_vertex', 'common_edge', 'identical' and each perm
    reorders the triangle's local vertices so shared vertices come first
    and in the same global order on both sides (the orientation the Duffy
    maps assume).  perm_trial may be an odd permutation for the edge case:
    consistently oriented neighbours traverse the shared edge in opposite
    directions.
    """
    ident = (0, 1, 2)
    if i_test == i_trial:
        return "identical", ident, ident
    t = mesh.triangles[i_test].tolist()
    s = mesh.triangles[i_trial].tolist()
    shared = [g for g in t if g in s]
    if not shared:
        return "separated", ident, ident
    if len(shared) == 1:
        k = t.index(shared[0])
        m = s.index(shared[0])
        return (
            "common_vertex",
            (k, (k + 1) % 3, (k + 2) % 3),
            (m, (m + 1) % 3, (m + 2) % 3),
        )
    if len(shared) == 2:
        for k in range(3):
            if t[k] in shared and t[(k + 1) % 3] in shared:
                a, b = t[k], t[(k + 1) % 3]
                perm_t = (k, (k + 1) % 3, (k + 2) % 3)
                break
        ia, ib = s.index(a), s.index(b)
        return "common_edge", perm_t, (ia, ib, 3 - ia - ib)
    # Three shared vertices on distinct elements: duplicated triangle.
    return "identical", ident, tuple(s.index(g) for g in t)


# --------------------------------------------------------------------------
# Duffy (Sauter-Schwab) rules
# --------------------------------------------------------------------------

def _simplex_to_ref(x1, x2):
    """Chart change from {0 <= x2 <= x1 <= 1} to the reference triangle."""
    return x1 - x2, x2


# Subdomain maps on the product of two simplices {0 <= x2 <= x1 <= 1};
# each returns (x1, x2, y1, y2, weight_factor) from (xi, e1, e2, e3).

def _identical_regions():
    def r1(xi, e1, e2, e3):
        return (xi, xi * (1 - e1 + e1 * e2),
                xi * (1 - e1 * e2 * e3), xi * (1 - e1),
                xi ** 3 * e1 ** 2 * e2)

    def r3(xi, e1, e2, e3):
        return (xi, xi * e1 * (1 - e2 + e2 * e3),
                xi * (1 - e1 * e2), xi * e1 * (1 - e2),
                xi ** 3 * e1 ** 2 * e2)

    def r5(xi, e1, e2, e3):
        return (xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3),
                xi, xi * e1 * (1 - e2),
                xi ** 3 * e1 ** 2 * e2)

    def mirror(f):
        def g(xi, e1, e2, e3):
            x1, x2, y1, y2, w = f(xi, e1, e2, e3)
            return y1, y2, x1, x2, w
        return g

    return [r1, mirror(r1), r3, mirror(r3), r5, mirror(r5)]


def _edge_regions():
    def r1(xi, e1, e2, e3):
        return (xi, xi * e1 * e3,
                xi * (1 - e1 * e2), xi * e1 * (1 - e2),
                xi ** 3 * e1 ** 2)

    def r2(xi, e1, e2, e3):
        return (xi, xi * e1,
                xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3),
                xi ** 3 * e1 ** 2 * e2)

    def r3(xi, e1, e2, e3):
        return (xi * (1 - e1 * e2), xi * e1 * (1 - e2),
                xi, xi * e1 * e2 * e3,
                xi ** 3 * e1 ** 2 * e2)

    def r4(xi, e1, e2, e3):
        return (xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3),
                xi, xi * e1,
                xi ** 3 * e1 ** 2 * e2)

    def r5(xi, e1, e2, e3):
        return (xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3),
                xi, xi * e1 * e2,
                xi ** 3 * e1 ** 2 * e2)

    return [r1, r2, r3, r4, r5]


def _vertex_regions():
    def r1(xi, e1, e2, e3):
        return xi, xi * e1, xi * e2, xi * e2 * e3, xi ** 3 * e2

    def r2(xi, e1, e2, e3):
        return xi * e2, xi * e2 * e3, xi, xi * e1, xi ** 3 * e2

    return [r1, r2]


_REGION_BUILDERS = {
    "identical": _identical_regions,
    "common_edge": _edge_regions,
    "common_vertex": _vertex_regions,
}


@dataclass(frozen=True)
class DuffyRule:
    """Mapped singular rule: point pairs in the reference triangle squared
    with combined (Gauss x Jacobian) weights summing to 1/4."""

    case: str
    n_subdomains: int
    nodes_test: np.ndarray   # (n, 2)
    nodes_trial: np.ndarray  # (n, 2)
    weights: np.ndarray      # (n,)


@lru_cache(maxsize=None)
def duffy_rule(case: str, singular_order: int) -> DuffyRule:
    """Regularised rule for a touching pair; M Gauss points per cube axis."""
    if case not in _REGION_BUILDERS:
        raise ValueError(f"no Duffy rule for case {case!r}")
    if singular_order < 1:
        raise ValueError("singular_order must be >= 1")
    z, w = gauss01(singular_order)
    grids = np.meshgrid(z, z, z, z, indexing="ij")
    xi, e1, e2, e3 = (g.ravel() for g in grids)
    wg = np.meshgrid(w, w, w, w, indexing="ij")
    w4 = (wg[0] * wg[1] * wg[2] * wg[3]).ravel()

    regions = _REGION_BUILDERS[case]()
    nt, ns, wt = [], [], []
    for region in regions:
        x1, x2, y1, y2, jac = region(xi, e1, e2, e3)
        ut, vt = _simplex_to_ref(x1, x2)
        us, vs = _simplex_to_ref(y1, y2)
        nt.append(np.column_stack([ut, vt]))
        ns.append(np.column_stack([us, vs]))
        wt.append(w4 * jac)
    return DuffyRule(
        case,
        len(regions),
        np.concatenate(nt),
        np.concatenate(ns),
        np.concatenate(wt),
    )


# --------------------------------------------------------------------------
# Pair integration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureConfig:
    """Regular triangle-rule order and Gauss points per axis of the
    singular 4-cube rule."""

    regular_order: int = 4
    singular_order: int = 4

    def __post_init__(self):
        if self.regular_order < 1 or self.singular_order < 1:
            raise ValueError("quadrature orders must be >= 1")


def _map_points(mesh, element: int, perm, uv: np.ndarray) -> np.ndarray:
    v = mesh.vertices[mesh.triangles[element][list(perm)]]
    return v[0] + np.outer(uv[:, 0], v[1] - v[0]) + np.outer(uv[:, 1], v[2] - v[0])


def integrate_pair(kernel, mesh, i_test: int, i_trial: int,
                   config: QuadratureConfig) -> float:
    """Galerkin pair integral of kernel(x, y, n_x, n_y) over two elements.

    kernel receives (n, 3) point batches plus the two element normals and
    must return an (n,) array.  Separated pairs use the regular triangle
    product rule (order bumped by 2 when centroids are closer than twice
    the larger element diameter); touching pairs use the Duffy rule for
    every kernel, smooth or not.  Touching pairs are canonicalised to
    i_test <= i_trial with swapped kernel arguments so that symmetric
    kernels give exactly symmetric entries.
    """
    case, perm_t, perm_s = classify_pair(mesh, i_test, i_trial)

    if case == "separated":
        order = config.regular_order
        dist = np.linalg.norm(mesh.centroids[i_test] - mesh.centroids[i_trial])
        if dist < 2.0 * max(mesh.diameters[i_test], mesh.diameters[i_trial]):
            order = min(order + 2, 10)
        rule = triangle_rule(order)
        xs = _map_points(mesh, i_test, perm_t, rule.nodes)
        ys = _map_points(mesh, i_trial, perm_s, rule.nodes)
        n = len(rule.weights)
        x_all = np.repeat(xs, n, axis=0)
        y_all = np.tile(ys, (n, 1))
        w_all = np.repeat(rule.weights, n) * np.tile(rule.weights, n)
    else:
        if i_test > i_trial:
            inner = kernel
            return integrate_pair(
                lambda x, y, nx, ny: inner(y, x, ny, nx),
                mesh, i_trial, i_test, config,
            )
        rule = duffy_rule(case, config.singular_order)
        x_all = _map_points(mesh, i_test, perm_t, rule.nodes_test)
        y_all = _map_points(mesh, i_trial, perm_s, rule.nodes_trial)
        w_all = rule.weights

    vals = np.asarray(kernel(x_all, y_all, mesh.normals[i_test], mesh.normals[i_trial]))
    jac = 4.0 * mesh.areas[i_test] * mesh.areas[i_trial]
    return float(jac * np.dot(w_all, vals))
