import math

import numpy as np
import pytest

from heatbem import (
    QuadratureConfig,
    classify_pair,
    duffy_rule,
    gauss01,
    generate_cube_surface,
    integrate_pair,
    triangle_rule,
)


def _tri_moment(a, b):
    # int over {u,v >= 0, u+v <= 1} of u^a v^b = a! b! / (a+b+2)!
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def test_gauss01_exactness():
    x, w = gauss01(4)
    for k in range(8):  # exact to degree 2n-1 = 7
        assert np.dot(w, x ** k) == pytest.approx(1.0 / (k + 1), rel=1e-14)


@pytest.mark.parametrize("order", range(1, 11))
def test_triangle_rule_moment_exactness(order):
    rule = triangle_rule(order)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(0.5, rel=1e-14)
    for a in range(order + 1):
        for b in range(order + 1 - a):
            val = np.dot(rule.weights, rule.nodes[:, 0] ** a * rule.nodes[:, 1] ** b)
            assert val == pytest.approx(_tri_moment(a, b), rel=1e-12), (a, b)


def test_triangle_rule_unsupported_order():
    with pytest.raises(ValueError):
        triangle_rule(11)


@pytest.mark.parametrize("case,n_regions", [
    ("identical", 6), ("common_edge", 5), ("common_vertex", 2),
])
def test_duffy_rule_weight_sum_and_domain(case, n_regions):
    rule = duffy_rule(case, 4)
    assert rule.n_subdomains == n_regions
    # the subdomains tile the product of two reference triangles (area 1/2 each)
    assert rule.weights.sum() == pytest.approx(0.25, rel=1e-13)
    for nodes in (rule.nodes_test, rule.nodes_trial):
        assert np.all(nodes >= -1e-14)
        assert np.all(nodes.sum(axis=1) <= 1.0 + 1e-14)


def test_duffy_rule_exact_for_polynomials():
    # smooth integrands: the mapped rule must reproduce the tensor-product
    # triangle-rule value to machine precision
    for case in ("identical", "common_edge", "common_vertex"):
        duf = duffy_rule(case, 6)
        tri = triangle_rule(6)

        def f(xu, xv, yu, yv):
            return (1.0 + xu + 2.0 * yv) ** 2 + xv * yu

        got = np.dot(duf.weights, f(duf.nodes_test[:, 0], duf.nodes_test[:, 1],
                                    duf.nodes_trial[:, 0], duf.nodes_trial[:, 1]))
        u, v, w = tri.nodes[:, 0], tri.nodes[:, 1], tri.weights
        ref = sum(
            w[p] * np.dot(w, f(u[p], v[p], u, v)) for p in range(len(w))
        )
        assert got == pytest.approx(ref, rel=1e-13)


def test_duffy_rule_cached():
    assert duffy_rule("identical", 4) is duffy_rule("identical", 4)


def test_classify_pair_cases(cube1):
    assert classify_pair(cube1, 0, 0)[0] == "identical"
    found = set()
    for j in range(cube1.n_triangles):
        case, pt, ps = classify_pair(cube1, 0, j)
        found.add(case)
        # permutations align shared global vertices in the same order
        t = cube1.triangles[0][list(pt)]
        s = cube1.triangles[j][list(ps)]
        n_shared = {"identical": 3, "common_edge": 2, "common_vertex": 1,
                    "separated": 0}[case]
        assert np.array_equal(t[:n_shared], s[:n_shared])
    assert found == {"identical", "common_edge", "common_vertex", "separated"}


def test_integrate_pair_symmetric_kernel_is_symmetric(cube1):
    def kernel(x, y, nx, ny):
        rho = np.linalg.norm(x - y, axis=1)
        return 1.0 / (4.0 * np.pi * rho)

    config = QuadratureConfig(4, 4)
    for i in range(4):
        for j in range(i + 1, cube1.n_triangles):
            a = integrate_pair(kernel, cube1, i, j, config)
            b = integrate_pair(kernel, cube1, j, i, config)
            if classify_pair(cube1, i, j)[0] == "separated":
                # same rule, roles swapped: equal up to summation order
                assert a == pytest.approx(b, rel=1e-14), (i, j)
            else:
                # touching pairs are canonicalised: bitwise equal
                assert a == b, (i, j)


def test_integrate_pair_singular_self_convergence(cube1):
    # self-term of the Laplace single layer: Duffy-regularised values must
    # self-converge as the per-axis Gauss order grows
    def kernel(x, y, nx, ny):
        rho = np.linalg.norm(x - y, axis=1)
        return 1.0 / (4.0 * np.pi * rho)

    vals = [
        integrate_pair(kernel, cube1, 0, 0, QuadratureConfig(4, m))
        for m in (4, 8, 12)
    ]
    assert abs(vals[1] - vals[0]) / abs(vals[2]) < 5e-4
    assert abs(vals[2] - vals[1]) / abs(vals[2]) < 1e-6


def test_integrate_pair_separated_matches_analytic_smooth(cube2):
    # constant kernel integrates to 4 * area_i * area_j * (1/2) * (1/2)
    def one(x, y, nx, ny):
        return np.ones(len(x))

    i = 0
    j = next(
        f for f in range(cube2.n_triangles)
        if classify_pair(cube2, i, f)[0] == "separated"
    )
    val = integrate_pair(one, cube2, i, j, QuadratureConfig(4, 4))
    assert val == pytest.approx(cube2.areas[i] * cube2.areas[j], rel=1e-13)


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(0, 4)
    with pytest.raises(ValueError):
        QuadratureConfig(4, 0)
