"""Jitted interior potential evaluation.

Densities are pre-interpolated to per-(element, quadrature node) values
dens[i, e, q] for every time interval i, so one code path serves both the
piecewise-constant and piecewise-linear densities.
"""
import math

import numpy as np
from numba import njit, prange

from ._assembly_numba import _dn_g_dtau, _g_dtau


@njit(cache=True, parallel=True)
def _eval_potential(
    kind,            # 0: single layer, 1: double layer (trial-normal kernel)
    points,          # (n_pts, 3)
    k_arr,           # (n_pts,) completed time intervals
    eps_arr,         # (n_pts,) offset into the current interval, in [0, h)
    cur_arr,         # (n_pts,) bool: current-interval term active
    dens,            # (E_t, E_x, nq) density at spatial quadrature nodes
    qpts,            # (E_x, nq, 3) physical quadrature points
    qw,              # (nq,) reference weights
    areas, normals,  # per element
    h_t, alpha, d_eps, r_eps,
    out,             # (n_pts,)
):
    n_pts = points.shape[0]
    E_t = dens.shape[0]
    E_x = qpts.shape[0]
    nq = qpts.shape[1]
    for p in prange(n_pts):
        k = k_arr[p]
        eps = eps_arr[p]
        use_cur = cur_arr[p]
        px = points[p, 0]
        py = points[p, 1]
        pz = points[p, 2]
        acc = 0.0
        for e in range(E_x):
            nyx = normals[e, 0]
            nyy = normals[e, 1]
            nyz = normals[e, 2]
            el = 0.0
            for q in range(nq):
                rx = px - qpts[e, q, 0]
                ry = py - qpts[e, q, 1]
                rz = pz - qpts[e, q, 2]
                rho = math.sqrt(rx * rx + ry * ry + rz * rz)
                rn = rx * nyx + ry * nyy + rz * nyz
                s = 0.0
                for m in range(k + 1):
                    # telescoped history: coefficient of the kernel at time
                    # gap m*h + eps is w[k-1-m] - w[k-m]; the density of the
                    # current (unfinished) interval only participates when
                    # the evaluation time lies strictly inside it
                    hi = k - 1 - m
                    lo = k - m
                    c = dens[hi, e, q] if 0 <= hi < E_t else 0.0
                    if 0 <= lo < E_t and (lo < k or use_cur):
                        c -= dens[lo, e, q]
                    if c == 0.0:
                        continue
                    gap = m * h_t + eps
                    if kind == 0:
                        g = _g_dtau(rho, gap, alpha, d_eps, r_eps)
                    else:
                        g = _dn_g_dtau(rn, rho, gap, alpha, d_eps, r_eps)
                    s += c * g
                if use_cur and 0 <= k < E_t:
                    if kind == 0:
                        g0 = _g_dtau(rho, 0.0, alpha, d_eps, r_eps)
                    else:
                        g0 = _dn_g_dtau(rn, rho, 0.0, alpha, d_eps, r_eps)
                    s += dens[k, e, q] * g0
                el += qw[q] * s
            acc += 2.0 * areas[e] * el
        out[p] = acc
