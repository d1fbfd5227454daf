"""Jitted inner loops for block-Toeplitz assembly.

One pass evaluates, for a fixed kernel time gap delta = i_t * h_t, the
spatial pair integrals of a kernel over all element pairs and stores them
in per-test-element staging buffers.  A sequential scatter then adds the
staged values into the operator blocks with the Toeplitz multipliers.
Because every (test element, ...) slice is written by exactly one worker
and the scatter runs in a fixed element order, results are bit-identical
for any worker count.

Operator codes: 0 = single layer (second antiderivative kernel),
1 = double layer (its trial-normal derivative), 2 = hypersingular
surface part (alpha * first antiderivative times n_x . n_y).
"""
import math

import numpy as np
from numba import njit, prange


# --------------------------------------------------------------------------
# scalar kernel branches (mirror heatbem.kernels, scalar and allocation-free)
# --------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _g_dtau(rho, delta, alpha, d_eps, r_eps):
    if delta <= d_eps:
        return 1.0 / (4.0 * math.pi * alpha * rho)
    if rho <= r_eps:
        return 1.0 / (4.0 * math.sqrt(math.pi ** 3 * alpha ** 3 * delta))
    x = rho / (2.0 * math.sqrt(alpha * delta))
    return math.erf(x) / (4.0 * math.pi * alpha * rho)


@njit(cache=True, inline="always")
def _g_dtaudt(rho, delta, alpha, d_eps, r_eps):
    if delta <= d_eps:
        return rho / (8.0 * math.pi * alpha * alpha)
    if rho <= r_eps:
        return math.sqrt(delta) / (2.0 * math.sqrt(math.pi ** 3 * alpha ** 3))
    x = rho / (2.0 * math.sqrt(alpha * delta))
    return (
        (rho / (2.0 * alpha * alpha) + delta / (alpha * rho)) * math.erf(x)
        + math.sqrt(delta) / math.sqrt(math.pi * alpha ** 3) * math.exp(-x * x)
    ) / (4.0 * math.pi)


@njit(cache=True, inline="always")
def _dn_g_dtau(rn, rho, delta, alpha, d_eps, r_eps):
    if rho <= r_eps:
        return 0.0
    if delta <= d_eps:
        return rn / (4.0 * math.pi * rho ** 3)
    x = rho / (2.0 * math.sqrt(alpha * delta))
    return (
        (rn / (rho * rho))
        * (math.erf(x) / rho - math.exp(-x * x) / math.sqrt(math.pi * alpha * delta))
        / (4.0 * math.pi)
    )


@njit(cache=True, inline="always")
def _dn_g_dtaudt(rn, rho, delta, alpha, d_eps, r_eps):
    if rho <= r_eps:
        return 0.0
    if delta <= d_eps:
        return -rn / (8.0 * math.pi * alpha * rho)
    x = rho / (2.0 * math.sqrt(alpha * delta))
    return (
        -(rn / rho)
        * (
            (1.0 / (2.0 * alpha) - delta / (rho * rho)) * math.erf(x)
            + math.sqrt(delta) / (rho * math.sqrt(math.pi * alpha)) * math.exp(-x * x)
        )
        / (4.0 * math.pi)
    )


@njit(cache=True, inline="always")
def _op_value(op, rx, ry, rz, nyx, nyy, nyz, delta, alpha, d_eps, r_eps):
    rho = math.sqrt(rx * rx + ry * ry + rz * rz)
    if op == 0:
        return _g_dtaudt(rho, delta, alpha, d_eps, r_eps)
    elif op == 1:
        rn = rx * nyx + ry * nyy + rz * nyz
        return _dn_g_dtaudt(rn, rho, delta, alpha, d_eps, r_eps)
    return alpha * _g_dtau(rho, delta, alpha, d_eps, r_eps)


@njit(cache=True, inline="always")
def _op_comb0(op, rx, ry, rz, nyx, nyy, nyz, alpha, h_t, d_eps, r_eps):
    # combined d = 0 kernel: h_t * first antiderivative + second
    # antiderivative, both at delta = 0 (the extra identity-block term).
    rho = math.sqrt(rx * rx + ry * ry + rz * rz)
    if op == 0:
        return h_t * _g_dtau(rho, 0.0, alpha, d_eps, r_eps) + _g_dtaudt(
            rho, 0.0, alpha, d_eps, r_eps
        )
    elif op == 1:
        rn = rx * nyx + ry * nyy + rz * nyz
        return h_t * _dn_g_dtau(rn, rho, 0.0, alpha, d_eps, r_eps) + _dn_g_dtaudt(
            rn, rho, 0.0, alpha, d_eps, r_eps
        )
    return alpha * _g_dtau(rho, 0.0, alpha, d_eps, r_eps)


# --------------------------------------------------------------------------
# one assembly pass (fixed i_t / delta) over all pairs
# --------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def _toeplitz_pass(
    op, test_p1, trial_p1, symmetric, need_comb,
    delta, alpha, h_t, d_eps, r_eps,
    tri_nodes, verts_tri, normals, centroids, diameters, areas,
    reg_hats, reg_w, reg_pts,
    near_hats, near_w, near_pts,
    tn_indptr, tn_idx, tn_case, tn_permt, tn_perms,
    duf_off, duf_t, duf_s, duf_w,
    loc, loc_comb,
):
    E_x = tri_nodes.shape[0]
    n_t = 3 if test_p1 else 1
    n_s = 3 if trial_p1 else 1
    for e in prange(E_x):
        lm = np.zeros((3, 3))
        lmc = np.zeros((3, 3))
        ht = np.zeros(3)
        hs = np.zeros(3)
        ht[0] = 1.0
        hs[0] = 1.0
        nxx = normals[e, 0]
        nxy = normals[e, 1]
        nxz = normals[e, 2]
        t_lo = tn_indptr[e]
        t_hi = tn_indptr[e + 1]
        f0 = e if symmetric else 0
        for f in range(f0, E_x):
            tpos = -1
            lo = t_lo
            hi = t_hi
            while lo < hi:
                mid = (lo + hi) // 2
                v = tn_idx[mid]
                if v < f:
                    lo = mid + 1
                elif v > f:
                    hi = mid
                else:
                    tpos = mid
                    break
            for i in range(3):
                for j in range(3):
                    lm[i, j] = 0.0
                    lmc[i, j] = 0.0
            nyx = normals[f, 0]
            nyy = normals[f, 1]
            nyz = normals[f, 2]
            if tpos >= 0:
                # touching pair: Duffy rule on permuted charts
                case = tn_case[tpos]
                pt0 = tn_permt[tpos, 0]
                pt1 = tn_permt[tpos, 1]
                pt2 = tn_permt[tpos, 2]
                ps0 = tn_perms[tpos, 0]
                ps1 = tn_perms[tpos, 1]
                ps2 = tn_perms[tpos, 2]
                a0x = verts_tri[e, pt0, 0]; a0y = verts_tri[e, pt0, 1]; a0z = verts_tri[e, pt0, 2]
                a1x = verts_tri[e, pt1, 0]; a1y = verts_tri[e, pt1, 1]; a1z = verts_tri[e, pt1, 2]
                a2x = verts_tri[e, pt2, 0]; a2y = verts_tri[e, pt2, 1]; a2z = verts_tri[e, pt2, 2]
                b0x = verts_tri[f, ps0, 0]; b0y = verts_tri[f, ps0, 1]; b0z = verts_tri[f, ps0, 2]
                b1x = verts_tri[f, ps1, 0]; b1y = verts_tri[f, ps1, 1]; b1z = verts_tri[f, ps1, 2]
                b2x = verts_tri[f, ps2, 0]; b2y = verts_tri[f, ps2, 1]; b2z = verts_tri[f, ps2, 2]
                for q in range(duf_off[case], duf_off[case + 1]):
                    ut = duf_t[q, 0]
                    vt = duf_t[q, 1]
                    us = duf_s[q, 0]
                    vs = duf_s[q, 1]
                    xx = a0x + ut * (a1x - a0x) + vt * (a2x - a0x)
                    xy = a0y + ut * (a1y - a0y) + vt * (a2y - a0y)
                    xz = a0z + ut * (a1z - a0z) + vt * (a2z - a0z)
                    yx = b0x + us * (b1x - b0x) + vs * (b2x - b0x)
                    yy = b0y + us * (b1y - b0y) + vs * (b2y - b0y)
                    yz = b0z + us * (b1z - b0z) + vs * (b2z - b0z)
                    rx = xx - yx
                    ry = xy - yy
                    rz = xz - yz
                    w = duf_w[q]
                    val = w * _op_value(op, rx, ry, rz, nyx, nyy, nyz,
                                        delta, alpha, d_eps, r_eps)
                    if test_p1:
                        ht[0] = 1.0 - ut - vt
                        ht[1] = ut
                        ht[2] = vt
                    if trial_p1:
                        hs[0] = 1.0 - us - vs
                        hs[1] = us
                        hs[2] = vs
                    if need_comb:
                        cv = w * _op_comb0(op, rx, ry, rz, nyx, nyy, nyz,
                                           alpha, h_t, d_eps, r_eps)
                    else:
                        cv = 0.0
                    for i in range(n_t):
                        oi = i
                        if test_p1:
                            oi = tn_permt[tpos, i]
                        for j in range(n_s):
                            oj = j
                            if trial_p1:
                                oj = tn_perms[tpos, j]
                            hij = ht[i] * hs[j]
                            lm[oi, oj] += val * hij
                            if need_comb:
                                lmc[oi, oj] += cv * hij
            else:
                # separated pair: regular product rule, bumped when close
                dcx = centroids[e, 0] - centroids[f, 0]
                dcy = centroids[e, 1] - centroids[f, 1]
                dcz = centroids[e, 2] - centroids[f, 2]
                dist = math.sqrt(dcx * dcx + dcy * dcy + dcz * dcz)
                dmax = max(diameters[e], diameters[f])
                if dist < 2.0 * dmax:
                    hats = near_hats
                    wq = near_w
                    pts = near_pts
                else:
                    hats = reg_hats
                    wq = reg_w
                    pts = reg_pts
                nq = wq.shape[0]
                for p in range(nq):
                    xx = pts[e, p, 0]
                    xy = pts[e, p, 1]
                    xz = pts[e, p, 2]
                    for q in range(nq):
                        rx = xx - pts[f, q, 0]
                        ry = xy - pts[f, q, 1]
                        rz = xz - pts[f, q, 2]
                        w = wq[p] * wq[q]
                        val = w * _op_value(op, rx, ry, rz, nyx, nyy, nyz,
                                            delta, alpha, d_eps, r_eps)
                        if need_comb:
                            cv = w * _op_comb0(op, rx, ry, rz, nyx, nyy, nyz,
                                               alpha, h_t, d_eps, r_eps)
                        else:
                            cv = 0.0
                        if test_p1:
                            ht[0] = hats[p, 0]
                            ht[1] = hats[p, 1]
                            ht[2] = hats[p, 2]
                        if trial_p1:
                            hs[0] = hats[q, 0]
                            hs[1] = hats[q, 1]
                            hs[2] = hats[q, 2]
                        for i in range(n_t):
                            for j in range(n_s):
                                hij = ht[i] * hs[j]
                                lm[i, j] += val * hij
                                if need_comb:
                                    lmc[i, j] += cv * hij
            jac = 4.0 * areas[e] * areas[f]
            if symmetric and e == f:
                jac *= 0.5
            if op == 2:
                jac *= nxx * nyx + nxy * nyy + nxz * nyz
            for i in range(n_t):
                for j in range(n_s):
                    col = tri_nodes[f, j] if trial_p1 else f
                    loc[e, i, col] += jac * lm[i, j]
                    if need_comb:
                        loc_comb[e, i, col] += jac * lmc[i, j]


@njit(cache=True)
def _scatter_add(loc, tri_nodes, test_p1, factor, block):
    """Sequential fixed-order reduction of a staging buffer into a block."""
    E_x = loc.shape[0]
    n_t = loc.shape[1]
    C = loc.shape[2]
    for e in range(E_x):
        for i in range(n_t):
            row = tri_nodes[e, i] if test_p1 else e
            for c in range(C):
                block[row, c] += factor * loc[e, i, c]
