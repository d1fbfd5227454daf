"""Galerkin assembly of the block lower-triangular Toeplitz operators.

The temporal weights of all operators are three-term combinations of a
single kernel evaluated at time gaps delta = i_t * h_t; looping over i_t
and scattering each kernel batch into the up to three blocks it feeds
evaluates every pair kernel exactly E_t + 1 times instead of 3 E_t.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _assembly_numba as _nb
from .kernels import KernelParams
from .quadrature import QuadratureConfig, classify_pair, duffy_rule, triangle_rule

_CASE_IDS = {"identical": 0, "common_edge": 1, "common_vertex": 2}
_OP_SINGLE, _OP_DOUBLE, _OP_HYPER2 = 0, 1, 2


@dataclass
class BlockToeplitzMatrix:
    """Lower-triangular block-Toeplitz operator: block (k, i) is
    blocks[k - i] for k >= i and zero otherwise (never stored).

    diagonal_only marks operators with a single repeated diagonal block
    (the mass matrix)."""

    blocks: np.ndarray  # (n_blocks, block_rows, block_cols)
    transpose_blocks_on_apply: bool = False
    diagonal_only: bool = False

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_rows(self) -> int:
        return self.blocks.shape[2] if self.transpose_blocks_on_apply else self.blocks.shape[1]

    @property
    def block_cols(self) -> int:
        return self.blocks.shape[1] if self.transpose_blocks_on_apply else self.blocks.shape[2]

    def transposed(self) -> "BlockToeplitzMatrix":
        """Blockwise-transposed operator (shares block storage)."""
        return BlockToeplitzMatrix(
            self.blocks,
            transpose_blocks_on_apply=not self.transpose_blocks_on_apply,
            diagonal_only=self.diagonal_only,
        )


@dataclass(frozen=True)
class CurlTransform:
    """Sparse per-component surface-curl transforms T_1, T_2, T_3 of shape
    (E_x, N_x): T_o[m, j] is component o of the surface curl of the hat
    function of node j restricted to triangle m."""

    components: tuple


@dataclass(frozen=True)
class AssemblyPlan:
    """The i_t <-> d bookkeeping of the kernel-reuse loop."""

    n_blocks: int

    def targets(self, i_t: int):
        """Blocks fed by the kernel batch at gap i_t * h_t, as
        (d, multiplier, use_combined) triples."""
        if not 0 <= i_t <= self.n_blocks:
            raise ValueError("i_t out of range")
        out = []
        if i_t == 0:
            out.append((0, 1.0, True))
            if self.n_blocks > 1:
                out.append((1, -1.0, False))
            return out
        if i_t - 1 <= self.n_blocks - 1:
            out.append((i_t - 1, -1.0, False))
        if i_t <= self.n_blocks - 1:
            out.append((i_t, 2.0, False))
        if i_t + 1 <= self.n_blocks - 1:
            out.append((i_t + 1, -1.0, False))
        return out

    def contributors(self, d: int):
        """Kernel gaps feeding block d, as (i_t, multiplier, use_combined)."""
        if not 0 <= d <= self.n_blocks - 1:
            raise ValueError("d out of range")
        return [
            (i_t, mult, comb)
            for i_t in range(self.n_blocks + 1)
            for (dd, mult, comb) in self.targets(i_t)
            if dd == d
        ]


@dataclass
class AssemblyInstrumentation:
    """Counters observing the kernel-reuse scheme."""

    kernel_batch_passes: int = 0
    seconds: float = field(default=0.0)


def _resolve_workers(workers: int | None) -> int:
    import numba

    if workers is None or workers < 1:
        workers = 1
    return min(int(workers), numba.config.NUMBA_NUM_THREADS)


def _touching_csr(mesh):
    """CSR lists of touching trial elements per test element with case ids
    and vertex-alignment permutations."""
    n = mesh.n_triangles
    vert2el: dict = {}
    for e, tri in enumerate(mesh.triangles.tolist()):
        for v in tri:
            vert2el.setdefault(v, []).append(e)
    indptr = np.zeros(n + 1, dtype=np.int64)
    idx, case, permt, perms = [], [], [], []
    for e, tri in enumerate(mesh.triangles.tolist()):
        cand = sorted({f for v in tri for f in vert2el[v]})
        for f in cand:
            c, pt, ps = classify_pair(mesh, e, f)
            idx.append(f)
            case.append(_CASE_IDS[c])
            permt.append(pt)
            perms.append(ps)
        indptr[e + 1] = len(idx)
    return (
        indptr,
        np.array(idx, dtype=np.int64),
        np.array(case, dtype=np.int64),
        np.array(permt, dtype=np.int64),
        np.array(perms, dtype=np.int64),
    )


def _rule_tables(mesh, order: int):
    """Physical quadrature points per element plus reference hat values."""
    rule = triangle_rule(order)
    uv = rule.nodes
    hats = np.column_stack([1.0 - uv[:, 0] - uv[:, 1], uv[:, 0], uv[:, 1]])
    v = mesh.triangle_vertices()  # (E_x, 3, 3)
    pts = (
        v[:, None, 0, :]
        + uv[None, :, 0, None] * (v[:, None, 1, :] - v[:, None, 0, :])
        + uv[None, :, 1, None] * (v[:, None, 2, :] - v[:, None, 0, :])
    )
    return hats, rule.weights.copy(), np.ascontiguousarray(pts)


def _duffy_tables(singular_order: int):
    offs = [0]
    t, s, w = [], [], []
    for name in ("identical", "common_edge", "common_vertex"):
        r = duffy_rule(name, singular_order)
        t.append(r.nodes_test)
        s.append(r.nodes_trial)
        w.append(r.weights)
        offs.append(offs[-1] + len(r.weights))
    return (
        np.array(offs, dtype=np.int64),
        np.ascontiguousarray(np.concatenate(t)),
        np.ascontiguousarray(np.concatenate(s)),
        np.concatenate(w),
    )


def _assemble_operator(
    op: int,
    test_p1: bool,
    trial_p1: bool,
    symmetric: bool,
    mesh,
    timegrid,
    params: KernelParams,
    config: QuadratureConfig,
    workers: int | None,
    instrumentation: AssemblyInstrumentation | None,
) -> np.ndarray:
    import time

    import numba

    E_t = timegrid.n_steps
    E_x = mesh.n_triangles
    N_x = mesh.n_vertices
    R = N_x if test_p1 else E_x
    C = N_x if trial_p1 else E_x
    h_t = timegrid.step

    tri_nodes = mesh.triangles
    verts_tri = np.ascontiguousarray(mesh.triangle_vertices())
    reg_hats, reg_w, reg_pts = _rule_tables(mesh, config.regular_order)
    near_hats, near_w, near_pts = _rule_tables(mesh, min(config.regular_order + 2, 10))
    tn = _touching_csr(mesh)
    duf_off, duf_t, duf_s, duf_w = _duffy_tables(config.singular_order)

    plan = AssemblyPlan(E_t)
    blocks = np.zeros((E_t, R, C))
    loc = np.zeros((E_x, 3 if test_p1 else 1, C))
    loc_comb = np.zeros_like(loc)

    numba.set_num_threads(_resolve_workers(workers))
    t0 = time.perf_counter()
    for i_t in range(E_t + 1):
        loc[:] = 0.0
        need_comb = i_t == 0
        if need_comb:
            loc_comb[:] = 0.0
        _nb._toeplitz_pass(
            op, test_p1, trial_p1, symmetric, need_comb,
            i_t * h_t, params.alpha, h_t, params.delta_eps, params.rho_eps,
            tri_nodes, verts_tri, mesh.normals, mesh.centroids,
            mesh.diameters, mesh.areas,
            reg_hats, reg_w, reg_pts,
            near_hats, near_w, near_pts,
            tn[0], tn[1], tn[2], tn[3], tn[4],
            duf_off, duf_t, duf_s, duf_w,
            loc, loc_comb,
        )
        if instrumentation is not None:
            instrumentation.kernel_batch_passes += 1
        for d, mult, use_comb in plan.targets(i_t):
            _nb._scatter_add(
                loc_comb if use_comb else loc, tri_nodes, test_p1, mult, blocks[d]
            )
    if symmetric:
        for d in range(E_t):
            blocks[d] = blocks[d] + blocks[d].T
    if instrumentation is not None:
        instrumentation.seconds += time.perf_counter() - t0
    return blocks


def assemble_single_layer(
    mesh,
    timegrid,
    params: KernelParams,
    config: QuadratureConfig = QuadratureConfig(),
    test_space: str = "p0",
    trial_space: str = "p0",
    workers: int | None = 1,
    deterministic: bool = True,
    instrumentation: AssemblyInstrumentation | None = None,
) -> BlockToeplitzMatrix:
    """Single-layer operator blocks; p0 x p0 or p1 x p1 pairings.

    Both accumulation modes produce bit-identical results here (staging is
    per test element and reduced in fixed order), so the deterministic
    flag has no numerical effect; it is accepted for interface stability.
    """
    if (test_space, trial_space) not in (("p0", "p0"), ("p1", "p1")):
        raise ValueError("single layer supports p0 x p0 and p1 x p1 only")
    p1 = test_space == "p1"
    blocks = _assemble_operator(
        _OP_SINGLE, p1, p1, True, mesh, timegrid, params, config,
        workers, instrumentation,
    )
    return BlockToeplitzMatrix(blocks)


def assemble_double_layer(
    mesh,
    timegrid,
    params: KernelParams,
    config: QuadratureConfig = QuadratureConfig(),
    workers: int | None = 1,
    deterministic: bool = True,
    instrumentation: AssemblyInstrumentation | None = None,
) -> BlockToeplitzMatrix:
    """Double-layer operator blocks, p0 test x p1 trial."""
    blocks = _assemble_operator(
        _OP_DOUBLE, False, True, False, mesh, timegrid, params, config,
        workers, instrumentation,
    )
    return BlockToeplitzMatrix(blocks)


def curl_transform(mesh) -> CurlTransform:
    """Surface curls of the nodal hat functions, constant per triangle.

    On a triangle with CCW vertices (v0, v1, v2) and area A the curl of
    the hat at v_i is (v_{i+1} - v_{i+2}) / (2 A)."""
    E_x = mesh.n_triangles
    N_x = mesh.n_vertices
    v = mesh.triangle_vertices()
    rows = np.repeat(np.arange(E_x), 3)
    cols = mesh.triangles.ravel()
    comps = []
    curls = np.empty((E_x, 3, 3))
    for i in range(3):
        curls[:, i, :] = (v[:, (i + 1) % 3, :] - v[:, (i + 2) % 3, :]) / (
            2.0 * mesh.areas[:, None]
        )
    for o in range(3):
        comps.append(
            sp.csr_matrix(
                (curls[:, :, o].ravel(), (rows, cols)), shape=(E_x, N_x)
            )
        )
    return CurlTransform(tuple(comps))


def hypersingular_from_single_layer(
    V: BlockToeplitzMatrix,
    D2: BlockToeplitzMatrix,
    mesh,
    params: KernelParams,
    overwrite_d2: bool = False,
) -> BlockToeplitzMatrix:
    """Combine D = T^T (alpha^2 V) T (summed over curl components) + D2.

    With overwrite_d2 the result is accumulated into the D2 block storage,
    keeping peak memory at the two operands (the desk-scale finest level
    would not fit an extra copy)."""
    T = curl_transform(mesh).components
    E_t = V.n_blocks
    out = D2.blocks if overwrite_d2 else D2.blocks.copy()
    a2 = params.alpha ** 2
    for d in range(E_t):
        Vd = V.blocks[d]
        for To in T:
            out[d] += a2 * (To.T @ (Vd @ To))
    return BlockToeplitzMatrix(out)


def assemble_hypersingular(
    mesh,
    timegrid,
    params: KernelParams,
    config: QuadratureConfig = QuadratureConfig(),
    workers: int | None = 1,
    deterministic: bool = True,
    instrumentation: AssemblyInstrumentation | None = None,
    single_layer: BlockToeplitzMatrix | None = None,
) -> BlockToeplitzMatrix:
    """Hypersingular operator D = T^T (alpha^2 V) T + D2, p1 x p1.

    Reuses pre-assembled p0 x p0 single-layer blocks when given."""
    if single_layer is None:
        single_layer = assemble_single_layer(
            mesh, timegrid, params, config, "p0", "p0",
            workers, deterministic, instrumentation,
        )
    d2_blocks = _assemble_operator(
        _OP_HYPER2, True, True, True, mesh, timegrid, params, config,
        workers, instrumentation,
    )
    return hypersingular_from_single_layer(
        single_layer, BlockToeplitzMatrix(d2_blocks), mesh, params
    )


def assemble_hypersingular_d2(
    mesh,
    timegrid,
    params: KernelParams,
    config: QuadratureConfig = QuadratureConfig(),
    workers: int | None = 1,
    instrumentation: AssemblyInstrumentation | None = None,
) -> BlockToeplitzMatrix:
    """The surface (non-curl) part D2 alone, p1 x p1."""
    blocks = _assemble_operator(
        _OP_HYPER2, True, True, True, mesh, timegrid, params, config,
        workers, instrumentation,
    )
    return BlockToeplitzMatrix(blocks)


def assemble_mass(mesh, timegrid) -> BlockToeplitzMatrix:
    """Mass matrix h_t * M_x as a diagonal-only operator, p0 test x p1
    trial: M_x[l, j] = area_l / 3 for each vertex j of triangle l."""
    E_x = mesh.n_triangles
    N_x = mesh.n_vertices
    M = np.zeros((E_x, N_x))
    for i in range(3):
        np.add.at(M, (np.arange(E_x), mesh.triangles[:, i]), mesh.areas / 3.0)
    return BlockToeplitzMatrix(
        (timegrid.step * M)[None, :, :], diagonal_only=True
    )


# --------------------------------------------------------------------------
# binary block dump
# --------------------------------------------------------------------------

_MAGIC = b"HBTM1"


def save_blocks(matrix: BlockToeplitzMatrix, path) -> None:
    """Binary dump: magic 'HBTM1', then E_t, rows, cols as little-endian
    int64, then the blocks row-major in d order as little-endian float64."""
    b = matrix.blocks
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqq", b.shape[0], b.shape[1], b.shape[2]))
        fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_blocks(path) -> BlockToeplitzMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != _MAGIC:
            raise ValueError("not a block dump file (bad magic)")
        n, r, c = struct.unpack("<qqq", fh.read(24))
        data = np.frombuffer(fh.read(n * r * c * 8), dtype="<f8")
        if data.size != n * r * c:
            raise ValueError("truncated block dump")
        return BlockToeplitzMatrix(data.reshape(n, r, c).astype(np.float64))
