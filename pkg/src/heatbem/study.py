"""Convergence-study driver: per-level assembly, solves, and error rows.

Each refinement level quadrisects the spatial mesh and bisects the time
steps.  The level driver orders the work so that the large single-layer
blocks are released before the double-layer blocks are assembled, keeping
the finest desk-scale level within a few GB.
"""
from __future__ import annotations

import io
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import (
    AssemblyInstrumentation,
    assemble_double_layer,
    assemble_hypersingular_d2,
    assemble_mass,
    assemble_single_layer,
    hypersingular_from_single_layer,
)
from .field import (
    ManufacturedSolution,
    interior_evaluation_points,
    project_to_space,
    relative_error_sigma,
    represent,
)
from .kernels import KernelParams
from .mesh import TimeGrid, generate_cube_surface
from .quadrature import QuadratureConfig
from .solver import LinearOperator, apply_toeplitz, fgmres, forward_block_solve


@dataclass(frozen=True)
class StudyConfig:
    problem: str = "dirichlet"
    base_timesteps: int = 8
    base_subdivisions: int = 4
    half_width: float = 1.0
    end_time: float = 1.0
    alpha: float = 0.5
    source_point: tuple = (0.0, 0.0, 1.5)
    quad: QuadratureConfig = QuadratureConfig()
    workers: int = 1
    deterministic: bool = True
    n_interior: int = 10_000
    fgmres_tol: float = 1e-8

    def __post_init__(self):
        if self.problem not in ("dirichlet", "neumann"):
            raise ValueError("problem must be 'dirichlet' or 'neumann'")


@dataclass
class LevelResult:
    level: int
    E_t: int
    E_x: int
    err_computed: float
    err_projected: float
    err_repr: float
    iterations: int
    residual: float
    converged: bool
    seconds_assembly: dict = field(default_factory=dict)
    seconds_total: float = 0.0


def run_level(config: StudyConfig, level: int,
              solution_out: dict | None = None) -> LevelResult:
    """Assemble, solve, and measure one refinement level.

    When given, solution_out receives the density coefficient arrays
    (keys 'solution', 'data_projection') for reuse by callers."""
    t_start = time.perf_counter()
    mesh = generate_cube_surface(config.base_subdivisions * 2 ** level,
                                 config.half_width)
    tg = TimeGrid(config.end_time, config.base_timesteps * 2 ** level)
    params = KernelParams(config.alpha, tg.step, length_scale=mesh.diameter)
    ms = ManufacturedSolution(np.asarray(config.source_point), config.alpha)
    timings: dict = {}

    def tracked(name, fn):
        inst = AssemblyInstrumentation()
        out = fn(inst)
        timings[name] = round(inst.seconds, 3)
        return out

    # the double-layer operator is only needed for the right-hand side;
    # build and release it before the (larger) system operator so that the
    # finest desk-scale level stays within a few GB
    M = assemble_mass(mesh, tg)
    K = tracked("double_layer", lambda i: assemble_double_layer(
        mesh, tg, params, config.quad, workers=config.workers,
        deterministic=config.deterministic, instrumentation=i))
    if config.problem == "dirichlet":
        data = project_to_space(ms.dirichlet_trace, mesh, tg, "X10")
        rhs = 0.5 * apply_toeplitz(M, data) + apply_toeplitz(K, data)
        exact_fn = ms.neumann_trace
        proj_space = "X00"
    else:
        data = project_to_space(ms.neumann_trace, mesh, tg, "X00")
        rhs = 0.5 * apply_toeplitz(M, data, transpose_blocks=True) \
            - apply_toeplitz(K, data, transpose_blocks=True)
        exact_fn = ms.dirichlet_trace
        proj_space = "X10"
    del K

    if config.problem == "dirichlet":
        A = tracked("single_layer", lambda i: assemble_single_layer(
            mesh, tg, params, config.quad, workers=config.workers,
            deterministic=config.deterministic, instrumentation=i))
    else:
        V = tracked("single_layer", lambda i: assemble_single_layer(
            mesh, tg, params, config.quad, workers=config.workers,
            deterministic=config.deterministic, instrumentation=i))
        D2 = tracked("hypersingular_d2", lambda i: assemble_hypersingular_d2(
            mesh, tg, params, config.quad, workers=config.workers,
            instrumentation=i))
        t0 = time.perf_counter()
        A = hypersingular_from_single_layer(V, D2, mesh, params,
                                            overwrite_d2=True)
        timings["curl_transform"] = round(time.perf_counter() - t0, 3)
        del V, D2  # large single-layer blocks are no longer needed

    # The system is block lower triangular, so causal forward substitution
    # is an (almost exact) right preconditioner; FGMRES then certifies the
    # 1e-8 residual in a handful of iterations.
    op = LinearOperator(lambda x: apply_toeplitz(A, x))
    pre = LinearOperator(lambda x: forward_block_solve(A, x))
    t0 = time.perf_counter()
    sol, report = fgmres(op, rhs, rel_tol=config.fgmres_tol, right_precond=pre)
    timings["solve"] = round(time.perf_counter() - t0, 3)
    del A

    err_computed = relative_error_sigma(sol, exact_fn, mesh, tg)
    proj = project_to_space(exact_fn, mesh, tg, proj_space)
    err_projected = relative_error_sigma(proj, exact_fn, mesh, tg)

    pts = interior_evaluation_points(config.n_interior, end_time=config.end_time)
    t0 = time.perf_counter()
    if config.problem == "dirichlet":
        vals, _ = represent(sol, data, pts, mesh, tg, params, config.quad)
    else:
        vals, _ = represent(data, sol, pts, mesh, tg, params, config.quad)
    timings["representation"] = round(time.perf_counter() - t0, 3)
    exact_vals = np.array([ms.value(p.x, p.t) for p in pts])
    err_repr = float(np.linalg.norm(vals - exact_vals) / np.linalg.norm(exact_vals))

    if solution_out is not None:
        solution_out["solution"] = sol
        solution_out["data_projection"] = data
        solution_out["interior_values"] = vals
    return LevelResult(
        level=level,
        E_t=tg.n_steps,
        E_x=mesh.n_triangles,
        err_computed=float(err_computed),
        err_projected=float(err_projected),
        err_repr=err_repr,
        iterations=report.iterations,
        residual=report.residual,
        converged=report.converged,
        seconds_assembly=timings,
        seconds_total=round(time.perf_counter() - t_start, 3),
    )


def run_study(config: StudyConfig, levels: int) -> list:
    if levels < 1:
        raise ValueError("need at least one level")
    return [run_level(config, lv) for lv in range(levels)]


CSV_HEADER = "Et,Ex,err_computed,eoc_computed,err_projected,eoc_projected,err_repr,eoc_repr"


def results_to_csv(results) -> str:
    """Convergence table with blank eoc entries on the first row."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    prev = None
    for r in results:
        def rate(cur, pre):
            return "" if pre is None else f"{np.log2(pre / cur):.2f}"
        buf.write(
            f"{r.E_t},{r.E_x},"
            f"{r.err_computed:.6e},{rate(r.err_computed, prev and prev.err_computed)},"
            f"{r.err_projected:.6e},{rate(r.err_projected, prev and prev.err_projected)},"
            f"{r.err_repr:.6e},{rate(r.err_repr, prev and prev.err_repr)}\n"
        )
        prev = r
    return buf.getvalue()


def results_to_report(config: StudyConfig, results) -> str:
    payload = {
        "problem": config.problem,
        "alpha": config.alpha,
        "source_point": list(config.source_point),
        "levels": [asdict(r) for r in results],
    }
    return json.dumps(payload, indent=2)
