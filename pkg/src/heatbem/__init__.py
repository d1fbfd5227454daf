"""Space-time Galerkin boundary element method for the 3D heat equation."""

import os as _os

# The jitted assembly kernels pick their thread pool size when numba is
# first imported; raise the cap up front so the worker-count knob can go
# above the (possibly low) default.
_os.environ.setdefault("NUMBA_NUM_THREADS", str(max(4, _os.cpu_count() or 1)))

__version__ = "0.1.0"

from .assembly import (  # noqa: E402
    AssemblyInstrumentation,
    AssemblyPlan,
    BlockToeplitzMatrix,
    CurlTransform,
    assemble_double_layer,
    assemble_hypersingular,
    assemble_hypersingular_d2,
    assemble_mass,
    assemble_single_layer,
    curl_transform,
    hypersingular_from_single_layer,
    load_blocks,
    save_blocks,
)
from .field import (  # noqa: E402
    EvalPoint,
    ManufacturedSolution,
    eoc,
    eval_double_layer_potential,
    eval_single_layer_potential,
    interior_evaluation_points,
    project_to_space,
    relative_error_sigma,
    represent,
)
from .kernels import (  # noqa: E402
    KernelParams,
    SingularEvaluationError,
    TemporalWeightKind,
    antideriv_tau,
    antideriv_tau_t,
    fundamental,
    grad_fundamental_normal,
    normal_deriv_antideriv_tau,
    normal_deriv_antideriv_tau_t,
    temporal_weight,
)
from .mesh import (  # noqa: E402
    MeshError,
    MeshParseError,
    SurfaceMesh,
    TimeGrid,
    generate_cube_surface,
    load_mesh,
    refine,
    save_mesh,
)
from .oracle import (  # noqa: E402
    OracleConfig,
    adaptive_gauss,
    oracle_galerkin_entry,
    oracle_temporal_weight,
)
from .quadrature import (  # noqa: E402
    DuffyRule,
    QuadratureConfig,
    TriangleRule,
    classify_pair,
    duffy_rule,
    gauss01,
    integrate_pair,
    triangle_rule,
)
from .solver import (  # noqa: E402
    LinearOperator,
    SolveReport,
    apply_toeplitz,
    build_hypersingular_preconditioner,
    fgmres,
    forward_block_solve,
    toeplitz_operator,
)
from .study import StudyConfig, run_level, run_study, results_to_csv  # noqa: E402
