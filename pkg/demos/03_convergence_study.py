"""Two-level convergence study on a reduced problem size.

Each refinement level quadrisects the spatial mesh and bisects the time
step; the expected orders for the Dirichlet problem are ~0.5 in the
computed Neumann density at the coarse levels (limited by the data
projection) and higher in the interior representation.

The full desk-scale study (192 -> 3072 triangles) is
    heatbem convergence --problem dirichlet --levels 3 --out results/

Run:  python3 demos/03_convergence_study.py    (~ a few minutes on one core)
"""
from heatbem.study import StudyConfig, results_to_csv, run_study

config = StudyConfig(
    problem="dirichlet",
    base_timesteps=4,
    base_subdivisions=2,   # 48 triangles at level 0
    n_interior=500,
)
results = run_study(config, levels=2)
print(results_to_csv(results), end="")
print("\ncolumns: computed density error / projection error (the best the "
      "space allows) / interior representation error, each with its eoc")
