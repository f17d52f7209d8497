"""Lie splitting for bulk-surface parabolic systems with P1 finite elements on the unit disk."""
from .dirichlet import DirichletOp, build_dirichlet, extend
from .fem import FemOperators, assemble
from .harness import ConvergenceReport, RunConfig, discrete_error, emit_csv, emit_plot, run_convergence
from .linops import EXPMV_TOL, SOLVE_TOL, ExpmvError, SolverError, SpdSolver, expmv, spd_solve, spmv
from .mesh import MeshError, TriMesh, build_disk_mesh, disk_mesh_from_rings, refine_sequence
from .problems import PROBLEMS, NodalForcing, get_problem, interpolate_exact
from .splitting import SplitState, StepperConfig, build_transformed, integrate, lie_step

__all__ = [
    "DirichletOp", "build_dirichlet", "extend",
    "FemOperators", "assemble",
    "ConvergenceReport", "RunConfig", "discrete_error", "emit_csv", "emit_plot", "run_convergence",
    "EXPMV_TOL", "SOLVE_TOL", "ExpmvError", "SolverError", "SpdSolver", "expmv", "spd_solve", "spmv",
    "MeshError", "TriMesh", "build_disk_mesh", "disk_mesh_from_rings", "refine_sequence",
    "PROBLEMS", "NodalForcing", "get_problem", "interpolate_exact",
    "SplitState", "StepperConfig", "build_transformed", "integrate", "lie_step",
]
__version__ = "0.1.0"
