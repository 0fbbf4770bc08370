from .assembly import DofMap, SystemMatrices, assemble, interface_facets, pml_sigma
from .hht import HHTIntegrator, HHTParameters, TransientState, step_hht
from .linsolve import SparseDirectSolver, linear_solve
from .nitsche import assemble_nitsche
from .transient import RhsAssembler, TransientResult, locate_point, run_simulation, solve_transient

__all__ = [
    "DofMap",
    "HHTIntegrator",
    "HHTParameters",
    "RhsAssembler",
    "SparseDirectSolver",
    "SystemMatrices",
    "TransientResult",
    "TransientState",
    "assemble",
    "assemble_nitsche",
    "interface_facets",
    "linear_solve",
    "locate_point",
    "pml_sigma",
    "run_simulation",
    "solve_transient",
    "step_hht",
]
