"""Small plan and mesh builders for solver tests."""
import numpy as np

from aeropipe.config import parse_expression
from aeropipe.config.simulation import AbsorbingBC, RhsLoad, SimulationPlan, StoredResult
from aeropipe.io.material import Material


def plan_for(mesh, num_steps=10, delta_t=1e-5, alpha=0.0, expression="1", rhs_regions=None,
             abc=(), nc=(), pml=None, damping=None, nodes=None, material="air"):
    pde = [(r, (damping or {}).get(r)) for r in mesh.regions]
    rhs_regions = list(mesh.regions) if rhs_regions is None else rhs_regions
    plan = SimulationPlan(
        input_files=[],
        outputs={},
        material_file=None,
        regions={r: material for r in mesh.regions},
        nc_interfaces=list(nc),
        nodes=dict(nodes or {}),
        num_steps=num_steps,
        delta_t=delta_t,
        time_step_alpha=alpha,
        pde_regions=pde,
        pml=dict(pml or {}),
        absorbing_bcs=[AbsorbingBC(n, r) for n, r in abc],
        rhs=[RhsLoad(r, "acouRhsLoad", parse_expression(expression)) for r in rhs_regions],
        store_results=[StoredResult("acouPotentialD1", True)],
    )
    plan.validate()
    return plan


def materials(c=343.4, rho=1.204):
    return {"air": Material("air", rho, c)}
