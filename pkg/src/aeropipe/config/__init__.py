from .expression import Expression, evaluate, parse_expression
from .pipeline import FilterSpec, PipelinePlan, load_pipeline, parse_pipeline
from .simulation import SimulationPlan, load_simulation, parse_simulation

__all__ = [
    "Expression",
    "FilterSpec",
    "PipelinePlan",
    "SimulationPlan",
    "evaluate",
    "load_pipeline",
    "load_simulation",
    "parse_expression",
    "parse_pipeline",
    "parse_simulation",
]
