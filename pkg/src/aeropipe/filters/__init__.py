from .clipping import tet_clip_volume
from .overlap import OverlapTable, build_overlap_table, conservative_interpolate
from .pipeline import FilterArtifact, run_pipeline
from .timederiv import time_derivative, time_derivative_values

__all__ = [
    "FilterArtifact",
    "OverlapTable",
    "build_overlap_table",
    "conservative_interpolate",
    "run_pipeline",
    "tet_clip_volume",
    "time_derivative",
    "time_derivative_values",
]
