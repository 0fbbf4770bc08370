import numpy as np

from ..errors import InsufficientSteps
from ..mesh import CellFieldSeries


def time_derivative_values(values, delta: float) -> np.ndarray:
    """Second-order finite-difference derivative along axis 0.

    Central differences inside, one-sided three-point stencils at both ends.
    """
    p = np.asarray(values, dtype=float)
    if p.shape[0] < 3:
        raise InsufficientSteps(f"time derivative needs at least 3 steps, got {p.shape[0]}")
    d = np.empty_like(p)
    d[1:-1] = (p[2:] - p[:-2]) / (2.0 * delta)
    d[0] = (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * delta)
    d[-1] = (3.0 * p[-1] - 4.0 * p[-2] + p[-3]) / (2.0 * delta)
    return d


def time_derivative(series: CellFieldSeries, quantity: str | None = None) -> CellFieldSeries:
    return CellFieldSeries(
        quantity=quantity or series.quantity + "_dt",
        regions=list(series.regions),
        values=time_derivative_values(series.values, series.time_grid.delta),
        time_grid=series.time_grid,
        location=series.location,
    )
