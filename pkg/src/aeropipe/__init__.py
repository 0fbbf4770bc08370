"""Hybrid aeroacoustics toolkit.

CFD pressure fields are transferred conservatively onto an acoustic mesh,
differentiated in time to form the wave-equation source, propagated with a
transient finite element solver and reduced to microphone spectra.
"""
from .errors import AeropipeError
from .mesh import AxisBox, CellFieldSeries, Mesh, TimeGrid

__version__ = "0.1.0"

__all__ = ["AeropipeError", "AxisBox", "CellFieldSeries", "Mesh", "TimeGrid", "__version__"]
