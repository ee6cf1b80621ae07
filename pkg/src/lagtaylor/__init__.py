"""Lagrangian time-Taylor expansion of incompressible 2D Euler flow.

The package computes the scaled time-Taylor coefficients of the inverse
Jacobian ``Y``, the velocity gradient, the velocity and the pressure along
particle trajectories on a disk or annulus, records their norms, fits factorial
majorants to them and sums the series into trajectories.
"""

from .domain import DomainSpec, PolarGrid
from .errors import LagTaylorError
from .fields import ScalarField, TensorField, VectorField
from .majorant import MajorantFit, combinatorial_sums, fit_majorant, radius_estimate
from .presets import PRESETS, make_preset_field
from .recursion import GENERAL, SC, NormLedger, TaylorState, expand
from .snapshot import load_field, load_state, save_field, save_state
from .stepper import TrajectorySet, rk4_trajectories, taylor_sum, trajectories
from .tolerances import DEFAULTS as TOLERANCES

__version__ = "0.1.0"

__all__ = [
    "DomainSpec", "PolarGrid", "LagTaylorError", "ScalarField", "VectorField", "TensorField",
    "MajorantFit", "combinatorial_sums", "fit_majorant", "radius_estimate", "PRESETS",
    "make_preset_field", "GENERAL", "SC", "NormLedger", "TaylorState", "expand",
    "load_field", "load_state", "save_field", "save_state", "TrajectorySet",
    "rk4_trajectories", "taylor_sum", "trajectories", "TOLERANCES",
]
