"""Wave-front tracking for 2x2 conservation laws with boundary feedback ``u(t, 0) = K u(t, L)``."""

from .errors import FrontTrackError
from .flux_model import FluxModel, coupled_drift, decoupled_burgers, eigen_structure, get_model
from .front_tracking import initialize, run
from .functionals import FunctionalParams, monitor_decay, select_parameters, tv_star
from .piecewise import PiecewiseConstant
from .wave_curves import lax_curve, solve_boundary_riemann, solve_riemann

__version__ = "0.1.0"

__all__ = [
    "FluxModel",
    "FrontTrackError",
    "FunctionalParams",
    "PiecewiseConstant",
    "coupled_drift",
    "decoupled_burgers",
    "eigen_structure",
    "get_model",
    "initialize",
    "lax_curve",
    "monitor_decay",
    "run",
    "select_parameters",
    "solve_boundary_riemann",
    "solve_riemann",
    "tv_star",
]
