"""Numerical laboratory for the quasineutral Euler limit of a 1D kinetic plasma model."""

from .closures import ElectronClosure, check_assumption_A
from .errors import NumericalError, QnlimitError, ValidationError
from .euler import EulerState, RarefactionWave, exact_wave_eval, r3_connect, wave_strength
from .smoothwave import SmoothWave, delta_from_epsilon

__version__ = "0.1.0"

__all__ = [
    "ElectronClosure",
    "check_assumption_A",
    "EulerState",
    "RarefactionWave",
    "SmoothWave",
    "delta_from_epsilon",
    "exact_wave_eval",
    "r3_connect",
    "wave_strength",
    "QnlimitError",
    "ValidationError",
    "NumericalError",
]
