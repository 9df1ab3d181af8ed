"""Characteristic structure of linearized ideal MHD.

Wave speeds, mode classification, bicharacteristic rays and polarization
transport, with a randomized identity suite checked against dense linear
algebra.
"""

from .background import BackgroundEval, BackgroundField, eval_background
from .classify import Regime, RegimeReport, classify_point, vanishing_order
from .errors import MhdpolError, PhysicsError, RayStopped
from .geometry import PolarizationFrame, Ray, dencker_transport, simplified_transport, trace_ray
from .spectra import WaveSpeeds, eigenvalues_A, wave_speeds
from .symbols import PhasePoint, build_p2, build_q
from .verify import VerifyReport, run_identity_suite

__version__ = "0.1.0"

__all__ = [
    "BackgroundEval",
    "BackgroundField",
    "MhdpolError",
    "PhasePoint",
    "PhysicsError",
    "PolarizationFrame",
    "Ray",
    "RayStopped",
    "Regime",
    "RegimeReport",
    "VerifyReport",
    "WaveSpeeds",
    "build_p2",
    "build_q",
    "classify_point",
    "dencker_transport",
    "eigenvalues_A",
    "eval_background",
    "run_identity_suite",
    "simplified_transport",
    "trace_ray",
    "vanishing_order",
    "wave_speeds",
    "__version__",
]
