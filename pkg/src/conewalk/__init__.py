"""Lattice random walks with asymptotically zero drift, observed through cones."""

__version__ = "0.1.0"

from .errors import (ConewalkError, DomainError, EmptyReportError, InconsistencyError, ParseError,
                     PreconditionError, UnsupportedError, UsageError)
from .geometry import Cone, LyapunovParams, cone_contains, h_nu
from .kernels import AssumptionParams, KernelSpec, enumerate_onestep, mean_drift, verify_assumptions
from .rng import RandomStream, derive_key
from .simulate import Experiment, StopRule, batch, exit_time_cone, run_until

__all__ = [
    "AssumptionParams", "Cone", "ConewalkError", "DomainError", "EmptyReportError", "Experiment",
    "InconsistencyError", "KernelSpec", "LyapunovParams", "ParseError", "PreconditionError",
    "RandomStream", "StopRule", "UnsupportedError", "UsageError", "__version__", "batch",
    "cone_contains", "derive_key", "enumerate_onestep", "exit_time_cone", "h_nu", "mean_drift",
    "run_until", "verify_assumptions",
]
