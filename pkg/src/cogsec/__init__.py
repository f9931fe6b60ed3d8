"""Projective hypervector algebra, state statistics and cognitive-security objectives."""

__version__ = "0.1.0"

from . import divergence, measurement, models, projective, security, state_stats  # noqa: E402
from ._kernels import BACKEND  # noqa: E402
from .errors import (  # noqa: E402
    CogsecError,
    ConfigError,
    DegenerateBundleError,
    DimensionError,
    MethodInapplicableError,
    ValidationError,
)
from .projective import CogitHypervector, bind, bundle, permute, unbind  # noqa: E402

__all__ = [
    "BACKEND", "CogitHypervector", "CogsecError", "ConfigError", "DegenerateBundleError",
    "DimensionError", "MethodInapplicableError", "ValidationError", "__version__", "bind",
    "bundle", "divergence", "measurement", "models", "permute", "projective", "security",
    "state_stats", "unbind",
]
