"""Nested-array integrated sensing and communication toolkit.

Submodules:
    geometry: array layouts, steering vectors and the difference co-array.
    beampattern: nested-array beam pattern, main-lobe bounds and grating lobes.
    channel: LoS and one-ring multipath channels.
    comm: MRC SINR and achievable rate for multi-user uplink.
    sensing: co-array MUSIC DoA estimation.
    experiments: Monte Carlo sweeps and the command-line interface.
"""

from .errors import (
    ConfigError,
    DegeneratePatternError,
    DomainError,
    InvalidConfigurationError,
    NumericalError,
    RegimeError,
    UnderResolutionError,
)
from .geometry import ArrayGeometry, CoArray, build_custom, build_nested, build_ula, difference_coarray, parse_geometry

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "CoArray",
    "build_nested",
    "build_ula",
    "build_custom",
    "parse_geometry",
    "difference_coarray",
    "ConfigError",
    "InvalidConfigurationError",
    "DomainError",
    "RegimeError",
    "NumericalError",
    "DegeneratePatternError",
    "UnderResolutionError",
]
