"""Directed polymers driven by random walks with slowly varying tails.

Exact partition functions on truncated windows, free-energy and size-bias
estimators, coarse-grained lower bounds and extreme-value checks.
"""

__version__ = "0.1.0"

from .environment import Bernoulli, DiscreteFinite, EnvironmentLaw, Gaussian  # noqa: E402
from .errors import ConfigError, ContractViolation  # noqa: E402
from .lattice_field import LatticeField  # noqa: E402
from .logmag import LogMagnitude  # noqa: E402
from .partition import PolymerConfig, WTrajectory, exact_W  # noqa: E402
from .walk_laws import EntropyResult, IncrementLaw, Overflow  # noqa: E402

__all__ = [
    "Bernoulli", "ConfigError", "ContractViolation", "DiscreteFinite", "EntropyResult",
    "EnvironmentLaw", "Gaussian", "IncrementLaw", "LatticeField", "LogMagnitude", "Overflow",
    "PolymerConfig", "WTrajectory", "exact_W", "__version__",
]
