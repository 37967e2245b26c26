"""Gauge symmetry, martingale and pricing checks for option-pricing Hamiltonians."""

from .core import (BSParams, DimensionError, GammaCovariant, GaugeFinError, MGParams,
                   ParameterSet, SingularParameterError, StabilityError, ValidationError,
                   load_parameters, volatility_coefficient_map)
from .operators import (BSHamiltonian, Field, GaugeHamiltonian, Grid1D, Grid2D,
                        MGHamiltonian)

__version__ = "0.1.0"
