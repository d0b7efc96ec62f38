"""Pseudo-spectral toolkit for the low Mach number limit of non-isentropic
compressible Euler flow: simulation, derivative towers, analytic/Gevrey norms,
and empirical lemma verification on the periodic torus."""

from .errors import MachlimitError
from .gas import FlowState, GasModel
from .initial_data import DataSpec
from .limits import SweepConfig, run_sweep
from .norms import NormSpec
from .solvers import EllipticConfig, SchemeConfig
from .spectral import Grid, SpectralField
from .tower import DerivativeTower, build_tower

__version__ = "0.1.0"

__all__ = [
    "MachlimitError",
    "FlowState",
    "GasModel",
    "DataSpec",
    "SweepConfig",
    "run_sweep",
    "NormSpec",
    "EllipticConfig",
    "SchemeConfig",
    "Grid",
    "SpectralField",
    "DerivativeTower",
    "build_tower",
    "__version__",
]
