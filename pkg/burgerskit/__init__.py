from burgerskit.config import RunConfig, load_config, parse_config
from burgerskit.models import IntegratedState, ModelSpec, PositivityLost
from burgerskit.spectral import GridSpec, MultiplierSymbol, SpectralField, VectorField
from burgerskit.timestep import BlowUp, SolverConfig, Trajectory, integrate

__all__ = [
    "BlowUp",
    "GridSpec",
    "IntegratedState",
    "ModelSpec",
    "MultiplierSymbol",
    "PositivityLost",
    "RunConfig",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "VectorField",
    "integrate",
    "load_config",
    "parse_config",
]

__version__ = "0.1.0"
