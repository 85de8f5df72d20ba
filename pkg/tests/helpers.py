from __future__ import annotations

import math
import typing as t

import numpy as np

from burgerskit.config import RunConfig, parse_config
from burgerskit.models import ModelSpec
from burgerskit.spectral import GridSpec, MultiplierSymbol, SpectralField, random_field, to_spectral

if t.TYPE_CHECKING:
    from collections.abc import Callable

    from burgerskit.types import DealiasRule, Form, SymbolKind


def create_grid(
    d: int = 1, N: int = 32, L: float = 2 * math.pi, dealias: DealiasRule = "two-thirds"
) -> GridSpec:
    return GridSpec(d, N, L, dealias)


def create_field(grid: GridSpec, seed: int = 0, slope: float = 2.0, size: float = 1.0) -> SpectralField:
    """Seeded zero-mean smooth field with unit L2 norm times size."""
    field = random_field(grid, np.random.default_rng(seed), slope=slope)
    total = math.sqrt(grid.volume * float(np.sum(np.abs(field.coeffs) ** 2)))
    return field * (size / total)


def sampled(grid: GridSpec, function: Callable[..., np.ndarray], zero_mean: bool = False) -> SpectralField:
    """Field with samples function(x1, ..., xd) on the grid."""
    return to_spectral(function(*grid.coordinates()), grid, zero_mean)


def create_spec(
    form: Form = "primal",
    kind: SymbolKind = "bse",
    alpha: float = 2.0,
    grid: t.Optional[GridSpec] = None,
    G: t.Optional[SpectralField] = None,
) -> ModelSpec:
    return ModelSpec(form, MultiplierSymbol(kind, alpha), grid or create_grid(), G)


def create_config(**sections: dict[str, t.Any]) -> RunConfig:
    """Config from keyword sections, e.g. create_config(model={"N": 16})."""
    overrides = [
        f"{section}.{key}={value}" for section, values in sections.items() for key, value in values.items()
    ]
    return parse_config("", overrides)
