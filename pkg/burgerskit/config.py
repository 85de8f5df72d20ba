from __future__ import annotations

import configparser
import logging
import math
import os
import typing as t

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from burgerskit.models import ModelSpec, state_from_potential
from burgerskit.spectral import (
    GridSpec,
    MultiplierSymbol,
    SpectralField,
    norm,
    random_field,
    subtract_mean,
)
from burgerskit.timestep import SolverConfig

if t.TYPE_CHECKING:
    from collections.abc import Iterable

    from burgerskit.models import State

logger = logging.getLogger("burgerskit")

SECTIONS = ("model", "solver", "ic", "output")
OUTPUT_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    pass


def parse_modes(text: str, d: int) -> list[tuple[tuple[int, ...], float]]:
    """
    Parses whitespace separated "k1[,k2]:amplitude" terms, each standing for
    amplitude * cos(2 pi k.x / L).
    """
    modes = []
    for term in text.split():
        wavevector, sep, amplitude = term.partition(":")
        if not sep:
            raise ValueError(f"Mode term {term!r} is missing ':amplitude'")
        k = tuple(int(part) for part in wavevector.split(","))
        if len(k) != d:
            raise ValueError(f"Mode {term!r} has {len(k)} components, expected {d}")
        modes.append((k, float(amplitude)))
    return modes


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelBlock(_Block):
    form: t.Literal[
        "primal", "integrated_adopted", "integrated_plain", "colehopf", "colehopf_plain"
    ] = "primal"
    symbol: t.Literal["zero", "bse", "qse", "kse"] = "bse"
    alpha: float = 2.0
    L: float = Field(default=2 * math.pi, gt=0)
    d: int = Field(default=1, ge=1, le=2)
    N: int = Field(default=64, ge=8)
    dealias: t.Literal["none", "two-thirds"] = "two-thirds"
    forcing: str = ""

    @field_validator("N")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"N must be even, got {value}")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> ModelBlock:
        if self.form.startswith("colehopf") and self.symbol == "kse":
            raise ValueError("The Cole-Hopf forms need a bounded symbol; kse is unbounded")
        for k, _ in parse_modes(self.forcing, self.d):
            if all(ki == 0 for ki in k):
                raise ValueError("Forcing potential must have zero mean; drop the k=0 term")
            if any(abs(ki) >= self.N // 2 for ki in k):
                raise ValueError(f"Forcing mode {k} is not resolved at N={self.N}")
        return self


class SolverBlock(_Block):
    scheme: t.Literal["ifrk4", "imex_cnab2"] = "ifrk4"
    dt: float = Field(default=1e-3, gt=0)
    t_end: float = Field(default=1.0, ge=0)
    snapshot_every: int = Field(default=0, ge=0)
    diag_every: int = Field(default=10, ge=0)
    blowup_threshold: float = Field(default=1e8, gt=0)
    p: int = Field(default=4, ge=3)


class ICBlock(_Block):
    kind: t.Literal["random_smooth", "modes", "file"] = "random_smooth"
    seed: int = 0
    amplitude: float = Field(default=1.0, ge=0)
    slope: float = 2.0
    modes: str = ""
    mean: float = 0.0
    path: str = ""

    @model_validator(mode="after")
    def _kind_arguments(self) -> ICBlock:
        if self.kind == "modes" and not self.modes.split():
            raise ValueError("ic.kind = modes needs a non-empty ic.modes")
        if self.kind == "file":
            if not self.path:
                raise ValueError("ic.kind = file needs ic.path")
            if not os.path.isfile(self.path):
                raise ValueError(f"Initial condition file {self.path} not found")
        return self


class OutputBlock(_Block):
    directory: str = "runs"
    formats: str = "csv,json"

    @field_validator("formats")
    @classmethod
    def _known_formats(cls, value: str) -> str:
        unknown = {f.strip() for f in value.split(",") if f.strip()} - set(OUTPUT_FORMATS)
        if unknown:
            raise ValueError(f"Unknown output formats {sorted(unknown)}")
        return value


class RunConfig(_Block):
    """Fully resolved run configuration."""

    model: ModelBlock = ModelBlock()
    solver: SolverBlock = SolverBlock()
    ic: ICBlock = ICBlock()
    output: OutputBlock = OutputBlock()

    @model_validator(mode="after")
    def _ic_dimension(self) -> RunConfig:
        if self.ic.kind == "modes":
            parse_modes(self.ic.modes, self.model.d)
        return self

    def grid(self) -> GridSpec:
        return GridSpec(self.model.d, self.model.N, self.model.L, self.model.dealias)

    def symbol(self) -> MultiplierSymbol:
        return MultiplierSymbol(self.model.symbol, self.model.alpha)

    def forcing(self) -> SpectralField:
        grid = self.grid()
        return SpectralField.from_modes(grid, dict(parse_modes(self.model.forcing, grid.d)))

    def model_spec(self, form: t.Optional[str] = None) -> ModelSpec:
        return ModelSpec(
            form=t.cast(t.Any, form or self.model.form),
            symbol=self.symbol(),
            grid=self.grid(),
            G=self.forcing(),
        )

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver.model_dump())

    def initial_potential(self, seed: t.Optional[int] = None) -> tuple[SpectralField, float]:
        """phi0 (zero-mean) and its mean; every form starts from this potential."""
        grid = self.grid()
        if self.ic.kind == "random_smooth":
            rng = np.random.default_rng(self.ic.seed if seed is None else seed)
            phi = random_field(grid, rng, slope=self.ic.slope)
            size = norm(phi, "Hs", s=2)
            if size > 0:
                phi = phi * (self.ic.amplitude / size)
            return phi, self.ic.mean
        if self.ic.kind == "modes":
            field = SpectralField.from_modes(grid, dict(parse_modes(self.ic.modes, grid.d)))
            return subtract_mean(field), self.ic.mean + field.mean
        from burgerskit.colehopf import phi_from_psi
        from burgerskit.io import read_snapshot

        snapshot = read_snapshot(self.ic.path)
        meta = snapshot.meta
        if (meta["d"], meta["N"], meta["L"]) != (grid.d, grid.N, grid.L):
            raise ConfigError(f"Snapshot {self.ic.path} was written on a different grid")
        if meta["field"] == "psi":
            return phi_from_psi(snapshot.field)
        return subtract_mean(snapshot.field), meta["mean"]

    def initial_state(self, form: t.Optional[str] = None, seed: t.Optional[int] = None) -> State:
        phi, mean = self.initial_potential(seed)
        return state_from_potential(phi, mean, self.model_spec(form))

    def output_root(self) -> str:
        return os.environ.get("BURGERSKIT_OUTPUT", self.output.directory)

    def to_text(self) -> str:
        """INI text that parses back to this config."""
        lines = []
        for section in SECTIONS:
            block: BaseModel = getattr(self, section)
            lines.append(f"[{section}]")
            lines.extend(f"{key} = {_render(value)}" for key, value in block.model_dump().items())
            lines.append("")
        return "\n".join(lines)


def _render(value: t.Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Parses INI text with [model], [solver], [ic] and [output] sections.

    overrides are "section.key=value" strings applied on top of the text.
    Unknown sections and keys are errors.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"Malformed configuration: {exc}") from exc
    data: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"Unknown section [{section}]")
        data[section] = dict(parser.items(section))
    for override in overrides:
        key, sep, value = override.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"Override {override!r} is not of the form section.key=value")
        if section not in SECTIONS:
            raise ConfigError(f"Unknown section [{section}] in override {override!r}")
        data.setdefault(section, {})[name] = value.strip()
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str, overrides: Iterable[str] = ()) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as file:
            text = file.read()
    except OSError as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}") from exc
    return parse_config(text, overrides)
