from __future__ import annotations

import dataclasses
import functools
import logging
import math
import typing as t

import numpy as np

from burgerskit.spectral import (
    GridSpec,
    MultiplierSymbol,
    SpectralField,
    VectorField,
    dealias_mask,
    derivative_factor,
    kappa_squared,
    norm,
    physical_array,
    project_gradient_array,
    spectral_array,
)

if t.TYPE_CHECKING:
    from burgerskit.types import ComplexArray, FloatArray, Form, Wavevector

logger = logging.getLogger("burgerskit")

FORMS = ("primal", "integrated_adopted", "integrated_plain", "colehopf", "colehopf_plain")

# psi below this is treated as having left the positive cone
POSITIVITY_THRESHOLD = 1e-10


class PositivityLost(RuntimeError):
    """The Cole-Hopf state psi touched zero, so log(psi) is undefined."""

    def __init__(self, min_value: float, threshold: float = POSITIVITY_THRESHOLD) -> None:
        super().__init__(
            f"Cole-Hopf state is no longer positive: min psi = {min_value:.3e} (threshold {threshold:.0e})"
        )
        self.min_value = min_value
        self.threshold = threshold


@dataclasses.dataclass(frozen=True, eq=False)
class IntegratedState:
    """Potential split into its zero-mean part and its spatial mean."""

    phi: SpectralField
    mean: float = 0.0

    def __post_init__(self) -> None:
        if not self.phi.zero_mean:
            raise ValueError("IntegratedState.phi must be zero-mean")


State = t.Union[VectorField, IntegratedState, SpectralField]


@dataclasses.dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    One of the equivalent forms of a forced Burgers-type equation.

    form: primal (U), integrated_adopted or integrated_plain (phi), colehopf or
        colehopf_plain (psi = exp(-phi / 2)); "adopted" forms carry the -<phi>
        feedback that makes the mean decay
    symbol: the extra linear term T
    grid: collocation grid
    G: zero-mean scalar forcing potential, zero if omitted

    Every form evolves y' = linear * y + nonlinear(y) on a packed coefficient
    array; for the integrated forms the k = 0 slot of the array carries the mean,
    for the Cole-Hopf forms it carries the mean of psi.
    """

    form: Form
    symbol: MultiplierSymbol
    grid: GridSpec
    G: t.Optional[SpectralField] = None

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise ValueError(f"Unknown form {self.form}")
        if self.is_colehopf and not self.symbol.bounded:
            raise ValueError(f"The Cole-Hopf form needs a bounded symbol, got {self.symbol.kind}")
        if self.G is None:
            object.__setattr__(self, "G", SpectralField.zeros(self.grid))
        elif self.G.grid != self.grid:
            raise ValueError("Forcing lives on a different grid")
        elif abs(self.G.coeffs[(0,) * self.grid.d]) > 1e-12 * (1 + np.max(np.abs(self.G.coeffs))):
            raise ValueError("Forcing potential G must have zero mean")
        self.symbol_values  # pylint: disable=pointless-statement

    @property
    def forcing(self) -> SpectralField:
        assert self.G is not None
        return self.G

    @property
    def is_colehopf(self) -> bool:
        return self.form in ("colehopf", "colehopf_plain")

    @property
    def is_integrated(self) -> bool:
        return self.form in ("integrated_adopted", "integrated_plain")

    @property
    def adopted(self) -> bool:
        return self.form in ("integrated_adopted", "colehopf")

    @functools.cached_property
    def symbol_values(self) -> FloatArray:
        values = self.symbol.on_grid(self.grid)
        missing = np.isnan(values)
        if np.any(missing & dealias_mask(self.grid)):
            raise ValueError("Custom symbol table must cover every dealiased grid mode")
        # modes beyond the dealiasing band only feel the Laplacian
        return np.where(missing, 0.0, values)

    @functools.cached_property
    def linear_operator(self) -> FloatArray:
        """Diagonal linear part, broadcastable against the packed state."""
        kappa2 = kappa_squared(self.grid)
        if self.is_colehopf:
            return -kappa2
        linear = -kappa2 + self.symbol_values
        if self.is_integrated:
            linear[(0,) * self.grid.d] = -1.0 if self.adopted else 0.0
        return linear

    def nonlinear(self, y: ComplexArray) -> ComplexArray:
        if self.form == "primal":
            return self._primal_nonlinear(y)
        if self.is_integrated:
            return self._integrated_nonlinear(y)
        return self._colehopf_nonlinear(y)

    def rhs(self, y: ComplexArray) -> ComplexArray:
        return self.linear_operator * y + self.nonlinear(y)

    def _primal_nonlinear(self, y: ComplexArray) -> ComplexArray:
        grid = self.grid
        mask = dealias_mask(grid)
        u = y * mask
        velocity = [physical_array(c, grid) for c in u]
        out = np.empty_like(y)
        for i in range(grid.d):
            advection = sum(
                velocity[j] * physical_array(u[i] * derivative_factor(grid, j + 1), grid)
                for j in range(grid.d)
            )
            out[i] = -spectral_array(advection, grid) * mask
            out[i] += self.forcing.coeffs * derivative_factor(grid, i + 1)
        if grid.d == 2:
            out = project_gradient_array(out, grid)
        out[(slice(None),) + (0,) * grid.d] = 0
        return out

    def _integrated_nonlinear(self, y: ComplexArray) -> ComplexArray:
        grid = self.grid
        mask = dealias_mask(grid)
        phi = y * mask
        phi[(0,) * grid.d] = 0
        grad2 = sum(
            physical_array(phi * derivative_factor(grid, axis), grid) ** 2
            for axis in range(1, grid.d + 1)
        )
        out = -0.5 * spectral_array(grad2, grid) * mask
        return out + self.forcing.coeffs

    def _colehopf_nonlinear(self, y: ComplexArray) -> ComplexArray:
        grid = self.grid
        mask = dealias_mask(grid)
        psi = physical_array(y, grid)
        lowest = float(np.min(psi))
        if not lowest >= POSITIVITY_THRESHOLD:
            if math.isnan(lowest):
                return np.full_like(y, np.nan)
            raise PositivityLost(lowest)
        log_psi = spectral_array(np.log(psi), grid)
        out = spectral_array(psi * physical_array(self.symbol_values * log_psi, grid), grid) * mask
        if self.adopted:
            out -= log_psi[(0,) * grid.d].real * y
        out -= 0.5 * spectral_array(psi * physical_array(self.forcing.coeffs, grid), grid) * mask
        return out

    def pack(self, state: State) -> ComplexArray:
        if self.form == "primal":
            if not isinstance(state, VectorField):
                raise TypeError(f"Primal form evolves a VectorField, got {type(state).__name__}")
            self._check_grid(state.grid)
            return state.stack()
        if self.is_integrated:
            if not isinstance(state, IntegratedState):
                raise TypeError(f"Integrated form evolves an IntegratedState, got {type(state).__name__}")
            self._check_grid(state.phi.grid)
            y = state.phi.coeffs.copy()
            y[(0,) * self.grid.d] = state.mean
            return y
        if not isinstance(state, SpectralField):
            raise TypeError(f"Cole-Hopf form evolves a SpectralField, got {type(state).__name__}")
        self._check_grid(state.grid)
        return state.coeffs.copy()

    def unpack(self, y: ComplexArray) -> State:
        if self.form == "primal":
            y = y.copy()
            y[(slice(None),) + (0,) * self.grid.d] = 0
            return VectorField.from_stack(self.grid, y)
        if self.is_integrated:
            phi = y.copy()
            mean = float(phi[(0,) * self.grid.d].real)
            phi[(0,) * self.grid.d] = 0
            return IntegratedState(SpectralField(self.grid, phi, zero_mean=True), mean)
        return SpectralField(self.grid, y.copy())

    def monitor(self, y: ComplexArray) -> float:
        """Norm watched for blow-up: H1 of U, H2 of phi, H1 of psi."""
        kappa2 = kappa_squared(self.grid)
        power = np.abs(y) ** 2
        if self.form == "primal":
            total = np.sum(kappa2 * power)
        elif self.is_integrated:
            total = np.sum(kappa2**2 * power)
        else:
            total = np.sum((1 + kappa2) * power)
        return math.sqrt(self.grid.volume * float(total))

    def _check_grid(self, grid: GridSpec) -> None:
        if grid != self.grid:
            raise ValueError(f"State grid {grid} does not match model grid {self.grid}")


def _require(spec: ModelSpec, forms: tuple[str, ...]) -> None:
    if spec.form not in forms:
        raise ValueError(f"Expected one of {forms}, got form {spec.form}")


def rhs_primal(U: VectorField, spec: ModelSpec) -> VectorField:
    _require(spec, ("primal",))
    out = spec.unpack(spec.rhs(spec.pack(U)))
    assert isinstance(out, VectorField)
    return out


def rhs_integrated(phi: SpectralField, mean: float, spec: ModelSpec) -> tuple[SpectralField, float]:
    """Time derivative of the zero-mean potential and of its mean."""
    _require(spec, ("integrated_adopted", "integrated_plain"))
    out = spec.unpack(spec.rhs(spec.pack(IntegratedState(phi, mean))))
    assert isinstance(out, IntegratedState)
    return out.phi, out.mean


def rhs_colehopf(psi: SpectralField, spec: ModelSpec) -> SpectralField:
    _require(spec, ("colehopf", "colehopf_plain"))
    return SpectralField(spec.grid, spec.rhs(spec.pack(psi)))


def linear_dispersion(symbol: MultiplierSymbol, k: Wavevector, L: float) -> float:
    """Growth rate of the linearized primal equation at lattice wavevector k."""
    vector = (k,) if isinstance(k, (int, np.integer)) else tuple(k)
    kappa2 = (2 * math.pi / L) ** 2 * sum(ki * ki for ki in vector)
    return -kappa2 + symbol.value(k, L)


def state_from_potential(phi: SpectralField, mean: float, spec: ModelSpec) -> State:
    """Initial state of the given form for the potential phi + mean."""
    from burgerskit.colehopf import psi_from_phi
    from burgerskit.spectral import gradient, subtract_mean

    phi = subtract_mean(phi)
    if spec.form == "primal":
        return gradient(phi)
    if spec.is_integrated:
        return IntegratedState(phi, mean)
    return psi_from_phi(phi, mean)


def velocity(state: State, spec: ModelSpec) -> VectorField:
    from burgerskit.colehopf import velocity_from_psi
    from burgerskit.spectral import gradient

    if isinstance(state, VectorField):
        return state
    if isinstance(state, IntegratedState):
        return gradient(state.phi)
    if spec.is_colehopf:
        return velocity_from_psi(state)
    raise TypeError(f"Cannot read a velocity off {type(state).__name__} for form {spec.form}")


def rhs_norm(state: State, spec: ModelSpec) -> float:
    """L2 norm of dU/dt, the residual of a steady state."""
    dy = spec.rhs(spec.pack(state))
    if spec.form == "primal":
        return norm(VectorField.from_stack(spec.grid, dy))
    if spec.is_integrated:
        dy[(0,) * spec.grid.d] = 0
        return norm(velocity(IntegratedState(SpectralField(spec.grid, dy, True)), spec))
    from burgerskit.colehopf import velocity_from_psi_derivative

    assert isinstance(state, SpectralField)
    return norm(velocity_from_psi_derivative(state, SpectralField(spec.grid, dy)))
