from __future__ import annotations

import dataclasses
import functools
import logging
import math
import os
import typing as t

import numpy as np
from scipy import fft

if t.TYPE_CHECKING:
    from collections.abc import Iterator, Mapping

    from burgerskit.types import (
        BoolArray,
        ComplexArray,
        DealiasRule,
        FloatArray,
        IntArray,
        NormKind,
        SymbolKind,
        Wavevector,
    )

logger = logging.getLogger("burgerskit")

DEALIAS_RULES = ("none", "two-thirds")
SYMBOL_KINDS = ("zero", "bse", "qse", "kse", "custom")
SYMMETRY_TOLERANCE = 1e-12

# Set BURGERSKIT_DEBUG=1 to verify Hermitian symmetry on every field construction.
CHECK_SYMMETRY = bool(os.environ.get("BURGERSKIT_DEBUG"))


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """
    Uniform periodic collocation grid on the box [-L/2, L/2]^d.

    d: space dimension, 1 or 2
    N: collocation points (and retained modes) per dimension, even and at least 8
    L: side length of the box
    dealias: "two-thirds" to truncate quadratic products, "none" to keep every mode
    """

    d: int
    N: int
    L: float = 2 * math.pi
    dealias: DealiasRule = "two-thirds"

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"Unsupported dimension {self.d}, expected 1 or 2")
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and at least 8, got {self.N}")
        if not self.L > 0 or not math.isfinite(self.L):
            raise ValueError(f"L must be positive, got {self.L}")
        if self.dealias not in DEALIAS_RULES:
            raise ValueError(f"Unknown dealias rule {self.dealias}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def kappa_scale(self) -> float:
        """Physical wavenumber of the first lattice mode, 2 pi / L."""
        return 2 * math.pi / self.L

    def coordinates(self) -> tuple[FloatArray, ...]:
        x = -self.L / 2 + self.dx * np.arange(self.N)
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))

    def index(self, k: Wavevector) -> tuple[int, ...]:
        """Array index of the integer wavevector k."""
        k = _as_wavevector(k, self.d)
        if any(abs(ki) > self.N // 2 for ki in k):
            raise ValueError(f"Wavevector {k} is not resolved on a grid with N={self.N}")
        return tuple(ki % self.N for ki in k)


def _as_wavevector(k: Wavevector, d: int) -> tuple[int, ...]:
    vector = (k,) if isinstance(k, (int, np.integer)) else tuple(k)
    if len(vector) != d:
        raise ValueError(f"Wavevector {k} does not have dimension {d}")
    return tuple(int(ki) for ki in vector)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@functools.lru_cache(maxsize=None)
def integer_wavenumbers(grid: GridSpec) -> tuple[IntArray, ...]:
    """Integer wavevector components in FFT order, broadcast over the grid."""
    k = np.rint(fft.fftfreq(grid.N, 1.0 / grid.N)).astype(np.int64)
    return tuple(_frozen(a) for a in np.meshgrid(*([k] * grid.d), indexing="ij"))


@functools.lru_cache(maxsize=None)
def odd_wavenumbers(grid: GridSpec) -> tuple[IntArray, ...]:
    """Wavenumbers for odd derivatives: the unpaired Nyquist mode maps to 0."""
    out = []
    for k in integer_wavenumbers(grid):
        k = k.copy()
        k[k == -grid.N // 2] = 0
        out.append(_frozen(k))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def integer_norm2(grid: GridSpec) -> IntArray:
    return _frozen(sum(k**2 for k in integer_wavenumbers(grid)))


@functools.lru_cache(maxsize=None)
def kappa_squared(grid: GridSpec) -> FloatArray:
    return _frozen(grid.kappa_scale**2 * integer_norm2(grid).astype(float))


@functools.lru_cache(maxsize=None)
def _phase(grid: GridSpec) -> FloatArray:
    # samples live on x_j = -L/2 + j dx, so every mode picks up (-1)^(k1+...+kd)
    parity = sum(integer_wavenumbers(grid)) % 2
    return _frozen(1.0 - 2.0 * parity)


@functools.lru_cache(maxsize=None)
def dealias_mask(grid: GridSpec) -> BoolArray:
    """True where a mode survives dealiasing."""
    if grid.dealias == "none":
        return _frozen(np.ones(grid.shape, dtype=bool))
    # 3|k| < N keeps quadratic products alias free even when 3 divides N
    keep = np.ones(grid.shape, dtype=bool)
    for k in integer_wavenumbers(grid):
        keep &= 3 * np.abs(k) < grid.N
    return _frozen(keep)


def reflect(coeffs: np.ndarray) -> np.ndarray:
    """Coefficient array indexed by -k."""
    out = coeffs
    for axis in range(-coeffs.ndim, 0):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


def symmetrize(coeffs: ComplexArray) -> ComplexArray:
    return 0.5 * (coeffs + np.conj(reflect(coeffs)))


def symmetry_defect(coeffs: ComplexArray) -> float:
    scale = max(float(np.max(np.abs(coeffs), initial=0.0)), 1.0)
    return float(np.max(np.abs(coeffs - np.conj(reflect(coeffs))), initial=0.0)) / scale


def spectral_array(samples: np.ndarray, grid: GridSpec) -> ComplexArray:
    coeffs = fft.fftn(samples, axes=tuple(range(-grid.d, 0)))
    return symmetrize(coeffs * (_phase(grid) / grid.N**grid.d))


def physical_array(coeffs: ComplexArray, grid: GridSpec) -> FloatArray:
    samples = fft.ifftn(coeffs * _phase(grid), axes=tuple(range(-grid.d, 0)))
    return samples.real * grid.N**grid.d


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralField:
    """
    Real periodic scalar field held as Fourier coefficients in FFT order.

    The sample at x is sum_k c(k) exp(2 pi i k.x / L). Coefficients are
    Hermitian symmetric, c(-k) = conj(c(k)).
    """

    grid: GridSpec
    coeffs: ComplexArray
    zero_mean: bool = False

    def __post_init__(self) -> None:
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"Coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )
        if self.coeffs.dtype != np.complex128:
            object.__setattr__(self, "coeffs", self.coeffs.astype(np.complex128))
        if self.zero_mean and self.coeffs[(0,) * self.grid.d] != 0:
            raise ValueError("Zero-mean field carries a nonzero k=0 coefficient")
        if CHECK_SYMMETRY and symmetry_defect(self.coeffs) > SYMMETRY_TOLERANCE:
            raise ValueError("Coefficients are not Hermitian symmetric")

    @classmethod
    def zeros(cls, grid: GridSpec, zero_mean: bool = True) -> SpectralField:
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), zero_mean)

    @classmethod
    def from_modes(
        cls,
        grid: GridSpec,
        modes: Mapping[Wavevector, complex],
        zero_mean: bool = False,
    ) -> SpectralField:
        """Real field sum_k Re(a_k exp(2 pi i k.x / L)) for the given amplitudes a_k."""
        coeffs = np.zeros(grid.shape, dtype=np.complex128)
        for k, value in modes.items():
            vector = _as_wavevector(k, grid.d)
            coeffs[grid.index(vector)] += value
            mirror = tuple(-ki for ki in vector)
            coeffs[grid.index(mirror)] += np.conj(value)
        return cls(grid, 0.5 * coeffs, zero_mean)

    def coeff(self, k: Wavevector) -> complex:
        return complex(self.coeffs[self.grid.index(k)])

    @property
    def mean(self) -> float:
        return float(self.coeffs[(0,) * self.grid.d].real)

    def with_coeffs(self, coeffs: ComplexArray) -> SpectralField:
        return SpectralField(self.grid, coeffs, self.zero_mean)

    def __add__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return SpectralField(
            self.grid, self.coeffs + other.coeffs, self.zero_mean and other.zero_mean
        )

    def __sub__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return SpectralField(
            self.grid, self.coeffs - other.coeffs, self.zero_mean and other.zero_mean
        )

    def __neg__(self) -> SpectralField:
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return self.with_coeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SpectralField<d={self.grid.d} N={self.grid.N} L={self.grid.L:g} zero_mean={self.zero_mean}>"


@dataclasses.dataclass(frozen=True, eq=False)
class VectorField:
    """d-tuple of zero-mean scalar fields sharing one grid."""

    components: tuple[SpectralField, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("VectorField needs at least one component")
        grid = self.components[0].grid
        if len(self.components) != grid.d:
            raise ValueError(
                f"Expected {grid.d} components, got {len(self.components)}"
            )
        for component in self.components:
            if component.grid != grid:
                raise ValueError("Vector components live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    def __iter__(self) -> Iterator[SpectralField]:
        return iter(self.components)

    def __getitem__(self, index: int) -> SpectralField:
        return self.components[index]

    def stack(self) -> ComplexArray:
        return np.stack([c.coeffs for c in self.components])

    @classmethod
    def from_stack(cls, grid: GridSpec, coeffs: ComplexArray) -> VectorField:
        return cls(tuple(SpectralField(grid, c, zero_mean=True) for c in coeffs))

    def __add__(self, other: VectorField) -> VectorField:
        return VectorField(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: VectorField) -> VectorField:
        return VectorField(tuple(a - b for a, b in zip(self, other)))

    def __mul__(self, scalar: float) -> VectorField:
        return VectorField(tuple(c * scalar for c in self))

    __rmul__ = __mul__


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError(f"Grid mismatch: {a.grid} vs {b.grid}")


@dataclasses.dataclass(frozen=True)
class MultiplierSymbol:
    """
    Real radial Fourier multiplier T with symbol m(k), m(0) = 0.

    kind: zero, bse (alpha - 1 off the mean), qse (alpha kappa^2 / (1 + kappa^2)),
        kse (alpha kappa^2 (1 - kappa^2), unbounded) or custom (table lookup)
    alpha: real parameter of the parametric kinds
    table: custom values keyed by integer wavevector; -k defaults to the value of k
    """

    kind: SymbolKind = "zero"
    alpha: float = 0.0
    table: t.Optional[Mapping[Wavevector, float]] = dataclasses.field(
        default=None, hash=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.kind not in SYMBOL_KINDS:
            raise ValueError(f"Unknown symbol kind {self.kind}")
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        if self.kind == "custom" and self.table is None:
            raise ValueError("Custom symbol requires a table")

    @property
    def bounded(self) -> bool:
        return self.kind != "kse"

    def of_kappa2(self, kappa2: FloatArray) -> FloatArray:
        kappa2 = np.asarray(kappa2, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(kappa2)
        if self.kind == "bse":
            return np.where(kappa2 > 0, self.alpha - 1.0, 0.0)
        if self.kind == "qse":
            return self.alpha * kappa2 / (1.0 + kappa2)
        if self.kind == "kse":
            return self.alpha * kappa2 * (1.0 - kappa2)
        raise ValueError("Custom symbols are keyed by wavevector, not kappa")

    def value(self, k: Wavevector, L: float) -> float:
        vector = tuple(k) if not isinstance(k, (int, np.integer)) else (int(k),)
        if all(ki == 0 for ki in vector):
            return 0.0
        if self.kind == "custom":
            table = self._normalized_table(len(vector))
            if vector not in table:
                raise ValueError(f"Custom symbol has no value at k={vector}")
            return table[vector]
        kappa2 = (2 * math.pi / L) ** 2 * sum(ki * ki for ki in vector)
        return float(self.of_kappa2(np.asarray(kappa2)))

    def on_grid(self, grid: GridSpec) -> FloatArray:
        """Symbol sampled on every grid mode; NaN marks custom modes without a value."""
        if self.kind != "custom":
            return self.of_kappa2(kappa_squared(grid))
        values = np.full(grid.shape, np.nan)
        for k, v in self._normalized_table(grid.d).items():
            if all(abs(ki) <= grid.N // 2 for ki in k):
                values[grid.index(k)] = v
        values[(0,) * grid.d] = 0.0
        return values

    def _normalized_table(self, d: int) -> dict[tuple[int, ...], float]:
        assert self.table is not None
        table: dict[tuple[int, ...], float] = {}
        for k, v in self.table.items():
            table[_as_wavevector(k, d)] = float(v)
        for k, v in list(table.items()):
            table.setdefault(tuple(-ki for ki in k), v)
        return table


def to_spectral(samples: np.ndarray, grid: GridSpec, zero_mean: bool = False) -> SpectralField:
    values = np.asarray(samples, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"Sample shape {values.shape} does not match grid {grid.shape}")
    coeffs = spectral_array(values, grid)
    if zero_mean:
        coeffs[(0,) * grid.d] = 0
    return SpectralField(grid, coeffs, zero_mean)


def to_physical(f: SpectralField) -> FloatArray:
    return physical_array(f.coeffs, f.grid)


def derivative_factor(grid: GridSpec, axis: int, order: int = 1) -> ComplexArray:
    if not 1 <= axis <= grid.d:
        raise ValueError(f"Axis {axis} out of range for dimension {grid.d}")
    if order < 1:
        raise ValueError(f"Derivative order must be positive, got {order}")
    table = odd_wavenumbers(grid) if order % 2 else integer_wavenumbers(grid)
    return (1j * grid.kappa_scale * table[axis - 1]) ** order


def differentiate(f: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Partial derivative along axis (1-based); the result has zero mean."""
    coeffs = f.coeffs * derivative_factor(f.grid, axis, order)
    coeffs[(0,) * f.grid.d] = 0
    return SpectralField(f.grid, coeffs, zero_mean=True)


def gradient(f: SpectralField) -> VectorField:
    return VectorField(tuple(differentiate(f, axis) for axis in range(1, f.grid.d + 1)))


def laplacian(f: SpectralField) -> SpectralField:
    coeffs = -kappa_squared(f.grid) * f.coeffs
    return SpectralField(f.grid, coeffs, zero_mean=True)


def divergence(U: VectorField) -> SpectralField:
    out = differentiate(U[0], 1)
    for axis in range(2, U.grid.d + 1):
        out = out + differentiate(U[axis - 1], axis)
    return out


def curl(U: VectorField) -> SpectralField:
    """Scalar vorticity d/dx2 u1 - d/dx1 u2 of a planar field."""
    if U.grid.d != 2:
        raise ValueError("curl is defined for d = 2 only")
    return differentiate(U[0], 2) - differentiate(U[1], 1)


def apply_multiplier(f: SpectralField, symbol: MultiplierSymbol) -> SpectralField:
    m = symbol.on_grid(f.grid)
    missing = np.isnan(m)
    if np.any(missing & (f.coeffs != 0)):
        raise ValueError("Custom symbol table does not cover the support of the field")
    coeffs = np.where(missing, 0, m * f.coeffs)
    return SpectralField(f.grid, coeffs, zero_mean=True)


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coeffs(f.coeffs * dealias_mask(f.grid))


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pseudo-spectral product of two fields, dealiased before and after."""
    _check_same_grid(f, g)
    grid = f.grid
    mask = dealias_mask(grid)
    product = physical_array(f.coeffs * mask, grid) * physical_array(g.coeffs * mask, grid)
    return SpectralField(grid, spectral_array(product, grid) * mask)


def mean(f: SpectralField) -> float:
    return f.mean


def subtract_mean(f: SpectralField) -> SpectralField:
    coeffs = f.coeffs.copy()
    coeffs[(0,) * f.grid.d] = 0
    return SpectralField(f.grid, coeffs, zero_mean=True)


def positive_part(f: SpectralField) -> FloatArray:
    return np.maximum(to_physical(f), 0.0)


def integrate(samples: np.ndarray, grid: GridSpec) -> float:
    """Rectangle-rule integral over the box, spectrally accurate for smooth fields."""
    return float(np.sum(samples)) * grid.cell_volume


def gradient_project(V: VectorField) -> VectorField:
    """
    Leray-type projection onto gradient fields, (k.V / |k|^2) k.

    Every one-dimensional zero-mean field is a gradient already.
    """
    grid = V.grid
    if grid.d == 1:
        return V
    return VectorField.from_stack(grid, project_gradient_array(V.stack(), grid))


def project_gradient_array(coeffs: ComplexArray, grid: GridSpec) -> ComplexArray:
    k = odd_wavenumbers(grid)
    k2 = sum(ki**2 for ki in k)
    dot = sum(ki * ci for ki, ci in zip(k, coeffs))
    weight = np.divide(dot, k2, out=np.zeros_like(dot), where=k2 > 0)
    return np.stack([weight * ki for ki in k])


def potential(U: VectorField) -> SpectralField:
    """Zero-mean phi with grad phi = U for a gradient field U."""
    grid = U.grid
    k = odd_wavenumbers(grid)
    k2 = sum(ki**2 for ki in k)
    dot = sum(ki * c.coeffs for ki, c in zip(k, U))
    coeffs = np.divide(dot, 1j * grid.kappa_scale * k2, out=np.zeros_like(dot), where=k2 > 0)
    return SpectralField(grid, coeffs, zero_mean=True)


def _hs_weights(grid: GridSpec, s: float) -> FloatArray:
    kappa2 = kappa_squared(grid)
    if s == 0:
        return np.ones_like(kappa2)
    safe = np.where(kappa2 > 0, kappa2, 1.0)
    return np.where(kappa2 > 0, safe**s, 0.0)


def _scalar_hs2(f: SpectralField, s: float) -> float:
    if s < 0 and abs(f.coeffs[(0,) * f.grid.d]) > 0:
        raise ValueError("Negative-order Sobolev norm needs a zero-mean field")
    return f.grid.volume * float(np.sum(_hs_weights(f.grid, s) * np.abs(f.coeffs) ** 2))


def norm(
    f: SpectralField | VectorField,
    kind: NormKind = "L2",
    *,
    p: float = 2.0,
    s: float = 0.0,
) -> float:
    """
    Norm of a scalar or vector field.

    L2 and Hs use Parseval, ||f||^2 = L^d sum_k |kappa|^(2s) |c(k)|^2, with the
    k = 0 weight of Hs taken as 0 for s != 0. Lp and Linf use samples; vector
    fields use the pointwise Euclidean magnitude.
    """
    components = tuple(f) if isinstance(f, VectorField) else (f,)
    if kind in ("L2", "Hs"):
        order = s if kind == "Hs" else 0.0
        return math.sqrt(sum(_scalar_hs2(c, order) for c in components))
    magnitude = np.sqrt(sum(to_physical(c) ** 2 for c in components))
    grid = components[0].grid
    if kind == "Linf":
        return float(np.max(magnitude))
    if kind == "Lp":
        if p < 1:
            raise ValueError(f"Lp norm needs p >= 1, got {p}")
        return integrate(magnitude**p, grid) ** (1.0 / p)
    raise ValueError(f"Unknown norm kind {kind}")


def h1_seminorm(coeffs: ComplexArray, grid: GridSpec) -> float:
    """||grad f||_L2 of a raw coefficient array."""
    return math.sqrt(grid.volume * float(np.sum(kappa_squared(grid) * np.abs(coeffs) ** 2)))


def random_field(
    grid: GridSpec,
    rng: np.random.Generator,
    *,
    slope: float = 2.0,
    kmax: t.Optional[float] = None,
) -> SpectralField:
    """
    Zero-mean random field with amplitudes |k|^-slope and uniform phases,
    truncated to |k| <= kmax (N/4 by default).
    """
    kmax = grid.N / 4 if kmax is None else kmax
    norm2 = integer_norm2(grid).astype(float)
    support = (norm2 > 0) & (norm2 <= kmax**2)
    amplitude = np.where(support, np.where(norm2 > 0, norm2, 1.0) ** (-slope / 2), 0.0)
    phases = np.exp(2j * np.pi * rng.random(grid.shape))
    coeffs = symmetrize(amplitude * phases)
    coeffs[(0,) * grid.d] = 0
    return SpectralField(grid, coeffs, zero_mean=True)
