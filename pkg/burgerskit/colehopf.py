from __future__ import annotations

import dataclasses
import logging
import math
import typing as t

import numpy as np

from burgerskit.models import POSITIVITY_THRESHOLD, IntegratedState, PositivityLost
from burgerskit.spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    gradient,
    gradient_project,
    norm,
    random_field,
    subtract_mean,
    to_physical,
    to_spectral,
)
from burgerskit.utils import spawn_generators

if t.TYPE_CHECKING:
    from collections.abc import Sequence

    from burgerskit.models import ModelSpec
    from burgerskit.types import ProbeReportDict, Stratum, StratumStats

logger = logging.getLogger("burgerskit")

STRATA: tuple[Stratum, ...] = ("in_ball", "boundary", "far_field")
DEGENERATE_DISTANCE = 1e-12


def _positive_samples(psi: SpectralField) -> np.ndarray:
    samples = to_physical(psi)
    lowest = float(np.min(samples))
    if not lowest >= POSITIVITY_THRESHOLD:
        raise PositivityLost(lowest)
    return samples


def psi_from_phi(phi: SpectralField, mean: float = 0.0) -> SpectralField:
    """psi = exp(-(phi + mean) / 2), sampled on the grid."""
    return to_spectral(np.exp(-(to_physical(phi) + mean) / 2), phi.grid)


def phi_from_psi(psi: SpectralField) -> tuple[SpectralField, float]:
    """phi = -2 log psi, split into its zero-mean part and its mean."""
    phi = to_spectral(-2 * np.log(_positive_samples(psi)), psi.grid)
    return subtract_mean(phi), phi.mean


def velocity_from_psi(psi: SpectralField) -> VectorField:
    """U = -2 grad(psi) / psi."""
    samples = _positive_samples(psi)
    components = tuple(
        subtract_mean(to_spectral(-2 * to_physical(c) / samples, psi.grid)) for c in gradient(psi)
    )
    return gradient_project(VectorField(components))


def velocity_from_psi_derivative(psi: SpectralField, dpsi: SpectralField) -> VectorField:
    """dU/dt = grad(-2 dpsi / psi) given psi and its time derivative."""
    samples = _positive_samples(psi)
    return gradient(to_spectral(-2 * to_physical(dpsi) / samples, psi.grid, zero_mean=True))


def nonlinearity_N(psi: SpectralField, spec: ModelSpec) -> SpectralField:
    """Nonlinear part of the Cole-Hopf right-hand side, rhs = Laplacian psi + N(psi)."""
    if not spec.is_colehopf:
        raise ValueError(f"N is defined for the Cole-Hopf forms, got {spec.form}")
    return SpectralField(spec.grid, spec.nonlinear(psi.coeffs))


@dataclasses.dataclass(frozen=True)
class TransformRadii:
    """
    Radii of the absorbing set and of its Cole-Hopf image.

    r: max ||Laplacian phi|| over the ensemble
    r_inf: max |phi| over the ensemble, mean included
    r0, r1: exp(-r_inf / 2) and exp(r_inf / 2), the pointwise bracket of psi
    r2: max ||Laplacian psi|| over the images, never below r0
    r2_chain: max r1 (||Laplacian phi|| / 2 + ||grad phi||_L4^2 / 4)
    h1: max ||grad psi|| over the images
    """

    r: float
    r_inf: float
    r0: float
    r1: float
    r2: float
    r2_chain: float = 0.0
    h1: float = 0.0

    def __post_init__(self) -> None:
        values = dataclasses.astuple(self)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"Radii must be finite: {self}")
        if not 0 < self.r0 <= 1 <= self.r1:
            raise ValueError(f"Expected 0 < r0 <= 1 <= r1, got r0={self.r0}, r1={self.r1}")
        if self.r2 < self.r0:
            raise ValueError(f"r2={self.r2} is below r0={self.r0}")

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


def estimate_radii(states: Sequence[IntegratedState | SpectralField]) -> TransformRadii:
    """Radii of an ensemble of post-transient potentials."""
    if not states:
        raise ValueError("Cannot estimate radii of an empty ensemble")
    r = r_inf = h2_psi = h1_psi = 0.0
    chain_terms = []
    for state in states:
        phi, mean = (state.phi, state.mean) if isinstance(state, IntegratedState) else (state, 0.0)
        laplacian = norm(phi, "Hs", s=2)
        r = max(r, laplacian)
        r_inf = max(r_inf, float(np.max(np.abs(to_physical(phi) + mean))))
        psi = psi_from_phi(phi, mean)
        h2_psi = max(h2_psi, norm(psi, "Hs", s=2))
        h1_psi = max(h1_psi, norm(psi, "Hs", s=1))
        chain_terms.append((laplacian, norm(gradient(phi), "Lp", p=4) ** 2, norm(psi, "Hs", s=2)))
    r0, r1 = math.exp(-r_inf / 2), math.exp(r_inf / 2)
    r2_chain = max(r1 * (lap / 2 + grad4 / 4) for lap, grad4, _ in chain_terms)
    for lap, grad4, achieved in chain_terms:
        if achieved > r1 * (lap / 2 + grad4 / 4) * (1 + 1e-8) + 1e-12:
            logger.warning(
                "Chain bound on ||Laplacian psi|| violated: %.6g > %.6g", achieved, r1 * (lap / 2 + grad4 / 4)
            )
    radii = TransformRadii(
        r=r, r_inf=r_inf, r0=r0, r1=r1, r2=max(h2_psi, r0), r2_chain=r2_chain, h1=h1_psi
    )
    logger.info(
        "Radii from %s states: r=%.4g r_inf=%.4g r0=%.4g r1=%.4g r2=%.4g",
        len(states),
        radii.r,
        radii.r_inf,
        radii.r0,
        radii.r1,
        radii.r2,
    )
    return radii


def cutoff(s: float) -> float:
    """Smoothstep profile: 1 on [0, 1], 0 on [2, inf), C1 in between with |slope| <= 1.5."""
    if s <= 1:
        return 1.0
    if s >= 2:
        return 0.0
    sigma = s - 1
    return 1.0 - (3 * sigma**2 - 2 * sigma**3)


@dataclasses.dataclass(frozen=True)
class PreparedNonlinearity:
    """
    Cut-off version of N that agrees with N on the Cole-Hopf image of the
    absorbing set and vanishes far from it.

    inner_radius: H1 seminorm below which N is untouched
    outer_radius: H1 seminorm beyond which the output is zero
    C_est: probed Lipschitz constant in the H1 seminorm, 0 until probed
    """

    spec: ModelSpec = dataclasses.field(compare=False)
    radii: TransformRadii
    inner_radius: float
    outer_radius: float
    theta: str = "smoothstep"
    C_est: float = 0.0

    def __post_init__(self) -> None:
        if not self.spec.is_colehopf:
            raise ValueError(f"Preparation acts on the Cole-Hopf forms, got {self.spec.form}")
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError(
                f"Need 0 < inner < outer, got {self.inner_radius} and {self.outer_radius}"
            )
        if self.theta != "smoothstep":
            raise ValueError(f"Unknown cutoff profile {self.theta}")

    @classmethod
    def from_radii(cls, spec: ModelSpec, radii: TransformRadii) -> PreparedNonlinearity:
        """Cutoff radii inner = max(r2, h1) and outer = 2 inner.

        The inner radius is not r2 alone: on boxes larger than 2 pi the H1 bound of the
        absorbing image exceeds r2, and taking the max keeps theta = 1 on that image.
        """
        inner = max(radii.r2, radii.h1)
        return cls(spec=spec, radii=radii, inner_radius=inner, outer_radius=2 * inner)

    @property
    def grid(self) -> GridSpec:
        return self.spec.grid

    def with_lipschitz(self, C_est: float) -> PreparedNonlinearity:
        return dataclasses.replace(self, C_est=C_est)

    @property
    def clamp_bounds(self) -> tuple[float, float]:
        return max(self.radii.r0 / 2, 10 * POSITIVITY_THRESHOLD), 2 * self.radii.r1


def prepared_N_P(psi: SpectralField, prep: PreparedNonlinearity) -> SpectralField:
    """theta(||psi - mean||_H1 / inner) N(clamp(psi)); total on all of H1."""
    weight = cutoff(norm(psi, "Hs", s=1) / prep.inner_radius)
    if weight == 0:
        return SpectralField.zeros(prep.grid, zero_mean=False)
    samples = to_physical(psi)
    low, high = prep.clamp_bounds
    clamped = np.clip(samples, low, high)
    target = psi if np.array_equal(clamped, samples) else to_spectral(clamped, prep.grid)
    return weight * nonlinearity_N(target, prep.spec)


class ProbeSampler:
    """
    Draws probe states psi = mean + delta, with delta a random smooth zero-mean
    field whose H1 seminorm falls in the range of the requested stratum.
    """

    def __init__(
        self,
        prep: PreparedNonlinearity,
        mean: float = 1.0,
        slope: float = 2.0,
        kmax: t.Optional[float] = None,
    ) -> None:
        self.prep = prep
        self.mean = mean
        self.slope = slope
        self.kmax = kmax

    def radius_range(self, stratum: Stratum) -> tuple[float, float]:
        inner, outer = self.prep.inner_radius, self.prep.outer_radius
        if stratum == "in_ball":
            return 0.0, inner
        if stratum == "boundary":
            return inner, outer
        if stratum == "far_field":
            return outer + inner, 3 * outer
        raise ValueError(f"Unknown stratum {stratum}")

    def direction(self, rng: np.random.Generator) -> SpectralField:
        delta = random_field(self.prep.grid, rng, slope=self.slope, kmax=self.kmax)
        return delta * (1 / norm(delta, "Hs", s=1))

    def draw(self, rng: np.random.Generator, stratum: Stratum) -> SpectralField:
        low, high = self.radius_range(stratum)
        radius = rng.uniform(low, high)
        delta = self.direction(rng) * radius
        coeffs = delta.coeffs.copy()
        coeffs[(0,) * self.prep.grid.d] = self.mean
        return SpectralField(self.prep.grid, coeffs)

    def perturb(self, rng: np.random.Generator, psi: SpectralField) -> SpectralField:
        size = self.prep.inner_radius * 10 ** rng.uniform(-3, 0)
        return psi + self.direction(rng) * size


@dataclasses.dataclass
class LipschitzProbeReport:
    C_est: float
    n_pairs: int
    seed: int
    strata: dict[str, StratumStats]
    sup_N: float

    def to_dict(self) -> ProbeReportDict:
        return {
            "C_est": self.C_est,
            "n_pairs": self.n_pairs,
            "seed": self.seed,
            "strata": self.strata,
            "sup_N": self.sup_N,
        }


def lipschitz_ratio(psi1: SpectralField, psi2: SpectralField, prep: PreparedNonlinearity) -> float:
    distance = norm(psi1 - psi2, "Hs", s=1)
    if distance < DEGENERATE_DISTANCE:
        raise ValueError("Degenerate pair")
    return norm(prepared_N_P(psi1, prep) - prepared_N_P(psi2, prep), "Hs", s=1) / distance


def lipschitz_probe(
    prep: PreparedNonlinearity,
    sampler: ProbeSampler,
    n_pairs: int,
    seed: int = 0,
) -> LipschitzProbeReport:
    """
    Largest observed difference quotient of N_P in the H1 seminorm.

    Pairs cycle through the strata; each pair gets its own generator spawned
    from seed, so the report does not depend on evaluation order.
    """
    strata: dict[str, StratumStats] = {
        name: {"pairs": 0, "skipped": 0, "C_est": 0.0} for name in STRATA
    }
    sup_N = 0.0
    for i, rng in enumerate(spawn_generators(seed, n_pairs)):
        stratum = STRATA[i % len(STRATA)]
        stats = strata[stratum]
        psi1 = sampler.draw(rng, stratum)
        psi2 = sampler.perturb(rng, psi1)
        if norm(psi1 - psi2, "Hs", s=1) < DEGENERATE_DISTANCE:
            stats["skipped"] += 1
            continue
        n1, n2 = prepared_N_P(psi1, prep), prepared_N_P(psi2, prep)
        ratio = norm(n1 - n2, "Hs", s=1) / norm(psi1 - psi2, "Hs", s=1)
        sup_N = max(sup_N, norm(n1, "Hs", s=1), norm(n2, "Hs", s=1))
        stats["pairs"] += 1
        stats["C_est"] = max(stats["C_est"], ratio)
    C_est = max(s["C_est"] for s in strata.values())
    logger.info("Lipschitz probe over %s pairs: C_est=%.6g sup_N=%.6g", n_pairs, C_est, sup_N)
    return LipschitzProbeReport(C_est=C_est, n_pairs=n_pairs, seed=seed, strata=strata, sup_N=sup_N)
