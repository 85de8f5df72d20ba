from __future__ import annotations

import dataclasses
import logging
import math
import typing as t
from collections.abc import Mapping

import numpy as np

from burgerskit.models import IntegratedState, velocity
from burgerskit.spectral import (
    SpectralField,
    VectorField,
    curl,
    dealias,
    differentiate,
    divergence,
    integrate,
    norm,
    positive_part,
    potential,
    subtract_mean,
    to_physical,
)
from burgerskit.utils import fit_exponential

if t.TYPE_CHECKING:
    from collections.abc import Sequence

    from burgerskit.models import ModelSpec, State
    from burgerskit.timestep import Trajectory
    from burgerskit.types import ColumnDoc, Wavevector

logger = logging.getLogger("burgerskit")

COLUMNS: tuple[ColumnDoc, ...] = (
    {"name": "t", "unit": "time", "description": "time of the record"},
    {"name": "l2_U", "unit": "L2", "description": "||U||_L2"},
    {"name": "h1_U", "unit": "H1", "description": "||U||_H1 = sqrt(||U||^2 + ||grad U||^2)"},
    {"name": "linf_phi", "unit": "Linf", "description": "max |phi| of the full potential, mean included"},
    {"name": "alpha_p", "unit": "Lp^p", "description": "sum_i ||(d_i u_i)^+||_Lp^p"},
    {"name": "mean", "unit": "value", "description": "spatial mean of phi, 0 for the primal form"},
    {
        "name": "mean_residual",
        "unit": "value/time",
        "description": "|dm/dt - rhs of the mean equation|, interior records only, 0 at the ends",
    },
    {"name": "curl_residual", "unit": "ratio", "description": "||curl U|| / ||grad U||, 0 in 1D"},
    {"name": "h2_U", "unit": "H2", "description": "||Laplacian U||_L2"},
    {"name": "linf_U", "unit": "Linf", "description": "max |U|"},
    {"name": "div_plus", "unit": "L2", "description": "||(div U)^+||_L2"},
    {"name": "grad_energy", "unit": "value", "description": "<|grad phi|^2> / 2 over dealiased modes"},
)
COLUMN_NAMES = tuple(c["name"] for c in COLUMNS)

# relative increase over the asymptotic plateau accepted as inside the ball
PLATEAU_MARGIN = 0.05


class NoPlateau(ValueError):
    pass


class LinearRegimeExceeded(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class DiagnosticsRecord:
    """
    Scalar diagnostics of one state.

    norms: l2_U, h1_U, h2_U, linf_U, linf_phi
    mean: spatial mean of the potential
    grad_energy: <|grad phi|^2> / 2, the drain term of the mean equation
    """

    t: float
    norms: dict[str, float]
    alpha_p: float
    p: int
    mean: float = 0.0
    curl_residual: float = 0.0
    div_plus: float = 0.0
    grad_energy: float = 0.0
    mean_residual: float = 0.0

    def value(self, name: str) -> float:
        if name in self.norms:
            return self.norms[name]
        return float(getattr(self, name))

    def to_row(self) -> dict[str, float]:
        return {name: self.value(name) for name in COLUMN_NAMES}


def max_speed(state: State, spec: ModelSpec) -> float:
    """max |U| on the grid."""
    return norm(velocity(state, spec), "Linf")


def make_record(
t: float, state: State, spec: ModelSpec, p: int = 4) -> DiagnosticsRecord:
    from burgerskit.colehopf import phi_from_psi

    U = velocity(state, spec)
    if isinstance(state, IntegratedState):
        phi, mean = state.phi, state.mean
    elif spec.is_colehopf:
        assert isinstance(state, SpectralField)
        phi, mean = phi_from_psi(state)
    else:
        phi, mean = potential(U), 0.0
    l2 = norm(U)
    h1 = norm(U, "Hs", s=1)
    curl_residual = norm(curl(U)) / h1 if spec.grid.d == 2 and h1 > 0 else 0.0
    resolved = VectorField(tuple(dealias(c) for c in U))
    return DiagnosticsRecord(
        t=t,
        norms={
            "l2_U": l2,
            "h1_U": math.hypot(l2, h1),
            "h2_U": norm(U, "Hs", s=2),
            "linf_U": norm(U, "Linf"),
            "linf_phi": float(np.max(np.abs(to_physical(phi) + mean))),
        },
        alpha_p=alpha_p(U, p),
        p=p,
        mean=mean,
        curl_residual=curl_residual,
        div_plus=positive_divergence_norm(U),
        grad_energy=0.5 * norm(resolved) ** 2 / spec.grid.volume,
    )


def alpha_p(U: VectorField, p: int = 4) -> float:
    """sum_i ||(d u_i / d x_i)^+||_Lp^p by grid quadrature."""
    if p < 3:
        raise ValueError(f"p must be at least 3, got {p}")
    total = 0.0
    for axis, component in enumerate(U, start=1):
        w = positive_part(differentiate(component, axis))
        total += integrate(w**p, U.grid)
    return total


def positive_divergence_norm(U: VectorField) -> float:
    w = positive_part(divergence(U))
    return math.sqrt(integrate(w**2, U.grid))


def alpha_upper_bound(p: float, L: float, t: float) -> float:
    """
    p-th root of the explicit upper solution of the alpha_p inequality,
    (2p/(p-2)) (2L^2)^(1/p) max(1/t, 1).
    """
    if not p > 2:
        raise ValueError(f"p must exceed 2, got {p}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return 2 * p / (p - 2) * (2 * L * L) ** (1 / p) * max(1 / t, 1.0)


@dataclasses.dataclass(frozen=True)
class AlphaInequalityReport:
    max_residual: float
    worst_time: float
    n_checked: int
    passed: bool
    tolerance: float = 0.05


def check_alpha_inequality(
    traj: Trajectory, p: t.Optional[int] = None, tolerance: float = 0.05
) -> AlphaInequalityReport:
    """
    Checks d(alpha_p)/dt <= p alpha_p - (p-2)/(2L^2)^(1/p) alpha_p^((p+1)/p)
    with centered differences, allowing tolerance * max(1, p alpha_p).
    """
    records = traj.records
    p = records[0].p if p is None and records else (p or 4)
    if any(r.p != p for r in records):
        raise ValueError(f"Records were taken with a different exponent than p={p}")
    times = np.array([r.t for r in records])
    if times.size > 1 and np.max(np.diff(times)) > 0.01 + 1e-12:
        raise ValueError(
            f"Record cadence {np.max(np.diff(times)):.3g} is too coarse for centered differences (need <= 0.01)"
        )
    alpha = np.array([r.alpha_p for r in records])
    L = traj.spec.grid.L
    worst, worst_time, passed = -math.inf, math.nan, True
    for i in range(1, len(records) - 1):
        rate = (alpha[i + 1] - alpha[i - 1]) / (times[i + 1] - times[i - 1])
        bound = p * alpha[i] - (p - 2) / (2 * L * L) ** (1 / p) * alpha[i] ** ((p + 1) / p)
        residual = rate - bound
        if residual > worst:
            worst, worst_time = residual, float(times[i])
        if residual > tolerance * max(1.0, p * alpha[i]):
            passed = False
    n_checked = max(len(records) - 2, 0)
    return AlphaInequalityReport(
        max_residual=0.0 if n_checked == 0 else float(worst),
        worst_time=worst_time,
        n_checked=n_checked,
        passed=passed,
        tolerance=tolerance,
    )


def alpha_bound_ratio(traj: Trajectory, p: int = 4) -> float:
    """max over records with t >= 1 of alpha_p^(1/p) / alpha_upper_bound; 0 if none."""
    ratios = [
        r.alpha_p ** (1 / p) / alpha_upper_bound(p, traj.spec.grid.L, r.t)
        for r in traj.records
        if r.t >= 1 and r.p == p
    ]
    return max(ratios, default=0.0)


@dataclasses.dataclass(frozen=True)
class AbsorbingBallEstimate:
    """
    Empirical absorbing ball of an ensemble.

    radius: sup of the norm over all members after entry_time
    entry_time: first time the ensemble envelope stays within the plateau margin
    plateau: sup of the envelope over the final window
    member_entry_times: first time each member stays within radius
    """

    kind: str
    radius: float
    entry_time: float
    plateau: float
    window: tuple[float, float]
    member_entry_times: dict[str, float]

    def to_dict(self) -> dict[str, t.Any]:
        return dataclasses.asdict(self)


def _tail_sup(values: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(values[::-1])[::-1]


def absorbing_entry(
    ensemble: Mapping[str, Trajectory] | Sequence[Trajectory],
    kind: str = "h1_U",
    burn_in: float = 0.0,
    window_fraction: float = 0.2,
) -> AbsorbingBallEstimate:
    members = (
        dict(ensemble) if isinstance(ensemble, Mapping) else {str(i): tr for i, tr in enumerate(ensemble)}
    )
    if not members:
        raise ValueError("Empty ensemble")
    length = min(len(tr.records) for tr in members.values())
    if length < 2:
        raise NoPlateau("Trajectories carry fewer than two records")
    times = np.array([r.t for r in next(iter(members.values())).records[:length]])
    if times[-1] <= burn_in:
        raise NoPlateau(f"Trajectories end at t={times[-1]:g}, before the burn-in {burn_in:g}")
    series = {
        key: np.array([r.value(kind) for r in tr.records[:length]]) for key, tr in members.items()
    }
    envelope = np.max(np.stack(list(series.values())), axis=0)
    tail = _tail_sup(envelope)
    window_start = max(float(times[-1] * (1 - window_fraction)), burn_in)
    start = int(np.searchsorted(times, window_start))
    if start >= length - 1:
        raise NoPlateau("Final window holds fewer than two records")
    plateau = float(tail[start])
    entry = int(np.argmax(tail <= (1 + PLATEAU_MARGIN) * plateau))
    radius = float(tail[entry])
    member_entry_times = {
        key: float(times[int(np.argmax(_tail_sup(values) <= radius))])
        for key, values in series.items()
    }
    logger.info(
        "Absorbing ball for %s: radius %.6g entered at t=%.4g (%s members)",
        kind,
        radius,
        times[entry],
        len(members),
    )
    return AbsorbingBallEstimate(
        kind=kind,
        radius=radius,
        entry_time=float(times[entry]),
        plateau=plateau,
        window=(float(times[start]), float(times[-1])),
        member_entry_times=member_entry_times,
    )


@dataclasses.dataclass(frozen=True)
class GrowthRateFit:
    omega: float
    residual: float
    n_points: int


def mode_series(traj: Trajectory, k: Wavevector, component: int = 0) -> np.ndarray:
    """|c_k| of the evolved field at every stored state."""
    values = []
    for state in traj.states:
        if isinstance(state, VectorField):
            field = state[component]
        elif isinstance(state, IntegratedState):
            field = state.phi
        else:
            field = state
        values.append(abs(field.coeff(k)))
    return np.array(values)


def growth_rate_fit(
    traj: Trajectory, k: Wavevector, max_amplitude: float = 1e-6, component: int = 0
) -> GrowthRateFit:
    """Exponential rate of a single small mode, fitted to the stored states."""
    amplitudes = mode_series(traj, k, component)
    if np.max(amplitudes) > max_amplitude:
        raise LinearRegimeExceeded(
            f"Mode {k} reached amplitude {np.max(amplitudes):.3g}, beyond the linear regime ({max_amplitude:.1g})"
        )
    fit = fit_exponential(traj.times, amplitudes)
    return GrowthRateFit(omega=fit.rate, residual=fit.rms, n_points=len(amplitudes))


def mean_residuals(records: Sequence[DiagnosticsRecord], adopted: bool) -> list[float]:
    """
    |dm/dt - f| at every interior record, with dm/dt from a centered difference
    and f = -m - <|grad phi|^2>/2 (adopted) or -<|grad phi|^2>/2 (plain)
    averaged by Simpson's rule over the same stencil.
    """
    residuals = [0.0] * len(records)
    for i in range(1, len(records) - 1):
        before, here, after = records[i - 1], records[i], records[i + 1]
        drift = [-r.grad_energy - (r.mean if adopted else 0.0) for r in (before, here, after)]
        rate = (after.mean - before.mean) / (after.t - before.t)
        residuals[i] = abs(rate - (drift[0] + 4 * drift[1] + drift[2]) / 6)
    return residuals


def mean_residual(traj: Trajectory) -> float:
    spec = traj.spec
    if spec.form == "primal":
        raise ValueError("The primal form carries no mean")
    return max(mean_residuals(traj.records, spec.adopted), default=0.0)


def with_mean_residuals(traj: Trajectory) -> list[DiagnosticsRecord]:
    if traj.spec.form == "primal":
        return list(traj.records)
    residuals = mean_residuals(traj.records, traj.spec.adopted)
    return [dataclasses.replace(r, mean_residual=v) for r, v in zip(traj.records, residuals)]


def ladyzhenskaya_ratio(f: SpectralField) -> float:
    """||f||_L4^2 / (||f||_L2 ||grad f||_L2); bounded on zero-mean planar fields."""
    denominator = norm(f) * norm(f, "Hs", s=1)
    return norm(f, "Lp", p=4) ** 2 / denominator if denominator > 0 else 0.0


def agmon_ratio(f: SpectralField) -> float:
    """||f - <f>||_Linf / (||f - <f>||_L2 ||Laplacian f||_L2)^(1/2)."""
    f = subtract_mean(f)
    denominator = math.sqrt(norm(f) * norm(f, "Hs", s=2))
    return norm(f, "Linf") / denominator if denominator > 0 else 0.0
