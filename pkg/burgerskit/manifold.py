from __future__ import annotations

import dataclasses
import functools
import logging
import math
import typing as t

import numpy as np

from burgerskit.colehopf import DEGENERATE_DISTANCE, prepared_N_P, velocity_from_psi
from burgerskit.models import PositivityLost
from burgerskit.spectral import SpectralField, h1_seminorm, integer_norm2, kappa_squared
from burgerskit.spectrum import check_sgc
from burgerskit.timestep import BlowUp, Integrator
from burgerskit.utils import fit_exponential, spawn_generators

if t.TYPE_CHECKING:
    from collections.abc import Sequence

    from burgerskit.colehopf import PreparedNonlinearity, ProbeSampler
    from burgerskit.spectral import GridSpec, VectorField
    from burgerskit.spectrum import SpectrumTable
    from burgerskit.types import BoolArray, ComplexArray, GraphMethod, Projection

logger = logging.getLogger("burgerskit")

GRAPH_METHODS = ("aim_fixed_point", "lyapunov_perron")
# attraction fits drop samples within this factor of the floor
FIT_FLOOR_FACTOR = 100.0
MIN_FIT_POINTS = 5


class NoConvergence(RuntimeError):
    """The graph iteration did not contract; the gap at this cut is too small."""

    def __init__(self, history: Sequence[float], message: str = "") -> None:
        last = history[-1] if history else math.nan
        super().__init__(
            message
            or f"Graph iteration did not converge after {len(history)} iterations (last residual {last:.3e})"
        )
        self.history = list(history)


@dataclasses.dataclass(frozen=True)
class ProjectionPair:
    """
    Spectral projections P_n (modes with |k|^2 <= norm2_n, constant included)
    and Q_n = I - P_n on one grid.
    """

    grid: GridSpec
    n: int
    lambda_n: float
    lambda_n1: float
    norm2_n: int

    def __post_init__(self) -> None:
        if not self.lambda_n < self.lambda_n1:
            raise ValueError(f"Need lambda_n < lambda_n+1, got {self.lambda_n} and {self.lambda_n1}")
        if 4 * self.norm2_n >= self.grid.N**2:
            raise ValueError(f"Grid N={self.grid.N} does not resolve every mode of P_{self.n}")

    @classmethod
    def from_table(cls, table: SpectrumTable, n: int, grid: GridSpec) -> ProjectionPair:
        if table.d != grid.d or not math.isclose(table.L, grid.L):
            raise ValueError("Spectrum table and grid describe different boxes")
        if not 0 <= n < len(table) - 1:
            raise ValueError(f"Cut index {n} out of range for a table of {len(table)} eigenvalues")
        return cls(grid, n, table.value(n), table.value(n + 1), table[n].norm2)

    @functools.cached_property
    def mask(self) -> BoolArray:
        return integer_norm2(self.grid) <= self.norm2_n

    @property
    def dim(self) -> int:
        return int(np.count_nonzero(self.mask))


def project(u: SpectralField, which: Projection, proj: ProjectionPair) -> SpectralField:
    if u.grid != proj.grid:
        raise ValueError("Field and projection live on different grids")
    if which == "P":
        return SpectralField(u.grid, u.coeffs * proj.mask, u.zero_mean)
    if which == "Q":
        return SpectralField(u.grid, u.coeffs * ~proj.mask, zero_mean=True)
    raise ValueError(f"Unknown projection {which}")


@dataclasses.dataclass
class GraphEvaluation:
    q: SpectralField
    history: list[float]

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def contraction(self) -> float:
        """Geometric mean ratio of successive residuals below 1."""
        tail = [r for r in self.history if 0 < r < 1]
        if len(tail) < 2:
            return 0.0
        return (tail[-1] / tail[0]) ** (1 / (len(tail) - 1))


@dataclasses.dataclass(frozen=True)
class ManifoldGraph:
    """
    Graph q = Phi(p) of the inertial manifold of the prepared Cole-Hopf
    equation over range P_n.

    method: aim_fixed_point iterates q = A^-1 Q N_P(p + q); lyapunov_perron
        iterates whole backward trajectories on [-T_back, 0]
    depth: iteration budget
    T_back: backward horizon, 10 / (lambda_n+1 - 4 C_est) by default
    tol: H1 residual between successive iterates that counts as converged
    """

    proj: ProjectionPair
    prep: PreparedNonlinearity
    method: GraphMethod = "aim_fixed_point"
    depth: int = 200
    T_back: t.Optional[float] = None
    tol: float = 1e-9

    def __post_init__(self) -> None:
        if self.method not in GRAPH_METHODS:
            raise ValueError(f"Unknown graph method {self.method}")
        if self.proj.grid != self.prep.grid:
            raise ValueError("Projection and prepared nonlinearity live on different grids")
        if self.depth < 1 or not self.tol > 0:
            raise ValueError("depth must be positive and tol must be positive")
        lambda_n1 = self.proj.lambda_n1
        if self.T_back is None:
            margin = lambda_n1 - 4 * self.prep.C_est
            object.__setattr__(self, "T_back", 10 / (margin if margin > 0 else lambda_n1))
        if self.method == "lyapunov_perron" and self.horizon < 5 / lambda_n1:
            raise ValueError(f"T_back={self.horizon:g} is shorter than 5 / lambda_n+1")

    @property
    def grid(self) -> GridSpec:
        return self.proj.grid

    @property
    def horizon(self) -> float:
        assert self.T_back is not None
        return self.T_back

    def solve(self, p: SpectralField) -> GraphEvaluation:
        p = project(p, "P", self.proj)
        if self.method == "aim_fixed_point":
            return self._fixed_point(p)
        return self._lyapunov_perron(p)

    def __call__(self, p: SpectralField) -> SpectralField:
        return self.solve(p).q

    def _n_p(self, coeffs: ComplexArray) -> ComplexArray:
        return prepared_N_P(SpectralField(self.grid, coeffs), self.prep).coeffs

    def _fixed_point(self, p: SpectralField) -> GraphEvaluation:
        q_mask = ~self.proj.mask
        kappa2 = kappa_squared(self.grid)
        inverse = np.divide(1.0, kappa2, out=np.zeros_like(kappa2), where=q_mask)
        q = np.zeros_like(p.coeffs)
        history: list[float] = []
        for _ in range(self.depth):
            q_next = inverse * self._n_p(p.coeffs + q)
            residual = h1_seminorm(q_next - q, self.grid)
            history.append(residual)
            q = q_next
            if not math.isfinite(residual):
                break
            if residual <= self.tol:
                logger.debug("Fixed point converged in %s iterations", len(history))
                return GraphEvaluation(SpectralField(self.grid, q, zero_mean=True), history)
        raise NoConvergence(history)

    def _lyapunov_perron(self, p: SpectralField) -> GraphEvaluation:
        grid, T = self.grid, self.horizon
        p_mask, q_mask = self.proj.mask, ~self.proj.mask
        lam = kappa_squared(grid)
        if self.proj.lambda_n * T > 600:
            raise ValueError("Backward horizon overflows the P_n growth factor")
        M = max(64, math.ceil(4 * T * max(self.proj.lambda_n, 1.0)))
        h = T / M
        s = np.linspace(-T, 0.0, M + 1)

        # forward weights for the damped Q modes, lam > 0 there
        safe = np.where(q_mask, lam, 1.0)
        decay = np.exp(-safe * h)
        phi1 = -np.expm1(-safe * h) / safe
        phi2 = (h - phi1) / (safe * h)
        # backward weights for the P modes, with the lam -> 0 limits
        lam_p = np.where(p_mask, lam, 0.0)
        small = lam_p * h < 1e-8
        growth = np.exp(lam_p * h)
        lam_p = np.where(small, 1.0, lam_p)
        psi1 = np.where(small, h, np.expm1(lam_p * h) / lam_p)
        psi2 = np.where(small, h / 2, (h * growth - psi1) / (lam_p * h))

        u = np.exp(np.multiply.outer(-s, np.where(p_mask, lam, 0.0))) * (p.coeffs * p_mask)
        q_end = np.zeros_like(p.coeffs)
        history: list[float] = []
        for _ in range(self.depth):
            forcing = np.stack([self._n_p(u[m]) for m in range(M + 1)])
            q = np.zeros_like(u)
            for m in range(M):
                step = forcing[m] * phi1 + (forcing[m + 1] - forcing[m]) * phi2
                q[m + 1] = decay * q[m] + q_mask * step
            backward = np.zeros_like(u)
            backward[M] = p.coeffs * p_mask
            for m in range(M - 1, -1, -1):
                step = forcing[m] * psi1 + (forcing[m + 1] - forcing[m]) * psi2
                backward[m] = growth * backward[m + 1] - p_mask * step
            u = backward + q
            residual = h1_seminorm(q[M] - q_end, grid)
            history.append(residual)
            q_end = q[M]
            if not math.isfinite(residual):
                break
            if residual <= self.tol:
                logger.debug("Lyapunov-Perron iteration converged in %s sweeps (M=%s)", len(history), M)
                return GraphEvaluation(SpectralField(grid, q_end * q_mask, zero_mean=True), history)
        raise NoConvergence(history)


def evaluate_graph(p: SpectralField, graph: ManifoldGraph) -> SpectralField:
    return graph(p)


def inertial_form_rhs(p: SpectralField, graph: ManifoldGraph) -> SpectralField:
    """dp/dt = -A p + P N_P(p + Phi(p)) on range P_n."""
    p = project(p, "P", graph.proj)
    lifted = p + graph(p)
    forcing = project(prepared_N_P(lifted, graph.prep), "P", graph.proj)
    return SpectralField(p.grid, -kappa_squared(p.grid) * p.coeffs + forcing.coeffs)


def graph_distance(u: SpectralField, graph: ManifoldGraph) -> float:
    """||Q u - Phi(P u)||_H1."""
    q = project(u, "Q", graph.proj)
    return h1_seminorm(q.coeffs - graph(project(u, "P", graph.proj)).coeffs, u.grid)


@dataclasses.dataclass
class PreparedTrajectory:
    times: list[float]
    states: list[SpectralField]


def _evolve(
    y0: ComplexArray,
    nonlinear: t.Callable[[ComplexArray], ComplexArray],
    grid: GridSpec,
    dt: float,
    t_end: float,
    every: int,
    threshold: float,
) -> PreparedTrajectory:
    integrator = Integrator(-kappa_squared(grid), nonlinear, "ifrk4", dt)
    n_steps = int(round(t_end / dt))
    y = y0
    trajectory = PreparedTrajectory([0.0], [SpectralField(grid, y0.copy())])
    for n in range(1, n_steps + 1):
        y = integrator.step(y)
        size = math.sqrt(h1_seminorm(y, grid) ** 2 + grid.volume * float(np.sum(np.abs(y) ** 2)))
        if not math.isfinite(size) or size > threshold:
            raise BlowUp(n * dt, size)
        if n % every == 0 or n == n_steps:
            trajectory.times.append(n * dt)
            trajectory.states.append(SpectralField(grid, y.copy()))
    return trajectory


def integrate_prepared(
    psi0: SpectralField,
    prep: PreparedNonlinearity,
    dt: float,
    t_end: float,
    every: int = 1,
    threshold: float = 1e8,
) -> PreparedTrajectory:
    """Evolves psi_t = Laplacian psi + N_P(psi) with integrating-factor RK4."""

    def nonlinear(y: ComplexArray) -> ComplexArray:
        return prepared_N_P(SpectralField(prep.grid, y), prep).coeffs

    return _evolve(psi0.coeffs.copy(), nonlinear, prep.grid, dt, t_end, every, threshold)


def integrate_inertial_form(
    p0: SpectralField,
    graph: ManifoldGraph,
    dt: float,
    t_end: float,
    every: int = 1,
    threshold: float = 1e8,
) -> PreparedTrajectory:
    """Evolves the inertial form; stored states are the P_n components."""
    mask = graph.proj.mask

    def nonlinear(y: ComplexArray) -> ComplexArray:
        p = SpectralField(graph.grid, y)
        return prepared_N_P(p + graph(p), graph.prep).coeffs * mask

    p0 = project(p0, "P", graph.proj)
    return _evolve(p0.coeffs.copy(), nonlinear, graph.grid, dt, t_end, every, threshold)


@dataclasses.dataclass(frozen=True)
class AttractionFit:
    C_U: float
    mu: float
    r_squared: float
    passed: bool
    n_points: int
    floor_hit: bool
    expected_mu: float


def attraction_cadence(graph: ManifoldGraph, dt: float, t_end: float) -> int:
    """
    Steps between stored states of an attraction run: at least four samples per
    e-folding at lambda_n+1 and at least 4 MIN_FIT_POINTS samples over the run.
    """
    n_steps = max(1, int(round(t_end / dt)))
    every = min(int(1 / (4 * graph.proj.lambda_n1 * dt)), n_steps // (4 * MIN_FIT_POINTS))
    return max(1, every)


def attraction_kmax(graph: ManifoldGraph) -> float:
    """Largest |k| of attraction initial data: two shells above the cut, N / 4 at least."""
    N = graph.grid.N
    return min(N / 2 - 1, max(N / 4, math.sqrt(graph.proj.norm2_n) + 2))


def attraction_burn_in(
graph: ManifoldGraph, t_end: float) -> float:
    """Time skipped before fitting, while modes above lambda_n+1 still dominate."""
    return min(2 / graph.proj.lambda_n1, t_end / 4)


def attraction_fit(
    traj: PreparedTrajectory,
    graph: ManifoldGraph,
    burn_in: float = 0.0,
    floor: t.Optional[float] = None,
    min_points: int = MIN_FIT_POINTS,
) -> AttractionFit:
    """
    Fits graph_distance(t) ~ C_U exp(-mu t) after burn_in.

    Sampling stops at the first distance within FIT_FLOOR_FACTOR of the floor.
    With fewer than min_points usable samples the fit is NaN and fails.
    """
    floor = 10 * graph.tol if floor is None else floor
    expected_mu = graph.proj.lambda_n1 - 2 * graph.prep.C_est
    times, distances = [], []
    floor_hit = False
    for time, state in zip(traj.times, traj.states):
        if time < burn_in:
            continue
        distance = graph_distance(state, graph)
        if distance <= FIT_FLOOR_FACTOR * floor:
            floor_hit = True
            break
        times.append(time)
        distances.append(distance)
    if len(times) < max(min_points, 2):
        logger.warning(
            "Only %s samples above %.3g after t=%g, attraction fit skipped",
            len(times),
            FIT_FLOOR_FACTOR * floor,
            burn_in,
        )
        return AttractionFit(
            C_U=math.nan,
            mu=math.nan,
            r_squared=math.nan,
            passed=False,
            n_points=len(times),
            floor_hit=floor_hit,
            expected_mu=expected_mu,
        )
    fit = fit_exponential(times, distances)
    mu = -fit.rate
    return AttractionFit(
        C_U=math.exp(fit.intercept),
        mu=mu,
        r_squared=fit.r_squared,
        passed=mu > 0 and fit.r_squared >= 0.95,
        n_points=len(times),
        floor_hit=floor_hit,
        expected_mu=expected_mu,
    )


@dataclasses.dataclass(frozen=True)
class SqueezingReport:
    passed: bool
    in_cone_initially: bool
    cone_violations: int
    cone_entry_time: t.Optional[float]
    q_decay_rate: t.Optional[float]
    max_ratio: float

    def to_dict(self) -> dict[str, t.Any]:
        return dataclasses.asdict(self)


def squeezing_test(
    u0: SpectralField,
    v0: SpectralField,
    graph: ManifoldGraph,
    t_end: float,
    dt: float = 1e-3,
    every: int = 10,
) -> SqueezingReport:
    """
    Cone invariance of the difference of two prepared solutions: once
    ||Q w|| <= ||P w|| it stays so; before that ||Q w|| must decay.
    """
    u = integrate_prepared(u0, graph.prep, dt, t_end, every)
    v = integrate_prepared(v0, graph.prep, dt, t_end, every)
    p_part, q_part = [], []
    for a, b in zip(u.states, v.states):
        w = a - b
        p_part.append(h1_seminorm(project(w, "P", graph.proj).coeffs, w.grid))
        q_part.append(h1_seminorm(project(w, "Q", graph.proj).coeffs, w.grid))
    inside = [qv <= pv * (1 + 1e-9) + 1e-14 for pv, qv in zip(p_part, q_part)]
    ratios = [qv / pv for pv, qv in zip(p_part, q_part) if pv > 0]
    max_ratio = max(ratios, default=0.0)
    if inside[0]:
        violations = inside.count(False)
        return SqueezingReport(violations == 0, True, violations, 0.0, None, max_ratio)

    entry = next((i for i, ok in enumerate(inside) if ok), None)
    end = len(inside) if entry is None else entry
    decaying = [(u.times[i], q_part[i]) for i in range(end) if q_part[i] > 0]
    rate = None
    if len(decaying) >= 2:
        rate = -fit_exponential(*zip(*decaying)).rate
    violations = 0 if entry is None else inside[entry:].count(False)
    passed = rate is not None and rate > 0 and violations == 0
    return SqueezingReport(
        passed=passed,
        in_cone_initially=False,
        cone_violations=violations,
        cone_entry_time=None if entry is None else u.times[entry],
        q_decay_rate=rate,
        max_ratio=max_ratio,
    )


@dataclasses.dataclass
class LiftResult:
    states: list[VectorField]
    skipped: int


def lift_to_U(graph: ManifoldGraph, p_samples: Sequence[SpectralField]) -> LiftResult:
    """Velocity fields U = -2 grad(psi) / psi of the graph points psi = p + Phi(p)."""
    states = []
    skipped = 0
    for p in p_samples:
        p = project(p, "P", graph.proj)
        try:
            states.append(velocity_from_psi(p + graph(p)))
        except PositivityLost as exc:
            logger.warning("Skipping graph point outside the positive cone: %s", exc)
            skipped += 1
    return LiftResult(states, skipped)


def auto_select_n(table: SpectrumTable, C_est: float, safety: float = 1.5) -> t.Optional[int]:
    """Smallest cut with gap >= 4 safety C_est, the prepared-equation gap condition."""
    return check_sgc(table, safety * C_est, 1.0, 1.0, strict=False)


@dataclasses.dataclass(frozen=True)
class GraphProbeReport:
    l_est: float
    n_pairs: int
    skipped: int


def graph_lipschitz_probe(
    graph: ManifoldGraph, sampler: ProbeSampler, n_pairs: int, seed: int = 0
) -> GraphProbeReport:
    """max ||Phi(p1) - Phi(p2)||_H1 / ||p1 - p2||_H1 over sampled pairs in range P_n."""
    l_est = 0.0
    skipped = 0
    for rng in spawn_generators(seed, n_pairs):
        p1 = project(sampler.draw(rng, "in_ball"), "P", graph.proj)
        p2 = project(sampler.perturb(rng, p1), "P", graph.proj)
        distance = h1_seminorm((p1 - p2).coeffs, p1.grid)
        if distance < DEGENERATE_DISTANCE:
            skipped += 1
            continue
        l_est = max(l_est, h1_seminorm((graph(p1) - graph(p2)).coeffs, p1.grid) / distance)
    logger.info("Graph Lipschitz probe over %s pairs: l_est=%.6g", n_pairs, l_est)
    return GraphProbeReport(l_est, n_pairs, skipped)


@dataclasses.dataclass(frozen=True)
class CompletenessReport:
    rate: t.Optional[float]
    r_squared: t.Optional[float]
    times: list[float]
    distances: list[float]


def completeness_probe(
    u0: SpectralField,
    graph: ManifoldGraph,
    t1: float,
    t_end: float,
    dt: float = 1e-3,
    every: int = 10,
) -> CompletenessReport:
    """
    Starts the inertial form at P u(t1) lifted by Phi and fits the decay of its
    H1 distance to the prepared solution u over [t1, t_end].
    """
    if not 0 <= t1 < t_end:
        raise ValueError(f"Need 0 <= t1 < t_end, got t1={t1} and t_end={t_end}")
    full = integrate_prepared(u0, graph.prep, dt, t_end, every)
    start = next(i for i, time in enumerate(full.times) if time >= t1 - 1e-12)
    t_start = full.times[start]
    reduced = integrate_inertial_form(full.states[start], graph, dt, t_end - t_start, every)
    times, distances = [], []
    for time, p in zip(reduced.times, reduced.states):
        index = start + len(times)
        if index >= len(full.states):
            break
        lifted = p + graph(p)
        times.append(t_start + time)
        distances.append(h1_seminorm((full.states[index] - lifted).coeffs, p.grid))
    fit_points = [(tt, dd) for tt, dd in zip(times, distances) if dd > 10 * graph.tol]
    rate = r_squared = None
    if len(fit_points) >= 2:
        fit = fit_exponential(*zip(*fit_points))
        rate, r_squared = -fit.rate, fit.r_squared
    return CompletenessReport(rate, r_squared, times, distances)
