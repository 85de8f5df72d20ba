from __future__ import annotations

import dataclasses
import logging
import math
import typing as t

import numpy as np

from burgerskit.diagnostics import make_record, max_speed

if t.TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from burgerskit.diagnostics import DiagnosticsRecord
    from burgerskit.models import ModelSpec, State
    from burgerskit.types import ComplexArray, FloatArray, Scheme

logger = logging.getLogger("burgerskit")

SCHEMES = ("ifrk4", "imex_cnab2")


class BlowUp(RuntimeError):
    """The monitored norm crossed the threshold or stopped being finite."""

    def __init__(self, t: float, norm: float) -> None:
        super().__init__(f"Loss of regularity at t={t:.6g}: monitored norm is {norm:.6g}")
        self.t = t
        self.norm = norm


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """
    Time stepping parameters.

    scheme: ifrk4 (integrating-factor RK4) or imex_cnab2 (Crank-Nicolson / Adams-Bashforth 2)
    dt: time step
    t_end: final time
    snapshot_every: steps between stored states, 0 stores only the first and last
    diag_every: steps between diagnostics records, 0 disables records
    blowup_threshold: monitored norm that counts as loss of regularity
    p: exponent of the positive-part functional in the records
    """

    scheme: Scheme = "ifrk4"
    dt: float = 1e-3
    t_end: float = 1.0
    snapshot_every: int = 0
    diag_every: int = 10
    blowup_threshold: float = 1e8
    p: int = 4

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"Unknown scheme {self.scheme}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.snapshot_every < 0 or self.diag_every < 0:
            raise ValueError("Cadences must be non-negative")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if self.p < 3:
            raise ValueError(f"p must be at least 3, got {self.p}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


class Integrator:
    """
    Advances y' = linear * y + nonlinear(y) for a diagonal linear part.

    The CNAB2 scheme keeps the previous nonlinear term between calls and
    starts with a first order Adams-Bashforth step.
    """

    def __init__(
        self,
        linear: FloatArray,
        nonlinear: Callable[[ComplexArray], ComplexArray],
        scheme: Scheme = "ifrk4",
        dt: float = 1e-3,
    ) -> None:
        if scheme not in SCHEMES:
            raise ValueError(f"Unknown scheme {scheme}")
        self.linear = linear
        self.nonlinear = nonlinear
        self.scheme = scheme
        self.dt = dt
        hl = dt * np.asarray(linear)
        if scheme == "ifrk4":
            self._full = np.exp(hl)
            self._half = np.exp(hl / 2)
        else:
            self._explicit = 1 + hl / 2
            self._implicit = 1 - hl / 2
        self._previous: ComplexArray | None = None

    def reset(self) -> None:
        self._previous = None

    def step(self, y: ComplexArray) -> ComplexArray:
        if self.scheme == "ifrk4":
            return self._ifrk4(y)
        return self._cnab2(y)

    def _ifrk4(self, y: ComplexArray) -> ComplexArray:
        h, e, e2, n = self.dt, self._full, self._half, self.nonlinear
        k1 = n(y)
        k2 = n(e2 * (y + h / 2 * k1))
        k3 = n(e2 * y + h / 2 * k2)
        k4 = n(e * y + h * e2 * k3)
        return e * y + h / 6 * (e * k1 + 2 * e2 * (k2 + k3) + k4)

    def _cnab2(self, y: ComplexArray) -> ComplexArray:
        current = self.nonlinear(y)
        previous = current if self._previous is None else self._previous
        self._previous = current
        return (self._explicit * y + self.dt * (1.5 * current - 0.5 * previous)) / self._implicit


class Sink(t.Protocol):
    def snapshot(self, t: float, state: State) -> None:
        ...

    def record(self, record: DiagnosticsRecord) -> None:
        ...


@dataclasses.dataclass
class Trajectory:
    """Stored states and diagnostics of one run."""

    spec: ModelSpec
    cfg: SolverConfig
    times: list[float] = dataclasses.field(default_factory=list)
    states: list[State] = dataclasses.field(default_factory=list)
    records: list[DiagnosticsRecord] = dataclasses.field(default_factory=list)

    @property
    def final(self) -> State:
        return self.states[-1]

    @property
    def t_final(self) -> float:
        return self.times[-1]

    def record_times(self) -> list[float]:
        return [r.t for r in self.records]

    def series(self, name: str) -> list[float]:
        return [r.value(name) for r in self.records]


def check_regularity(spec: ModelSpec, y: ComplexArray, t: float, threshold: float) -> float:
    norm = spec.monitor(y)
    if not math.isfinite(norm) or norm > threshold:
        raise BlowUp(t, norm)
    return norm


def step(state: State, spec: ModelSpec, cfg: SolverConfig) -> State:
    """One step of size cfg.dt; a CNAB2 step from a fresh state is first order."""
    integrator = Integrator(spec.linear_operator, spec.nonlinear, cfg.scheme, cfg.dt)
    y = integrator.step(spec.pack(state))
    check_regularity(spec, y, cfg.dt, cfg.blowup_threshold)
    return spec.unpack(y)


def integrate(
    state0: State,
    spec: ModelSpec,
    cfg: SolverConfig,
    sinks: Sequence[Sink] = (),
) -> Trajectory:
    """
    Evolves state0 to cfg.t_end.

    Raises BlowUp when the monitored norm leaves the threshold and
    PositivityLost when a Cole-Hopf state touches zero.
    """
    integrator = Integrator(spec.linear_operator, spec.nonlinear, cfg.scheme, cfg.dt)
    trajectory = Trajectory(spec, cfg)
    y = spec.pack(state0)
    check_regularity(spec, y, 0.0, cfg.blowup_threshold)
    n_steps = cfg.n_steps
    cfl_warned = False

    def check_cfl(t_n: float, state: State) -> None:
        nonlocal cfl_warned
        speed = max_speed(state, spec)
        if speed > 0 and cfg.dt * speed > 0.5 * spec.grid.dx:
            logger.warning(
                "CFL number %.2f exceeds 0.5 at t=%.4g (dt=%g, max|U|=%.3g)",
                cfg.dt * speed / spec.grid.dx,
                t_n,
                cfg.dt,
                speed,
            )
            cfl_warned = True

    def emit(n: int, state: State) -> None:
        t_n = n * cfg.dt
        if n == 0 or n == n_steps or (cfg.snapshot_every and n % cfg.snapshot_every == 0):
            trajectory.times.append(t_n)
            trajectory.states.append(state)
            for sink in sinks:
                sink.snapshot(t_n, state)
        if cfg.diag_every and n % cfg.diag_every == 0:
            record = make_record(t_n, state, spec, cfg.p)
            trajectory.records.append(record)
            for sink in sinks:
                sink.record(record)

    check_cfl(0.0, state0)
    emit(0, state0)
    for n in range(1, n_steps + 1):
        y = integrator.step(y)
        norm = check_regularity(spec, y, n * cfg.dt, cfg.blowup_threshold)
        if n % 1000 == 0:
            logger.debug("step %s/%s t=%.4g monitor=%.6g", n, n_steps, n * cfg.dt, norm)
        wants_state = (
            n == n_steps
            or (cfg.snapshot_every and n % cfg.snapshot_every == 0)
            or (cfg.diag_every and n % cfg.diag_every == 0)
        )
        # every step is checked until the first warning
        if wants_state or not cfl_warned:
            state = spec.unpack(y)
            if not cfl_warned:
                check_cfl(n * cfg.dt, state)
            if wants_state:
                emit(n, state)

    logger.info(
        "Integrated %s form over [0, %g] with %s (%s steps)", spec.form, cfg.t_end, cfg.scheme, n_steps
    )
    return trajectory
