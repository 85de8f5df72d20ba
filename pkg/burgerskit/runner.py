from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import typing as t

import numpy as np

from burgerskit.colehopf import (
    PreparedNonlinearity,
    ProbeSampler,
    TransformRadii,
    estimate_radii,
    lipschitz_probe,
    psi_from_phi,
)
from burgerskit.config import ConfigError
from burgerskit.diagnostics import (
    COLUMNS,
    AbsorbingBallEstimate,
    LinearRegimeExceeded,
    absorbing_entry,
    alpha_bound_ratio,
    check_alpha_inequality,
    growth_rate_fit,
    mean_residual,
)
from burgerskit.ensemble import Member, Status, run_ensemble
from burgerskit.io import SnapshotSink, read_json, write_csv, write_json, write_schema, write_trajectory_csv
from burgerskit.manifold import (
    GRAPH_METHODS,
    ManifoldGraph,
    NoConvergence,
    ProjectionPair,
    attraction_burn_in,
    attraction_cadence,
    attraction_fit,
    attraction_kmax,
    auto_select_n,
    completeness_probe,
    graph_lipschitz_probe,
    integrate_prepared,
    lift_to_U,
    project,
    squeezing_test,
)
from burgerskit.models import IntegratedState, ModelSpec, linear_dispersion, rhs_norm, state_from_potential, velocity
from burgerskit.spectral import SpectralField, h1_seminorm, norm
from burgerskit.spectrum import enumerate_eigenvalues, gap_growth, gaps, integer_gaps
from burgerskit.timestep import integrate
from burgerskit.utils import spawn_generators

if t.TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from burgerskit.config import RunConfig
    from burgerskit.timestep import Sink, SolverConfig, Trajectory
    from burgerskit.types import ColumnDoc, Form, GraphMethod, Subcommand

logger = logging.getLogger("burgerskit")

SUBCOMMANDS: tuple[Subcommand, ...] = (
    "simulate",
    "equivalence",
    "dispersion",
    "gaps",
    "absorb",
    "prepare",
    "manifold",
    "squeeze",
)

EQUIVALENCE_COLUMNS: tuple[ColumnDoc, ...] = (
    {"name": "t", "unit": "time", "description": "time of the compared states"},
    {"name": "l2_U", "unit": "L2", "description": "||U||_L2 of the primal run"},
    {
        "name": "dev_integrated",
        "unit": "ratio",
        "description": "||U_primal - grad phi|| / ||U_primal|| against the integrated form",
    },
    {
        "name": "dev_colehopf",
        "unit": "ratio",
        "description": "||U_primal - U(psi)|| / ||U_primal|| against the Cole-Hopf form, nan for unbounded symbols",
    },
)
DISPERSION_COLUMNS: tuple[ColumnDoc, ...] = (
    {"name": "k", "unit": "lattice", "description": "wavenumber along the first axis"},
    {"name": "kappa", "unit": "1/length", "description": "2 pi k / L"},
    {"name": "omega_fit", "unit": "1/time", "description": "growth rate fitted to the evolved mode"},
    {"name": "omega_linear", "unit": "1/time", "description": "-kappa^2 + m(k)"},
    {"name": "rel_error", "unit": "ratio", "description": "|omega_fit - omega_linear| / max(1, |omega_linear|)"},
    {"name": "fit_residual", "unit": "log", "description": "rms residual of the log-linear fit"},
)
GAPS_COLUMNS: tuple[ColumnDoc, ...] = (
    {"name": "n", "unit": "index", "description": "index of the distinct eigenvalue"},
    {"name": "norm2", "unit": "lattice", "description": "|k|^2 of the eigenvalue"},
    {"name": "lambda", "unit": "1/length^2", "description": "(2 pi / L)^2 |k|^2"},
    {"name": "multiplicity", "unit": "count", "description": "lattice points with this |k|^2"},
    {"name": "gap", "unit": "1/length^2", "description": "lambda_n+1 - lambda_n, nan for the last entry"},
)
GAP_GROWTH_COLUMNS: tuple[ColumnDoc, ...] = (
    {"name": "n", "unit": "index", "description": "index where a new largest gap starts"},
    {"name": "log_n", "unit": "log", "description": "log n, 0 for n = 0"},
    {"name": "gap", "unit": "1/length^2", "description": "the record gap"},
)
ATTRACTION_COLUMNS: tuple[ColumnDoc, ...] = (
    {"name": "member", "unit": "index", "description": "seeded initial condition"},
    {"name": "C_U", "unit": "H1", "description": "prefactor of the fitted decay"},
    {"name": "mu", "unit": "1/time", "description": "fitted decay rate of the graph distance"},
    {"name": "expected_mu", "unit": "1/time", "description": "lambda_n+1 - 2 C_est"},
    {"name": "r_squared", "unit": "ratio", "description": "coefficient of determination of the fit"},
    {"name": "n_points", "unit": "count", "description": "samples after burn-in and above 100 times the tolerance floor"},
    {"name": "passed", "unit": "flag", "description": "1 when n_points >= 5, mu > 0 and r_squared >= 0.95"},
)

GAP_THRESHOLDS = (1, 2, 4, 8, 16, 32, 64)
DISPERSION_WAVENUMBERS = (1, 2, 3, 4)
# coefficient size of the seeded mode in the dispersion runs
LINEAR_SEED_AMPLITUDE = 1e-10


@dataclasses.dataclass(frozen=True)
class RunOptions:
    """
    Subcommand options that are not part of the physical configuration.

    workers: ensemble concurrency
    members: ensemble size per amplitude scale (absorb, prepare, manifold)
    scales: initial condition multipliers for absorb
    cutoff: largest |k|^2 enumerated by gaps, N^2 / 4 by default
    n: cut index for manifold and squeeze, chosen from the spectral gap when None
    method: graph construction
    depth: graph iteration budget
    tol: graph residual tolerance
    n_pairs: probe pairs for prepare and squeeze
    n_samples: graph points evaluated by manifold
    prepared: directory of an earlier prepare run to reuse
    """

    workers: int = 1
    members: int = 5
    scales: tuple[float, ...] = (1.0, 4.0, 16.0)
    cutoff: t.Optional[int] = None
    n: t.Optional[int] = None
    method: GraphMethod = "aim_fixed_point"
    depth: int = 200
    tol: float = 1e-9
    n_pairs: int = 60
    n_samples: int = 8
    prepared: t.Optional[str] = None

    def __post_init__(self) -> None:
        if self.workers < 1 or self.members < 1 or self.n_pairs < 1 or self.n_samples < 1:
            raise ConfigError("workers, members, n_pairs and n_samples must be positive")
        if not self.scales or any(not s > 0 for s in self.scales):
            raise ConfigError(f"Scales must be positive, got {self.scales}")
        if self.method not in GRAPH_METHODS:
            raise ConfigError(f"Unknown graph method {self.method}")
        if self.depth < 1 or not self.tol > 0:
            raise ConfigError("depth and tol must be positive")


def _formats(cfg: RunConfig) -> set[str]:
    return {f.strip() for f in cfg.output.formats.split(",") if f.strip()}


def run_id(cfg: RunConfig, subcommand: str, options: RunOptions) -> str:
    """Short hash of everything a run depends on, so only identical runs share a directory."""
    from burgerskit import __version__

    payload = {
        "subcommand": subcommand,
        "version": __version__,
        "config": cfg.to_text(),
        "options": dataclasses.asdict(options),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def output_directory(cfg: RunConfig, subcommand: str, options: RunOptions) -> str:
    directory = os.path.join(cfg.output_root(), subcommand, run_id(cfg, subcommand, options))
    os.makedirs(directory, exist_ok=True)
    return directory


def write_manifest(directory: str, cfg: RunConfig, subcommand: str, options: RunOptions) -> None:
    from burgerskit import __version__

    write_json(
        os.path.join(directory, "manifest.json"),
        {
            "subcommand": subcommand,
            "version": __version__,
            "config": cfg.to_text(),
            "options": dataclasses.asdict(options),
        },
    )


def _with_states(cfg: RunConfig) -> SolverConfig:
    """Solver config that also stores a state at every diagnostics record."""
    solver = cfg.solver_config()
    every = solver.snapshot_every or solver.diag_every or 10
    return dataclasses.replace(solver, snapshot_every=every)


def _raise_failures(members: Sequence[Member]) -> None:
    for member in members:
        if member.status == Status.FAILED:
            assert member.exception is not None
            raise member.exception


def _log_member(member: Member) -> None:
    logger.info("Member finished %s", member.to_dict())


def _run_members(function: Callable[..., t.Any], members: list[Member], options: RunOptions) -> list[Member]:
    done = run_ensemble(function, members, options.workers, after_process=_log_member)
    _raise_failures(done)
    return done


def simulate(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    spec = cfg.model_spec()
    solver = cfg.solver_config()
    sinks: list[Sink] = []
    if "json" in _formats(cfg):
        sinks.append(SnapshotSink(os.path.join(directory, "snapshots"), spec))
    trajectory = integrate(cfg.initial_state(), spec, solver, sinks)
    if "csv" in _formats(cfg) and solver.n_steps > 0:
        write_trajectory_csv(os.path.join(directory, "trajectory.csv"), trajectory)

    summary: dict[str, t.Any] = {
        "t_final": trajectory.t_final,
        "n_steps": solver.n_steps,
        "rhs_norm": rhs_norm(trajectory.final, spec),
        "alpha_bound_ratio": alpha_bound_ratio(trajectory, solver.p),
    }
    if trajectory.records:
        summary["final"] = trajectory.records[-1].to_row()
    if spec.form != "primal":
        summary["mean_residual"] = mean_residual(trajectory)
    try:
        report = check_alpha_inequality(trajectory, solver.p)
        summary["alpha_inequality"] = dataclasses.asdict(report)
    except ValueError as exc:
        logger.info("Skipping the alpha_p inequality check: %s", exc)
    write_json(os.path.join(directory, "summary.json"), summary)
    return summary


def _relative(a: t.Any, b: t.Any, size: float) -> float:
    return norm(a - b) / size if size > 0 else norm(a - b)


def equivalence(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    """Runs the primal, integrated and Cole-Hopf forms from one potential and compares U."""
    plain = cfg.model.form in ("integrated_plain", "colehopf_plain")
    forms: list[Form] = ["primal", "integrated_plain" if plain else "integrated_adopted"]
    if cfg.symbol().bounded:
        forms.append("colehopf_plain" if plain else "colehopf")
    solver = _with_states(cfg)
    phi, mean = cfg.initial_potential()
    runs = {}
    for form in forms:
        spec = cfg.model_spec(form)
        runs[form] = integrate(state_from_potential(phi, mean, spec), spec, solver)

    primal = runs["primal"]
    rows = []
    for i, (time, U) in enumerate(zip(primal.times, primal.states)):
        size = norm(U)
        row = {"t": time, "l2_U": size, "dev_integrated": math.nan, "dev_colehopf": math.nan}
        for form, trajectory in runs.items():
            if form == "primal":
                continue
            other = velocity(trajectory.states[i], trajectory.spec)
            key = "dev_colehopf" if trajectory.spec.is_colehopf else "dev_integrated"
            row[key] = _relative(U, other, size)
        rows.append(row)
    write_csv(os.path.join(directory, "equivalence.csv"), [c["name"] for c in EQUIVALENCE_COLUMNS], rows)

    summary = {
        "forms": forms,
        "max_dev_integrated": max(r["dev_integrated"] for r in rows),
        "max_dev_colehopf": max((r["dev_colehopf"] for r in rows), default=math.nan),
    }
    write_json(os.path.join(directory, "equivalence.json"), summary)
    return summary


def dispersion(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    """Fits the growth rate of single small modes of the unforced primal form."""
    grid = cfg.grid()
    symbol = cfg.symbol()
    spec = ModelSpec("primal", symbol, grid)
    solver = _with_states(cfg)
    rows = []
    for k in DISPERSION_WAVENUMBERS:
        if k >= grid.N // 2:
            continue
        vector = (k,) + (0,) * (grid.d - 1)
        kappa = grid.kappa_scale * k
        phi = SpectralField.from_modes(grid, {vector: 2 * LINEAR_SEED_AMPLITUDE / kappa}, zero_mean=True)
        trajectory = integrate(state_from_potential(phi, 0.0, spec), spec, solver)
        omega_linear = linear_dispersion(symbol, vector, grid.L)
        try:
            fit = growth_rate_fit(trajectory, vector)
            omega, residual = fit.omega, fit.residual
        except LinearRegimeExceeded as exc:
            logger.warning("Dropping k=%s from the dispersion table: %s", k, exc)
            omega = residual = math.nan
        rows.append(
            {
                "k": k,
                "kappa": kappa,
                "omega_fit": omega,
                "omega_linear": omega_linear,
                "rel_error": abs(omega - omega_linear) / max(1.0, abs(omega_linear)),
                "fit_residual": residual,
            }
        )
    write_csv(os.path.join(directory, "dispersion.csv"), [c["name"] for c in DISPERSION_COLUMNS], rows)
    summary = {"max_rel_error": max((r["rel_error"] for r in rows), default=math.nan), "n_modes": len(rows)}
    write_json(os.path.join(directory, "dispersion.json"), summary)
    return summary


def spectral_gaps(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    grid = cfg.grid()
    cutoff = options.cutoff or grid.N**2 // 4
    table = enumerate_eigenvalues(grid.d, grid.L, cutoff)
    gap_values = dict(gaps(table))
    rows = [
        {
            "n": n,
            "norm2": entry.norm2,
            "lambda": entry.value,
            "multiplicity": entry.multiplicity,
            "gap": gap_values.get(n, math.nan),
        }
        for n, entry in enumerate(table.entries)
    ]
    write_csv(os.path.join(directory, "gaps.csv"), [c["name"] for c in GAPS_COLUMNS], rows)
    growth = [{"n": n, "log_n": log_n, "gap": gap} for n, log_n, gap in gap_growth(table)]
    write_csv(os.path.join(directory, "gap_growth.csv"), [c["name"] for c in GAP_GROWTH_COLUMNS], growth)

    integer = integer_gaps(table)
    first_n_for = {
        str(g): next((n for n, gap in integer if gap >= g), None) for g in GAP_THRESHOLDS
    }
    summary = {
        "cutoff": cutoff,
        "n_eigenvalues": len(table),
        "max_gap": max(gap_values.values(), default=0.0),
        "first_n_for": first_n_for,
    }
    write_json(os.path.join(directory, "gaps.json"), summary)
    return summary


def simulate_member(
    cfg: RunConfig,
    seed: int,
    scale: float = 1.0,
    form: t.Optional[Form] = None,
    directory: t.Optional[str] = None,
) -> Trajectory:
    """One ensemble run: the seeded initial potential times scale."""
    spec = cfg.model_spec(form)
    phi, mean = cfg.initial_potential(seed)
    solver = _with_states(cfg)
    trajectory = integrate(state_from_potential(phi * scale, mean, spec), spec, solver)
    if directory is not None and "csv" in _formats(cfg):
        os.makedirs(directory, exist_ok=True)
        write_trajectory_csv(os.path.join(directory, "trajectory.csv"), trajectory)
    return trajectory


def absorb(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    """Runs seeded ensembles at growing initial amplitudes and estimates the absorbing ball."""
    members = []
    for scale in options.scales:
        for i in range(options.members):
            key = f"s{scale:g}_m{i:03d}"
            members.append(
                Member(
                    key,
                    {
                        "cfg": cfg,
                        "seed": cfg.ic.seed + i,
                        "scale": scale,
                        "directory": os.path.join(directory, "members", key),
                    },
                )
            )
    done = _run_members(simulate_member, members, options)

    estimates: dict[str, AbsorbingBallEstimate] = {}
    for scale in options.scales:
        group = {m.key: m.result for m in done if m.kwargs["scale"] == scale}
        estimates[f"{scale:g}"] = absorbing_entry(group)
    overall = absorbing_entry({m.key: m.result for m in done})
    radii = [e.radius for e in estimates.values()]
    entries = [e.entry_time for e in estimates.values()]
    summary = {
        "overall": overall.to_dict(),
        "scales": {key: e.to_dict() for key, e in estimates.items()},
        "radius_spread": (max(radii) - min(radii)) / max(radii) if max(radii) > 0 else 0.0,
        "entry_times_nondecreasing": all(a <= b for a, b in zip(entries, entries[1:])),
        "members": [{"key": m.key, "status": m.status.value} for m in done],
    }
    write_json(os.path.join(directory, "absorb.json"), summary)
    return summary


def _colehopf_form(cfg: RunConfig) -> Form:
    return "colehopf_plain" if cfg.model.form in ("integrated_plain", "colehopf_plain") else "colehopf"


def _colehopf_spec(cfg: RunConfig) -> ModelSpec:
    if not cfg.symbol().bounded:
        raise ConfigError(f"The prepared equation needs a bounded symbol, got {cfg.model.symbol}")
    return cfg.model_spec(_colehopf_form(cfg))


def prepare(cfg: RunConfig, directory: str, options: RunOptions) -> tuple[PreparedNonlinearity, ProbeSampler]:
    """
    Estimates the transform radii from the second half of an integrated-form
    ensemble, builds the prepared nonlinearity and probes its Lipschitz constant.
    """
    spec = _colehopf_spec(cfg)
    integrated: Form = "integrated_plain" if spec.form == "colehopf_plain" else "integrated_adopted"
    members = [
        Member(f"m{i:03d}", {"cfg": cfg, "seed": cfg.ic.seed + i, "form": integrated})
        for i in range(options.members)
    ]
    done = _run_members(simulate_member, members, options)
    states: list[IntegratedState] = []
    for member in done:
        trajectory = member.result
        burn_in = trajectory.t_final / 2
        states.extend(
            s for time, s in zip(trajectory.times, trajectory.states) if time >= burn_in
        )

    radii = estimate_radii(states)
    prep = PreparedNonlinearity.from_radii(spec, radii)
    psi_mean = float(np.mean([psi_from_phi(s.phi, s.mean).mean for s in states]))
    sampler = ProbeSampler(prep, mean=psi_mean)
    report = lipschitz_probe(prep, sampler, options.n_pairs, seed=cfg.ic.seed)
    prep = prep.with_lipschitz(report.C_est)

    write_json(os.path.join(directory, "radii.json"), radii.to_dict())
    write_json(
        os.path.join(directory, "probe.json"),
        {
            **report.to_dict(),
            "inner_radius": prep.inner_radius,
            "outer_radius": prep.outer_radius,
            "sampler_mean": psi_mean,
        },
    )
    return prep, ProbeSampler(prep, mean=psi_mean)


def load_prepared(cfg: RunConfig, directory: str) -> tuple[PreparedNonlinearity, ProbeSampler]:
    try:
        radii = TransformRadii(**read_json(os.path.join(directory, "radii.json")))
        probe = read_json(os.path.join(directory, "probe.json"))
    except OSError as exc:
        raise ConfigError(f"No prepare output in {directory}: {exc}") from exc
    prep = PreparedNonlinearity.from_radii(_colehopf_spec(cfg), radii).with_lipschitz(probe["C_est"])
    return prep, ProbeSampler(prep, mean=probe["sampler_mean"])


def build_graph(
    cfg: RunConfig, directory: str, options: RunOptions
) -> tuple[ManifoldGraph, ProbeSampler]:
    if options.prepared:
        prep, sampler = load_prepared(cfg, options.prepared)
    else:
        prep, sampler = prepare(cfg, directory, options)
    grid = prep.grid
    # every mode of P_n must be resolved, 4 |k|^2 < N^2
    table = enumerate_eigenvalues(grid.d, grid.L, (grid.N // 2 - 1) ** 2)
    n = options.n
    if n is None:
        n = auto_select_n(table, prep.C_est)
        if n is None:
            raise NoConvergence([], f"No resolved spectral gap reaches 6 C_est = {6 * prep.C_est:.4g}")
        logger.info("Selected cut n=%s (lambda_n=%.4g, C_est=%.4g)", n, table.value(n), prep.C_est)
    proj = ProjectionPair.from_table(table, n, grid)
    graph = ManifoldGraph(proj, prep, options.method, options.depth, tol=options.tol)
    return graph, sampler


def _attraction_member(
    graph: ManifoldGraph, psi0: SpectralField, dt: float, t_end: float, every: int, burn_in: float
) -> t.Any:
    trajectory = integrate_prepared(psi0, graph.prep, dt, t_end, every)
    return attraction_fit(trajectory, graph, burn_in=burn_in)


def manifold(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    graph, sampler = build_graph(cfg, directory, options)
    proj = graph.proj
    rngs = spawn_generators(cfg.ic.seed, options.n_samples + options.members)

    samples, points = [], []
    for i, rng in enumerate(rngs[: options.n_samples]):
        p = project(sampler.draw(rng, "in_ball"), "P", proj)
        evaluation = graph.solve(p)
        points.append(p)
        samples.append(
            {
                "index": i,
                "iterations": evaluation.iterations,
                "residual": evaluation.history[-1],
                "contraction": evaluation.contraction,
                "h1_p": h1_seminorm(p.coeffs, p.grid),
                "h1_q": h1_seminorm(evaluation.q.coeffs, p.grid),
            }
        )
    logger.info(
        "Graph fixed point converged on %s samples, max residual %.3g",
        len(samples),
        max(s["residual"] for s in samples),
    )
    write_json(os.path.join(directory, "graph_samples.json"), samples)

    solver = cfg.solver_config()
    every = attraction_cadence(graph, solver.dt, solver.t_end)
    burn_in = attraction_burn_in(graph, solver.t_end)
    # initial data must reach above the cut
    starts = ProbeSampler(graph.prep, sampler.mean, kmax=attraction_kmax(graph))
    members = [
        Member(
            f"m{i:03d}",
            {
                "graph": graph,
                "psi0": starts.draw(rng, "in_ball"),
                "dt": solver.dt,
                "t_end": solver.t_end,
                "every": every,
                "burn_in": burn_in,
            },
        )
        for i, rng in enumerate(rngs[options.n_samples :])
    ]
    done = _run_members(_attraction_member, members, options)
    rows = [
        {
            "member": i,
            "C_U": m.result.C_U,
            "mu": m.result.mu,
            "expected_mu": m.result.expected_mu,
            "r_squared": m.result.r_squared,
            "n_points": m.result.n_points,
            "passed": int(m.result.passed),
        }
        for i, m in enumerate(done)
    ]
    write_csv(os.path.join(directory, "attraction.csv"), [c["name"] for c in ATTRACTION_COLUMNS], rows)

    lift = lift_to_U(graph, points)
    lipschitz = graph_lipschitz_probe(graph, sampler, options.n_pairs, seed=cfg.ic.seed)
    summary = {
        "n": proj.n,
        "dim": proj.dim,
        "lambda_n": proj.lambda_n,
        "lambda_n1": proj.lambda_n1,
        "C_est": graph.prep.C_est,
        "method": graph.method,
        "T_back": graph.horizon,
        "l_est": lipschitz.l_est,
        "lifted": len(lift.states),
        "lift_skipped": lift.skipped,
        "attraction_passed": sum(r["passed"] for r in rows),
        "attraction_members": len(rows),
        "attraction_every": every,
        "attraction_burn_in": burn_in,
    }
    write_json(os.path.join(directory, "manifold.json"), summary)
    return summary


def squeeze(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    """Strong squeezing on seeded pairs, plus one asymptotic completeness probe."""
    graph, sampler = build_graph(cfg, directory, options)
    solver = cfg.solver_config()
    every = solver.diag_every or 10
    pairs = []
    first = None
    for i, rng in enumerate(spawn_generators(cfg.ic.seed, options.n_pairs)):
        u0 = sampler.draw(rng, "in_ball")
        v0 = sampler.perturb(rng, u0)
        if first is None:
            first = u0
        report = squeezing_test(u0, v0, graph, solver.t_end, solver.dt, every)
        pairs.append({"index": i, **report.to_dict()})
    assert first is not None
    completeness = completeness_probe(first, graph, solver.t_end / 2, solver.t_end, solver.dt, every)
    summary = {
        "n": graph.proj.n,
        "n_pairs": len(pairs),
        "passed": sum(1 for p in pairs if p["passed"]),
        "pairs": pairs,
        "completeness": dataclasses.asdict(completeness),
    }
    write_json(os.path.join(directory, "squeeze.json"), summary)
    return summary


def _prepare_summary(cfg: RunConfig, directory: str, options: RunOptions) -> dict[str, t.Any]:
    prep, _ = prepare(cfg, directory, options)
    return {"C_est": prep.C_est, "inner_radius": prep.inner_radius, "outer_radius": prep.outer_radius}


HANDLERS: dict[str, Callable[[RunConfig, str, RunOptions], t.Any]] = {
    "simulate": simulate,
    "equivalence": equivalence,
    "dispersion": dispersion,
    "gaps": spectral_gaps,
    "absorb": absorb,
    "prepare": _prepare_summary,
    "manifold": manifold,
    "squeeze": squeeze,
}

TABLES: dict[str, dict[str, tuple[ColumnDoc, ...]]] = {
    "equivalence": {"equivalence.csv": EQUIVALENCE_COLUMNS},
    "dispersion": {"dispersion.csv": DISPERSION_COLUMNS},
    "gaps": {"gaps.csv": GAPS_COLUMNS, "gap_growth.csv": GAP_GROWTH_COLUMNS},
    "manifold": {"attraction.csv": ATTRACTION_COLUMNS},
}


def run(subcommand: str, cfg: RunConfig, options: t.Optional[RunOptions] = None) -> str:
    """Runs one subcommand and returns the directory holding its artifacts."""
    if subcommand not in HANDLERS:
        raise ConfigError(f"Unknown subcommand {subcommand}")
    options = options or RunOptions()
    directory = output_directory(cfg, subcommand, options)
    write_manifest(directory, cfg, subcommand, options)
    write_schema(os.path.join(directory, "schema.json"), COLUMNS, **TABLES.get(subcommand, {}))
    logger.info("Starting %s in %s", subcommand, directory)
    HANDLERS[subcommand](cfg, directory, options)
    logger.info("Finished %s", subcommand)
    return directory
