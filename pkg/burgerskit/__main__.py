import argparse
import logging
import sys
import typing as t

from burgerskit.config import ConfigError, RunConfig, load_config, parse_config
from burgerskit.manifold import GRAPH_METHODS, NoConvergence
from burgerskit.models import PositivityLost
from burgerskit.runner import SUBCOMMANDS, RunOptions, run
from burgerskit.timestep import BlowUp

EXIT_CODES: t.Tuple[t.Tuple[t.Type[Exception], int], ...] = (
    (ConfigError, 2),
    (BlowUp, 3),
    (PositivityLost, 4),
    (NoConvergence, 5),
)


def _scales(text: str) -> t.Tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Invalid scales {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Forced Burgers, Cole-Hopf and inertial manifold numerics",
        epilog="environment variables:\n"
        "  BURGERSKIT_OUTPUT  output root, overrides [output] directory\n"
        "  BURGERSKIT_DEBUG   check Hermitian symmetry of every field",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "subcommand",
        choices=SUBCOMMANDS,
        help="simulate: trajectory and diagnostics; equivalence: compare the three forms; "
        "dispersion: linear growth rates; gaps: Laplacian spectrum; absorb: absorbing ball "
        "of an ensemble; prepare: radii and Lipschitz probe; manifold: graph and attraction; "
        "squeeze: strong squeezing and completeness",
    )
    parser.add_argument(
        "config",
        type=str,
        nargs="?",
        help="INI file with [model], [solver], [ic] and [output] sections, defaults if omitted",
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override a configuration value, may be repeated",
    )
    parser.add_argument("--workers", type=int, help="Ensemble concurrency", default=1)
    parser.add_argument("--members", type=int, help="Ensemble size", default=5)
    parser.add_argument(
        "--scales",
        type=_scales,
        help="Comma separated initial amplitude multipliers for absorb, defaults to 1,4,16",
        default=(1.0, 4.0, 16.0),
    )
    parser.add_argument("--cutoff", type=int, help="Largest |k|^2 enumerated by gaps")
    parser.add_argument("--n", type=int, help="Cut index of the manifold, ignored with --auto-n")
    parser.add_argument(
        "--auto-n",
        action="store_true",
        help="Pick the smallest cut whose gap reaches 6 C_est (the default without --n)",
    )
    parser.add_argument(
        "--method", choices=GRAPH_METHODS, default="aim_fixed_point", help="Graph construction"
    )
    parser.add_argument("--depth", type=int, default=200, help="Graph iteration budget")
    parser.add_argument("--tol", type=float, default=1e-9, help="Graph residual tolerance")
    parser.add_argument("--pairs", type=int, default=60, help="Probe and squeezing pairs")
    parser.add_argument("--samples", type=int, default=8, help="Graph points evaluated by manifold")
    parser.add_argument(
        "--prepared",
        type=str,
        help="Directory of an earlier prepare run to reuse for manifold and squeeze",
    )
    parser.add_argument(
        "--verbose",
        "-v",
        action="count",
        help="Logging level: 0: ERROR, 1: INFO, 2: DEBUG",
        default=0,
    )
    parser.add_argument(
        "--quiet",
        "-q",
        action="store_true",
        help="Disable automatic logging configuration",
    )
    return parser


def main(argv: t.Optional[t.Sequence[str]] = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.quiet:
        level = args.verbose

        if level == 0:
            level = logging.ERROR
        elif level == 1:
            level = logging.INFO
        else:
            level = logging.DEBUG

        logging.basicConfig(level=level)

    try:
        cfg: RunConfig = (
            load_config(args.config, args.overrides)
            if args.config
            else parse_config("", args.overrides)
        )
        options = RunOptions(
            workers=args.workers,
            members=args.members,
            scales=args.scales,
            cutoff=args.cutoff,
            n=None if args.auto_n else args.n,
            method=args.method,
            depth=args.depth,
            tol=args.tol,
            n_pairs=args.pairs,
            n_samples=args.samples,
            prepared=args.prepared,
        )
        directory = run(args.subcommand, cfg, options)
    except tuple(error for error, _ in EXIT_CODES) as exc:
        logging.getLogger("burgerskit").error("%s failed: %s", args.subcommand, exc)
        sys.exit(next(code for error, code in EXIT_CODES if isinstance(exc, error)))

    print(directory)


if __name__ == "__main__":
    main()
