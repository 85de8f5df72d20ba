import io
import logging
import math
import os
import tempfile
import unittest
from contextlib import redirect_stdout
from unittest import mock

from burgerskit.__main__ import main
from burgerskit.config import ConfigError, parse_config
from burgerskit.io import read_csv, read_json
from burgerskit.manifold import NoConvergence
from burgerskit.models import PositivityLost
from burgerskit.runner import RunOptions, run
from burgerskit.spectrum import check_sgc, enumerate_eigenvalues
from tests.helpers import create_config

SMALL = {"N": 16}
SHORT = {"dt": 0.01, "t_end": 0.2, "diag_every": 5}


class RunnerTestCase(unittest.TestCase):
    def setUp(self) -> None:
        logging.getLogger().setLevel(logging.CRITICAL)
        self.tmp = tempfile.TemporaryDirectory()
        self.root = self.tmp.name
        patcher = mock.patch.dict(os.environ, {"BURGERSKIT_OUTPUT": self.root})
        patcher.start()
        self.addCleanup(patcher.stop)

    def tearDown(self) -> None:
        self.tmp.cleanup()


class TestSimulate(RunnerTestCase):
    def test_zero_horizon(self) -> None:
        cfg = create_config(model=SMALL, solver={"t_end": 0})
        directory = run("simulate", cfg)
        self.assertEqual(os.path.dirname(directory), os.path.join(self.root, "simulate"))
        self.assertRegex(os.path.basename(directory), r"^[0-9a-f]{12}$")
        self.assertEqual(
            sorted(os.listdir(directory)), ["manifest.json", "schema.json", "snapshots", "summary.json"]
        )
        self.assertEqual(os.listdir(os.path.join(directory, "snapshots")), ["snap_000000.json"])
        self.assertEqual(read_json(os.path.join(directory, "summary.json"))["n_steps"], 0)

    def test_manifest(self) -> None:
        cfg = create_config(model={"N": 16, "symbol": "qse"}, solver=SHORT)
        directory = run("simulate", cfg, RunOptions(workers=2))
        manifest = read_json(os.path.join(directory, "manifest.json"))
        self.assertEqual(manifest["subcommand"], "simulate")
        self.assertEqual(manifest["options"]["workers"], 2)
        self.assertEqual(parse_config(manifest["config"]), cfg)
        schema = read_json(os.path.join(directory, "schema.json"))
        self.assertIn("trajectory.csv", schema)

    def test_deterministic(self) -> None:
        outputs, directories = [], []
        for name in ("a", "b"):
            cfg = create_config(
                model={"N": 16, "form": "integrated_adopted"},
                solver=SHORT,
                output={"directory": name},
            )
            with mock.patch.dict(os.environ, {"BURGERSKIT_OUTPUT": os.path.join(self.root, name)}):
                directory = run("simulate", cfg)
            directories.append(directory)
            with open(os.path.join(directory, "trajectory.csv"), "rb") as file:
                trajectory = file.read()
            with open(os.path.join(directory, "summary.json"), "rb") as file:
                summary = file.read()
            outputs.append((trajectory, summary))
        self.assertEqual(outputs[0], outputs[1])
        self.assertTrue(directories[0].startswith(os.path.join(self.root, "a", "simulate")))
        rows = read_csv(os.path.join(directories[0], "trajectory.csv"))
        self.assertEqual(len(rows), 5)
        self.assertAlmostEqual(rows[-1]["t"], 0.2)

    def test_run_directories(self) -> None:
        cfg = create_config(model=SMALL, solver=SHORT)
        first = run("simulate", cfg)
        self.assertEqual(run("simulate", cfg), first)
        longer = run("simulate", create_config(model=SMALL, solver={**SHORT, "t_end": 0.3}))
        self.assertNotEqual(longer, first)
        self.assertEqual(os.path.dirname(longer), os.path.dirname(first))
        self.assertEqual(len(read_csv(os.path.join(first, "trajectory.csv"))), 5)
        self.assertEqual(len(read_csv(os.path.join(longer, "trajectory.csv"))), 7)
        other = run("simulate", cfg, RunOptions(members=3))
        self.assertNotEqual(other, first)

    def test_formats(self) -> None:
        cfg = create_config(model=SMALL, solver=SHORT, output={"formats": "csv"})
        directory = run("simulate", cfg)
        self.assertFalse(os.path.exists(os.path.join(directory, "snapshots")))
        self.assertTrue(os.path.exists(os.path.join(directory, "trajectory.csv")))

    def test_unknown_subcommand(self) -> None:
        with self.assertRaises(ConfigError):
            run("plot", create_config())

    def test_options(self) -> None:
        with self.assertRaises(ConfigError):
            RunOptions(workers=0)
        with self.assertRaises(ConfigError):
            RunOptions(scales=(1.0, -1.0))
        with self.assertRaises(ConfigError):
            RunOptions(method="galerkin")  # type: ignore[arg-type]


class TestExperiments(RunnerTestCase):
    def test_equivalence(self) -> None:
        cfg = create_config(model={"N": 32}, solver=SHORT, ic={"amplitude": 0.2})
        directory = run("equivalence", cfg)
        summary = read_json(os.path.join(directory, "equivalence.json"))
        self.assertEqual(summary["forms"], ["primal", "integrated_adopted", "colehopf"])
        self.assertLess(summary["max_dev_integrated"], 1e-8)
        self.assertLess(summary["max_dev_colehopf"], 1e-5)
        self.assertEqual(len(read_csv(os.path.join(directory, "equivalence.csv"))), 5)

    def test_equivalence_unbounded_symbol(self) -> None:
        cfg = create_config(model={"N": 16, "symbol": "kse", "alpha": 0.5}, solver=SHORT, ic={"amplitude": 0.2})
        summary = read_json(os.path.join(run("equivalence", cfg), "equivalence.json"))
        self.assertEqual(summary["forms"], ["primal", "integrated_adopted"])
        self.assertIsNone(summary["max_dev_colehopf"])

    def test_dispersion(self) -> None:
        cfg = create_config(
            model={"N": 32, "symbol": "qse", "L": 4 * math.pi},
            solver={"dt": 0.01, "t_end": 0.5, "diag_every": 5},
        )
        directory = run("dispersion", cfg)
        summary = read_json(os.path.join(directory, "dispersion.json"))
        self.assertEqual(summary["n_modes"], 4)
        self.assertLess(summary["max_rel_error"], 1e-6)
        rows = read_csv(os.path.join(directory, "dispersion.csv"))
        self.assertAlmostEqual(rows[0]["omega_linear"], 0.15)

    def test_gaps(self) -> None:
        directory = run("gaps", create_config(), RunOptions(cutoff=100))
        self.assertEqual(len(read_csv(os.path.join(directory, "gaps.csv"))), 11)
        summary = read_json(os.path.join(directory, "gaps.json"))
        self.assertEqual(summary["first_n_for"]["4"], 2)
        self.assertIsNone(summary["first_n_for"]["64"])
        self.assertEqual(summary["max_gap"], 19.0)
        self.assertEqual(len(read_csv(os.path.join(directory, "gap_growth.csv"))), 10)
        schema = read_json(os.path.join(directory, "schema.json"))
        self.assertIn("gap_growth.csv", schema)

    def test_absorb(self) -> None:
        cfg = create_config(model=SMALL, solver={"dt": 0.01, "t_end": 0.5, "diag_every": 5})
        directory = run("absorb", cfg, RunOptions(workers=2, members=2, scales=(1.0, 2.0)))
        summary = read_json(os.path.join(directory, "absorb.json"))
        self.assertEqual(sorted(summary["scales"]), ["1", "2"])
        self.assertEqual(len(summary["members"]), 4)
        self.assertTrue(all(m["status"] == "complete" for m in summary["members"]))
        self.assertGreater(summary["overall"]["radius"], 0.0)
        self.assertTrue(os.path.exists(os.path.join(directory, "members", "s2_m001", "trajectory.csv")))

    def test_absorb_radius_ignores_initial_scale(self) -> None:
        # every member converges to the single steady state of the forced heat equation for psi
        cfg = create_config(
            model={"N": 32, "symbol": "zero", "form": "colehopf_plain", "forcing": "1:0.5"},
            solver={"dt": 0.01, "t_end": 15, "diag_every": 10},
        )
        directory = run("absorb", cfg, RunOptions(members=2, scales=(1.0, 4.0, 16.0)))
        summary = read_json(os.path.join(directory, "absorb.json"))
        plateaus = [summary["scales"][key]["plateau"] for key in ("1", "4", "16")]
        self.assertLess((max(plateaus) - min(plateaus)) / max(plateaus), 1e-2)
        self.assertLess(summary["radius_spread"], 0.06)


class TestManifold(RunnerTestCase):
    """With the zero symbol and no forcing the prepared nonlinearity vanishes."""

    def setUp(self) -> None:
        super().setUp()
        self.cfg = create_config(
            model={"N": 16, "symbol": "zero", "form": "integrated_plain"},
            solver={"dt": 0.01, "t_end": 0.2, "diag_every": 5},
        )
        self.options = RunOptions(members=2, n_pairs=3, n_samples=2)

    def test_prepare(self) -> None:
        directory = run("prepare", self.cfg, self.options)
        probe = read_json(os.path.join(directory, "probe.json"))
        self.assertEqual(probe["C_est"], 0.0)
        self.assertEqual(probe["n_pairs"], 3)
        radii = read_json(os.path.join(directory, "radii.json"))
        self.assertLessEqual(radii["r0"], 1.0)

    def test_manifold(self) -> None:
        directory = run("manifold", self.cfg, self.options)
        summary = read_json(os.path.join(directory, "manifold.json"))
        self.assertEqual(summary["n"], 0)
        self.assertEqual(summary["dim"], 1)
        self.assertEqual(summary["l_est"], 0.0)
        self.assertEqual(summary["lifted"], 2)
        self.assertEqual(summary["attraction_members"], 2)
        samples = read_json(os.path.join(directory, "graph_samples.json"))
        self.assertEqual([s["h1_q"] for s in samples], [0.0, 0.0])

    def test_reuses_prepared(self) -> None:
        prepared = run("prepare", self.cfg, self.options)
        options = RunOptions(members=2, n_pairs=3, n_samples=2, n=1, prepared=prepared)
        summary = read_json(os.path.join(run("manifold", self.cfg, options), "manifold.json"))
        self.assertEqual(summary["n"], 1)
        self.assertEqual(summary["C_est"], 0.0)
        with self.assertRaises(ConfigError):
            run("manifold", self.cfg, RunOptions(prepared=os.path.join(self.root, "missing")))

    def test_squeeze(self) -> None:
        directory = run("squeeze", self.cfg, self.options)
        summary = read_json(os.path.join(directory, "squeeze.json"))
        self.assertEqual(summary["n"], 0)
        self.assertEqual(summary["n_pairs"], 3)
        self.assertGreater(summary["completeness"]["rate"], 0.0)

    def test_unbounded_symbol(self) -> None:
        cfg = create_config(model={"N": 16, "symbol": "kse"})
        with self.assertRaises(ConfigError):
            run("prepare", cfg, self.options)


class TestBurgersManifold(RunnerTestCase):
    def test_manifold(self) -> None:
        cfg = create_config(
            model={"N": 64, "symbol": "bse", "alpha": 2},
            solver={"dt": 0.001, "t_end": 0.6},
            ic={"amplitude": 0.5},
        )
        options = RunOptions(members=3, n_pairs=30, n_samples=3)
        directory = run("manifold", cfg, options)
        summary = read_json(os.path.join(directory, "manifold.json"))
        C_est = summary["C_est"]
        self.assertGreater(C_est, 0.0)
        table = enumerate_eigenvalues(1, 2 * math.pi, 31**2)
        self.assertEqual(summary["n"], check_sgc(table, 1.5 * C_est, 1.0, 1.0, strict=False))
        self.assertGreaterEqual(summary["lambda_n1"] - summary["lambda_n"], 6 * C_est)

        samples = read_json(os.path.join(directory, "graph_samples.json"))
        self.assertEqual(len(samples), 3)
        self.assertTrue(all(s["residual"] <= options.tol for s in samples))

        self.assertEqual(summary["attraction_members"], 3)
        self.assertEqual(summary["attraction_passed"], 3)
        rows = read_csv(os.path.join(directory, "attraction.csv"))
        self.assertTrue(all(r["mu"] > 0 and r["n_points"] >= 5 for r in rows))


class TestMain(RunnerTestCase):
    def test_success(self) -> None:
        out = io.StringIO()
        with redirect_stdout(out):
            main(["-q", "gaps", "--cutoff", "16"])
        printed = out.getvalue().strip()
        self.assertEqual(os.path.dirname(printed), os.path.join(self.root, "gaps"))
        self.assertTrue(os.path.exists(os.path.join(printed, "gaps.json")))

    def test_exit_codes(self) -> None:
        cases = [
            (["-q", "simulate", "--set", "model.N=15"], 2),
            (["-q", "simulate", "--set", "model.N=16", "--set", "solver.blowup_threshold=1e-12"], 3),
            (["-q", "absorb", "--workers", "0"], 2),
            (["-q", "simulate", "missing.ini"], 2),
            (["-q", "absorb", "--scales", "a,b"], 2),
        ]
        for argv, code in cases:
            with self.subTest(argv=argv):
                with self.assertRaises(SystemExit) as context:
                    main(argv)
                self.assertEqual(context.exception.code, code)

    def test_mapped_errors(self) -> None:
        for error, code in ((PositivityLost(-0.1), 4), (NoConvergence([1.0, 2.0]), 5)):
            with self.subTest(code=code):
                with mock.patch("burgerskit.__main__.run", side_effect=error):
                    with self.assertRaises(SystemExit) as context:
                        main(["-q", "manifold"])
                self.assertEqual(context.exception.code, code)
