import math
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from burgerskit.config import ConfigError, load_config, parse_config, parse_modes
from burgerskit.io import write_snapshot
from burgerskit.models import IntegratedState
from burgerskit.spectral import SpectralField, norm
from tests.helpers import create_config, create_field, create_grid

CONFIG = """
[model]
form = integrated_adopted
symbol = qse
alpha = 1.5
N = 32
forcing = 1:0.5 3:-0.25

[solver]
dt = 0.005
t_end = 2
diag_every = 4

[ic]
seed = 11
amplitude = 2
"""


class TestParseConfig(unittest.TestCase):
    def test_defaults(self) -> None:
        cfg = parse_config("")
        self.assertEqual(cfg.model.form, "primal")
        self.assertEqual(cfg.model.symbol, "bse")
        self.assertEqual(cfg.model.N, 64)
        self.assertAlmostEqual(cfg.model.L, 2 * math.pi)
        self.assertEqual(cfg.solver.scheme, "ifrk4")
        self.assertEqual(cfg.solver.dt, 1e-3)
        self.assertEqual(cfg.ic.kind, "random_smooth")
        self.assertEqual(cfg.output.formats, "csv,json")

    def test_text(self) -> None:
        cfg = parse_config(CONFIG)
        self.assertEqual(cfg.model.form, "integrated_adopted")
        self.assertEqual(cfg.model.alpha, 1.5)
        self.assertEqual(cfg.solver.t_end, 2.0)
        self.assertEqual(cfg.solver_config().n_steps, 400)
        self.assertEqual(cfg.solver_config().diag_every, 4)
        spec = cfg.model_spec()
        self.assertEqual(spec.form, "integrated_adopted")
        self.assertAlmostEqual(spec.forcing.coeff(1), 0.25)
        self.assertAlmostEqual(spec.forcing.coeff(3), -0.125)
        self.assertEqual(cfg.model_spec("colehopf").form, "colehopf")

    def test_overrides(self) -> None:
        cfg = parse_config(CONFIG, ["model.N=16", "solver.scheme = imex_cnab2"])
        self.assertEqual(cfg.model.N, 16)
        self.assertEqual(cfg.solver.scheme, "imex_cnab2")
        self.assertEqual(cfg.model.alpha, 1.5)
        self.assertEqual(create_config(model={"N": 16}).grid().N, 16)

    def test_errors(self) -> None:
        invalid = [
            ("", ["model.form=colehopf", "model.symbol=kse"]),
            ("", ["model.N=15"]),
            ("", ["model.N=4"]),
            ("", ["solver.dt=0"]),
            ("", ["solver.dt=-1"]),
            ("", ["solver.scheme=euler"]),
            ("", ["model.unknown=1"]),
            ("", ["extra.key=1"]),
            ("", ["model.N"]),
            ("[plot]\ncolor = red\n", []),
            ("[model\n", []),
            ("", ["model.forcing=0:1"]),
            ("", ["model.N=16", "model.forcing=8:1"]),
            ("", ["ic.kind=modes"]),
            ("", ["ic.kind=file", "ic.path=/nonexistent/snap.json"]),
            ("", ["ic.kind=modes", "ic.modes=1,1:0.5"]),
            ("", ["output.formats=csv,hdf5"]),
        ]
        for text, overrides in invalid:
            with self.subTest(overrides=overrides):
                with self.assertRaises(ConfigError):
                    parse_config(text, overrides)

    def test_round_trip(self) -> None:
        cfg = parse_config(CONFIG, ["model.L=12.566370614359172"])
        self.assertEqual(parse_config(cfg.to_text()), cfg)

    def test_load_config(self) -> None:
        with tempfile.TemporaryDirectory() as root:
            path = os.path.join(root, "run.ini")
            with open(path, "w", encoding="utf-8") as file:
                file.write(CONFIG)
            self.assertEqual(load_config(path, ["ic.seed=3"]).ic.seed, 3)
            with self.assertRaises(ConfigError):
                load_config(os.path.join(root, "missing.ini"))

    @mock.patch.dict(os.environ, {"BURGERSKIT_OUTPUT": "/tmp/elsewhere"})
    def test_output_root_from_environment(self) -> None:
        self.assertEqual(parse_config("").output_root(), "/tmp/elsewhere")

    def test_output_root(self) -> None:
        with mock.patch.dict(os.environ, clear=True):
            self.assertEqual(parse_config("", ["output.directory=out"]).output_root(), "out")


class TestParseModes(unittest.TestCase):
    def test_parse(self) -> None:
        self.assertEqual(parse_modes("1:0.5  2:-0.25", 1), [((1,), 0.5), ((2,), -0.25)])
        self.assertEqual(parse_modes("1,2:1e-3", 2), [((1, 2), 0.001)])
        self.assertEqual(parse_modes("", 1), [])
        with self.assertRaises(ValueError):
            parse_modes("1", 1)
        with self.assertRaises(ValueError):
            parse_modes("1,1:0.5", 1)


class TestInitialConditions(unittest.TestCase):
    def test_random_smooth(self) -> None:
        cfg = create_config(model={"N": 32}, ic={"amplitude": 2.5, "seed": 4, "mean": 0.5})
        phi, mean = cfg.initial_potential()
        self.assertAlmostEqual(norm(phi, "Hs", s=2), 2.5)
        self.assertEqual(mean, 0.5)
        self.assertTrue(phi.zero_mean)
        again, _ = cfg.initial_potential()
        np.testing.assert_array_equal(phi.coeffs, again.coeffs)
        other, _ = cfg.initial_potential(seed=5)
        self.assertFalse(np.array_equal(phi.coeffs, other.coeffs))

    def test_modes(self) -> None:
        cfg = create_config(model={"N": 16}, ic={"kind": "modes", "modes": "0:1.0 2:0.5", "mean": 0.25})
        phi, mean = cfg.initial_potential()
        self.assertEqual(mean, 1.25)
        self.assertAlmostEqual(phi.coeff(2), 0.25)
        self.assertEqual(phi.coeff(0), 0)

    def test_initial_state(self) -> None:
        cfg = create_config(model={"N": 16, "form": "integrated_plain"}, ic={"mean": 0.5})
        state = cfg.initial_state()
        assert isinstance(state, IntegratedState)
        self.assertEqual(state.mean, 0.5)
        psi = cfg.initial_state("colehopf")
        self.assertIsInstance(psi, SpectralField)

    def test_file(self) -> None:
        grid = create_grid(N=16)
        phi = create_field(grid, seed=2)
        with tempfile.TemporaryDirectory() as root:
            path = os.path.join(root, "snap.json")
            write_snapshot(path, phi, time=1.0, form="integrated_plain", mean=0.75)
            cfg = create_config(model={"N": 16}, ic={"kind": "file", "path": path})
            loaded, mean = cfg.initial_potential()
            self.assertEqual(mean, 0.75)
            np.testing.assert_allclose(loaded.coeffs, phi.coeffs, atol=1e-15)
            with self.assertRaises(ConfigError):
                create_config(model={"N": 32}, ic={"kind": "file", "path": path}).initial_potential()
