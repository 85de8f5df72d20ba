import logging
import math
import unittest
from unittest import mock

import numpy as np

from burgerskit.models import IntegratedState
from burgerskit.spectral import SpectralField, gradient
from burgerskit.timestep import BlowUp, Integrator, SolverConfig, integrate, step
from tests.helpers import create_grid, create_spec, sampled


class TestSolverConfig(unittest.TestCase):
    def test_validation(self) -> None:
        with self.assertRaises(ValueError):
            SolverConfig(dt=0.0)
        with self.assertRaises(ValueError):
            SolverConfig(t_end=-1.0)
        with self.assertRaises(ValueError):
            SolverConfig(scheme="euler")  # type: ignore[arg-type]
        with self.assertRaises(ValueError):
            SolverConfig(p=2)

    def test_n_steps(self) -> None:
        self.assertEqual(SolverConfig(dt=0.01, t_end=0.1).n_steps, 10)
        self.assertEqual(SolverConfig(t_end=0.0).n_steps, 0)


class TestIntegrator(unittest.TestCase):
    def test_ifrk4_linear_is_exact(self) -> None:
        linear = np.array([-1.0, -4.0, 0.5])
        integrator = Integrator(linear, np.zeros_like, "ifrk4", 0.1)
        y = np.ones(3, dtype=np.complex128)
        for _ in range(10):
            y = integrator.step(y)
        np.testing.assert_allclose(y.real, np.exp(linear), rtol=1e-13)

    def test_ifrk4_order(self) -> None:
        # y' = -y + 2y has the solution e^t
        integrator = Integrator(np.array([-1.0]), lambda y: 2 * y, "ifrk4", 0.01)
        y = np.ones(1, dtype=np.complex128)
        for _ in range(100):
            y = integrator.step(y)
        self.assertAlmostEqual(y[0].real, math.e, delta=1e-7)

    def test_cnab2(self) -> None:
        h = 0.1
        integrator = Integrator(np.array([-1.0]), np.zeros_like, "imex_cnab2", h)
        y = integrator.step(np.ones(1, dtype=np.complex128))
        self.assertAlmostEqual(y[0].real, (1 - h / 2) / (1 + h / 2))

    def test_cnab2_starts_with_euler(self) -> None:
        h = 0.1
        integrator = Integrator(np.array([0.0]), lambda y: y.copy(), "imex_cnab2", h)
        y0 = np.ones(1, dtype=np.complex128)
        y1 = integrator.step(y0)
        self.assertAlmostEqual(y1[0].real, 1 + h)
        y2 = integrator.step(y1)
        self.assertAlmostEqual(y2[0].real, y1[0].real + h * (1.5 * y1[0].real - 0.5))
        integrator.reset()
        self.assertAlmostEqual(integrator.step(y0)[0].real, 1 + h)


class TestIntegrate(unittest.TestCase):
    def setUp(self) -> None:
        self.grid = create_grid(N=16)
        self.heat = create_spec("colehopf_plain", "zero", grid=self.grid)
        self.psi0 = SpectralField.from_modes(self.grid, {0: 1.0, 1: 0.1, 2: 0.05})

    def test_heat_is_exact(self) -> None:
        cfg = SolverConfig(dt=0.01, t_end=1.0)
        final = integrate(self.psi0, self.heat, cfg).final
        assert isinstance(final, SpectralField)
        self.assertAlmostEqual(final.coeff(0), 1.0, places=14)
        self.assertAlmostEqual(abs(final.coeff(1)), 0.05 * math.exp(-1), places=14)
        self.assertAlmostEqual(abs(final.coeff(2)), 0.025 * math.exp(-4), places=14)

    def test_cadences(self) -> None:
        cfg = SolverConfig(dt=0.01, t_end=0.1, snapshot_every=5, diag_every=2)
        sink = mock.MagicMock()
        trajectory = integrate(self.psi0, self.heat, cfg, [sink])
        np.testing.assert_allclose(trajectory.times, [0.0, 0.05, 0.1])
        np.testing.assert_allclose(trajectory.record_times(), [0.0, 0.02, 0.04, 0.06, 0.08, 0.1])
        self.assertEqual(sink.snapshot.call_count, 3)
        self.assertEqual(sink.record.call_count, 6)
        self.assertEqual(len(trajectory.series("h1_U")), 6)

    def test_zero_horizon(self) -> None:
        trajectory = integrate(self.psi0, self.heat, SolverConfig(t_end=0.0))
        self.assertEqual(trajectory.times, [0.0])
        self.assertEqual(len(trajectory.records), 1)
        self.assertIs(trajectory.final, self.psi0)

    def test_blowup(self) -> None:
        with self.assertRaises(BlowUp) as context:
            integrate(self.psi0, self.heat, SolverConfig(blowup_threshold=1e-3))
        self.assertEqual(context.exception.t, 0.0)

    def test_mean_ode(self) -> None:
        spec = create_spec("integrated_adopted", grid=self.grid)
        state = IntegratedState(SpectralField.zeros(self.grid), 1.0)
        final = integrate(state, spec, SolverConfig(dt=0.01, t_end=1.0)).final
        assert isinstance(final, IntegratedState)
        self.assertAlmostEqual(final.mean, math.exp(-1), places=12)

    def test_cfl_warning(self) -> None:
        spec = create_spec("primal", grid=self.grid)
        U = gradient(sampled(self.grid, lambda x: 40 * np.sin(x), zero_mean=True))
        with self.assertLogs("burgerskit", level=logging.WARNING) as logs:
            integrate(U, spec, SolverConfig(dt=0.01, t_end=0.0))
        self.assertIn("CFL", logs.output[0])

    def test_cfl_checked_without_records(self) -> None:
        spec = create_spec("primal", grid=self.grid)
        U = gradient(sampled(self.grid, lambda x: 40 * np.sin(x), zero_mean=True))
        with self.assertLogs("burgerskit", level=logging.WARNING) as logs:
            run = integrate(U, spec, SolverConfig(dt=0.01, t_end=0.0, diag_every=0))
        self.assertEqual(run.records, [])
        self.assertIn("CFL", logs.output[0])

    def test_cfl_checked_every_step(self) -> None:
        cfg = SolverConfig(dt=0.01, t_end=0.05, diag_every=0)
        speeds = [0.0, 0.0, 0.0, 1e3]
        with mock.patch("burgerskit.timestep.max_speed", side_effect=speeds) as max_speed:
            with self.assertLogs("burgerskit", level=logging.WARNING) as logs:
                integrate(self.psi0, self.heat, cfg)
        self.assertEqual(max_speed.call_count, 4)
        self.assertIn("t=0.03", logs.output[0])

    def test_step(self) -> None:
        cfg = SolverConfig(dt=0.01, t_end=0.01)
        one = step(self.psi0, self.heat, cfg)
        assert isinstance(one, SpectralField)
        final = integrate(self.psi0, self.heat, cfg).final
        assert isinstance(final, SpectralField)
        np.testing.assert_allclose(one.coeffs, final.coeffs)


class TestConvergence(unittest.TestCase):
    def setUp(self) -> None:
        self.grid = create_grid(N=16)
        self.spec = create_spec("integrated_adopted", grid=self.grid)
        phi0 = sampled(self.grid, lambda x: 0.5 * np.cos(x), zero_mean=True)
        self.state0 = IntegratedState(phi0, 0.0)

    def final(self, scheme: str, dt: float) -> np.ndarray:
        cfg = SolverConfig(scheme=scheme, dt=dt, t_end=0.4, diag_every=0)  # type: ignore[arg-type]
        return self.spec.pack(integrate(self.state0, self.spec, cfg).final)

    def observed_order(self, scheme: str) -> float:
        reference = self.final("ifrk4", 0.0025)
        coarse = np.max(np.abs(self.final(scheme, 0.02) - reference))
        fine = np.max(np.abs(self.final(scheme, 0.01) - reference))
        return math.log2(coarse / fine)

    def test_ifrk4_order(self) -> None:
        self.assertGreaterEqual(self.observed_order("ifrk4"), 3.5)

    def test_cnab2_order(self) -> None:
        self.assertGreaterEqual(self.observed_order("imex_cnab2"), 1.8)

    def test_schemes_agree(self) -> None:
        difference = np.max(np.abs(self.final("ifrk4", 0.001) - self.final("imex_cnab2", 0.001)))
        self.assertLess(difference, 1e-5)
