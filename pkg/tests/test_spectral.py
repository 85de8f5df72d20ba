import math
import unittest

import numpy as np

from burgerskit.spectral import (
    GridSpec,
    MultiplierSymbol,
    SpectralField,
    VectorField,
    apply_multiplier,
    curl,
    dealias,
    dealias_mask,
    differentiate,
    divergence,
    gradient,
    gradient_project,
    laplacian,
    mean,
    multiply,
    norm,
    positive_part,
    potential,
    random_field,
    subtract_mean,
    symmetry_defect,
    to_physical,
    to_spectral,
)
from tests.helpers import create_field, create_grid, sampled


class TestGridSpec(unittest.TestCase):
    def test_validation(self) -> None:
        with self.assertRaises(ValueError):
            GridSpec(3, 16)
        with self.assertRaises(ValueError):
            GridSpec(1, 15)
        with self.assertRaises(ValueError):
            GridSpec(1, 6)
        with self.assertRaises(ValueError):
            GridSpec(1, 16, L=-1.0)
        with self.assertRaises(ValueError):
            GridSpec(1, 16, dealias="half")  # type: ignore[arg-type]

    def test_coordinates(self) -> None:
        grid = create_grid(N=8)
        (x,) = grid.coordinates()
        self.assertAlmostEqual(x[0], -math.pi)
        self.assertAlmostEqual(x[1] - x[0], grid.dx)
        self.assertAlmostEqual(grid.volume, 2 * math.pi)

    def test_index(self) -> None:
        grid = create_grid(N=8)
        self.assertEqual(grid.index(-1), (7,))
        self.assertEqual(grid.index(4), (4,))
        with self.assertRaises(ValueError):
            grid.index(5)
        with self.assertRaises(ValueError):
            grid.index((1, 1))


class TestTransforms(unittest.TestCase):
    def test_cosine_coefficients(self) -> None:
        grid = create_grid(N=16)
        f = sampled(grid, np.cos)
        self.assertAlmostEqual(f.coeff(1), 0.5, places=14)
        self.assertAlmostEqual(f.coeff(-1), 0.5, places=14)
        self.assertAlmostEqual(f.coeff(2), 0.0, places=14)
        self.assertAlmostEqual(mean(f), 0.0, places=14)

    def test_from_modes(self) -> None:
        grid = create_grid(N=16)
        (x,) = grid.coordinates()
        f = SpectralField.from_modes(grid, {1: 1.0, 3: 0.5j})
        expected = np.cos(x) - 0.5 * np.sin(3 * x)
        np.testing.assert_allclose(to_physical(f), expected, atol=1e-14)

    def test_round_trip(self) -> None:
        grid = create_grid(d=2, N=16)
        samples = np.random.default_rng(1).standard_normal(grid.shape)
        np.testing.assert_allclose(to_physical(to_spectral(samples, grid)), samples, atol=1e-13)

    def test_hermitian(self) -> None:
        grid = create_grid(d=2, N=16)
        f = random_field(grid, np.random.default_rng(0))
        self.assertLess(symmetry_defect(f.coeffs), 1e-15)
        self.assertEqual(f.coeff((0, 0)), 0)

    def test_zero_mean_contract(self) -> None:
        grid = create_grid(N=8)
        coeffs = np.zeros(grid.shape, dtype=np.complex128)
        coeffs[0] = 1.0
        with self.assertRaises(ValueError):
            SpectralField(grid, coeffs, zero_mean=True)
        with self.assertRaises(ValueError):
            SpectralField(grid, np.zeros(4, dtype=np.complex128))


class TestCalculus(unittest.TestCase):
    def test_derivative(self) -> None:
        grid = create_grid(N=16)
        (x,) = grid.coordinates()
        f = sampled(grid, np.sin)
        np.testing.assert_allclose(to_physical(differentiate(f, 1)), np.cos(x), atol=1e-13)
        np.testing.assert_allclose(to_physical(differentiate(f, 1, 2)), -np.sin(x), atol=1e-13)

    def test_nyquist_odd_derivative(self) -> None:
        grid = create_grid(N=8)
        f = sampled(grid, lambda x: np.cos(4 * x))
        self.assertNotEqual(f.coeff(-4), 0)
        self.assertEqual(differentiate(f, 1).coeff(-4), 0)
        self.assertNotEqual(differentiate(f, 1, 2).coeff(-4), 0)

    def test_laplacian(self) -> None:
        grid = create_grid(d=2, N=16)
        x, y = grid.coordinates()
        f = sampled(grid, lambda x, y: np.cos(x) * np.sin(2 * y))
        np.testing.assert_allclose(to_physical(laplacian(f)), -5 * np.cos(x) * np.sin(2 * y), atol=1e-12)

    def test_gradient_fields(self) -> None:
        grid = create_grid(d=2, N=16)
        phi = create_field(grid)
        U = gradient(phi)
        self.assertLess(norm(curl(U)), 1e-12)
        projected = gradient_project(U)
        for a, b in zip(U, projected):
            np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-14)
        np.testing.assert_allclose(potential(U).coeffs, phi.coeffs, atol=1e-14)
        np.testing.assert_allclose(divergence(U).coeffs, laplacian(phi).coeffs, atol=1e-12)

    def test_gradient_project_removes_rotation(self) -> None:
        grid = create_grid(d=2, N=16)
        psi = create_field(grid, seed=3)
        rotational = VectorField((differentiate(psi, 2), -differentiate(psi, 1)))
        self.assertLess(norm(gradient_project(rotational)), 1e-12)

    def test_curl_needs_two_dimensions(self) -> None:
        grid = create_grid(N=16)
        with self.assertRaises(ValueError):
            curl(gradient(create_field(grid)))

    def test_one_dimensional_projection_is_identity(self) -> None:
        U = gradient(create_field(create_grid()))
        self.assertIs(gradient_project(U), U)


class TestProducts(unittest.TestCase):
    def test_dealias_mask(self) -> None:
        self.assertEqual(int(np.count_nonzero(dealias_mask(create_grid(N=12)))), 7)
        self.assertEqual(int(np.count_nonzero(dealias_mask(create_grid(d=2, N=12)))), 49)
        self.assertTrue(np.all(dealias_mask(create_grid(N=12, dealias="none"))))

    def test_multiply(self) -> None:
        grid = create_grid(N=16)
        f = sampled(grid, np.cos)
        product = multiply(f, f)
        self.assertAlmostEqual(product.mean, 0.5, places=14)
        self.assertAlmostEqual(product.coeff(2), 0.25, places=14)
        self.assertAlmostEqual(product.coeff(1), 0.0, places=14)

    def test_dealias_truncates(self) -> None:
        grid = create_grid(N=16)
        f = sampled(grid, lambda x: np.cos(6 * x) + np.cos(x))
        self.assertAlmostEqual(dealias(f).coeff(6), 0.0)
        self.assertAlmostEqual(dealias(f).coeff(1), 0.5)

    def test_positive_part(self) -> None:
        grid = create_grid(N=64)
        w = positive_part(sampled(grid, np.sin))
        self.assertGreaterEqual(float(np.min(w)), 0.0)
        self.assertAlmostEqual(float(np.sum(w)) * grid.dx, 2.0, delta=5e-3)

    def test_subtract_mean(self) -> None:
        grid = create_grid(N=8)
        f = sampled(grid, lambda x: 2 + np.cos(x))
        self.assertAlmostEqual(f.mean, 2.0)
        g = subtract_mean(f)
        self.assertTrue(g.zero_mean)
        self.assertEqual(g.mean, 0.0)


class TestNorms(unittest.TestCase):
    def test_cosine_norms(self) -> None:
        grid = create_grid(N=32)
        f = sampled(grid, np.cos)
        self.assertAlmostEqual(norm(f), math.sqrt(math.pi), places=12)
        self.assertAlmostEqual(norm(f, "Hs", s=1), math.sqrt(math.pi), places=12)
        self.assertAlmostEqual(norm(f, "Linf"), 1.0, places=12)
        self.assertAlmostEqual(norm(f, "Lp", p=4), (3 * math.pi / 4) ** 0.25, places=12)

    def test_parseval(self) -> None:
        grid = create_grid(d=2, N=16)
        f = create_field(grid, size=2.5)
        self.assertAlmostEqual(norm(f), 2.5, places=12)
        self.assertAlmostEqual(norm(f, "Lp", p=2), 2.5, places=12)

    def test_vector_norm(self) -> None:
        grid = create_grid(d=2, N=16)
        f = create_field(grid)
        self.assertAlmostEqual(norm(VectorField((f, f))), math.sqrt(2) * norm(f), places=12)

    def test_negative_order(self) -> None:
        grid = create_grid(N=16)
        f = sampled(grid, lambda x: 1 + np.cos(x))
        with self.assertRaises(ValueError):
            norm(f, "Hs", s=-1)
        self.assertAlmostEqual(norm(subtract_mean(f), "Hs", s=-1), math.sqrt(math.pi))
        with self.assertRaises(ValueError):
            norm(f, "Lp", p=0.5)


class TestMultiplierSymbol(unittest.TestCase):
    def test_values(self) -> None:
        L = 2 * math.pi
        self.assertEqual(MultiplierSymbol("bse", 2.0).value(0, L), 0.0)
        self.assertAlmostEqual(MultiplierSymbol("bse", 2.0).value(3, L), 1.0)
        self.assertAlmostEqual(MultiplierSymbol("qse", 2.0).value(1, L), 1.0)
        self.assertAlmostEqual(MultiplierSymbol("kse", 1.0).value(1, L), 0.0)
        self.assertAlmostEqual(MultiplierSymbol("kse", 1.0).value(2, L), -12.0)
        self.assertEqual(MultiplierSymbol("zero").value((1, 1), L), 0.0)

    def test_bounded(self) -> None:
        self.assertTrue(MultiplierSymbol("qse", 2.0).bounded)
        self.assertFalse(MultiplierSymbol("kse", 2.0).bounded)

    def test_custom(self) -> None:
        symbol = MultiplierSymbol("custom", table={1: 0.5, 2: -1.0})
        self.assertEqual(symbol.value(-1, 1.0), 0.5)
        with self.assertRaises(ValueError):
            symbol.value(3, 1.0)
        values = symbol.on_grid(create_grid(N=8))
        self.assertEqual(values[1], 0.5)
        self.assertEqual(values[-2], -1.0)
        self.assertTrue(np.isnan(values[3]))
        with self.assertRaises(ValueError):
            MultiplierSymbol("custom")

    def test_apply_multiplier(self) -> None:
        grid = create_grid(N=16)
        f = sampled(grid, lambda x: 3 + np.cos(x))
        g = apply_multiplier(f, MultiplierSymbol("bse", 3.0))
        self.assertEqual(g.mean, 0.0)
        self.assertAlmostEqual(g.coeff(1), 1.0)
