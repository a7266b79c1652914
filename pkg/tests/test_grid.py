"""Spectral grid: derivatives, products, quadrature, interpolation, random fields."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactlab.grid import (CoordForm, Grid, ScalarField, exterior_derivative, integrate, inner,
                             eval_offgrid, multiply, partial_derivative, random_band_limited, write_csv)

TWO_PI = 2 * np.pi


def field(grid, func):
    return ScalarField.from_function(grid, func)


class TestGrid:
    @pytest.mark.parametrize("n", [4, 12, 0, -8, 24])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError, match="power of two"):
            Grid(n)

    def test_point_layout(self):
        g = Grid(8)
        pts = g.points()
        assert pts.shape == (8, 8, 8, 3)
        np.testing.assert_allclose(pts[1, 2, 3], TWO_PI * np.array([1, 2, 3]) / 8)

    def test_nonfinite_values_rejected(self, grid16):
        v = np.zeros(grid16.shape)
        v[0, 0, 0] = np.nan
        with pytest.raises(FloatingPointError):
            ScalarField(grid16, v)


class TestDerivatives:
    def test_sin_x(self, grid16):
        d = partial_derivative(field(grid16, lambda x, y, z: np.sin(x)), "x")
        assert np.abs(d.values - np.cos(grid16.mesh()[0])).max() <= 1e-12

    @pytest.mark.parametrize("axis", ["x", "y", "z", 0, 1, 2])
    def test_constant(self, grid16, axis):
        assert partial_derivative(ScalarField.constant(grid16, 3.5), axis).sup() == 0.0

    def test_no_x_dependence(self, grid16):
        assert partial_derivative(field(grid16, lambda x, y, z: np.sin(3 * z)), "x").sup() <= 1e-13

    def test_mixed_partials_commute(self, grid16):
        f = random_band_limited(grid16, 3, 5)
        a = partial_derivative(partial_derivative(f, 0), 1)
        b = partial_derivative(partial_derivative(f, 1), 0)
        assert (a - b).sup() <= 1e-10

    def test_dd_vanishes(self, grid16):
        a = CoordForm(1, tuple(random_band_limited(grid16, s, 4) for s in range(3)))
        assert exterior_derivative(exterior_derivative(a)).sup() <= 1e-12


class TestProducts:
    def test_identity_element(self, grid16):
        g = random_band_limited(grid16, 1, 4)
        assert (multiply(ScalarField.constant(grid16, 1.0), g) - g).sup() <= 1e-14

    def test_sin_squared(self, grid16):
        s = field(grid16, lambda x, y, z: np.sin(x))
        expected = (1 - np.cos(2 * grid16.mesh()[0])) / 2
        assert np.abs(multiply(s, s).values - expected).max() <= 1e-12

    def test_band4_product_is_exact(self, grid16):
        f, g = random_band_limited(grid16, 11, 4), random_band_limited(grid16, 12, 4)
        # band 8 does not fit on N=16; compare against the exact product on N=32 truncated
        fine = Grid(32)
        exact = ScalarField(fine, f.resample(fine).values * g.resample(fine).values).resample(grid16)
        assert (multiply(f, g) - exact).sup() <= 1e-12

    def test_band3_product_pointwise(self, grid16):
        f, g = random_band_limited(grid16, 11, 3), random_band_limited(grid16, 12, 3)
        assert np.abs(multiply(f, g).values - f.values * g.values).max() <= 1e-12


class TestQuadrature:
    def test_volume(self, grid16):
        assert integrate(ScalarField.constant(grid16, 1.0)) == pytest.approx(TWO_PI ** 3, rel=1e-14)

    def test_mean_zero_mode(self, grid16):
        assert abs(integrate(field(grid16, lambda x, y, z: np.sin(x)))) <= 1e-12

    def test_sin_squared(self, grid16):
        v = integrate(field(grid16, lambda x, y, z: np.sin(x) ** 2))
        assert abs(v - TWO_PI ** 3 / 2) <= 1e-10

    def test_inner_matches_integral(self, grid16):
        f, g = random_band_limited(grid16, 1, 3), random_band_limited(grid16, 2, 3)
        assert inner(f, g) == pytest.approx(integrate(multiply(f, g)), rel=1e-12, abs=1e-14)


class TestInterpolation:
    def test_reproduces_nodes(self, grid16):
        f = random_band_limited(grid16, 5, 5)
        pts = grid16.points().reshape(-1, 3)[::37]
        np.testing.assert_allclose(eval_offgrid(f, pts), f.values.reshape(-1)[::37], atol=1e-12)

    def test_closed_form(self, grid16):
        f = field(grid16, lambda x, y, z: np.sin(x))
        assert abs(eval_offgrid(f, np.array([[np.pi / 7, 0, 0]]))[0] - np.sin(np.pi / 7)) <= 1e-12

    @given(st.floats(-5, 5), st.floats(0, 6.2), st.floats(0, 6.2), st.floats(0, 6.2))
    @settings(max_examples=25, deadline=None)
    def test_constant_everywhere(self, c, x, y, z):
        f = ScalarField.constant(Grid(8), c)
        assert eval_offgrid(f, np.array([[x, y, z]]))[0] == pytest.approx(c, abs=1e-12)


class TestRandomFields:
    def test_deterministic(self, grid16):
        a, b = random_band_limited(grid16, 9, 3), random_band_limited(grid16, 9, 3)
        assert np.array_equal(a.values, b.values)

    def test_band_zero_is_constant(self, grid16):
        f = random_band_limited(grid16, 9, 0)
        assert np.ptp(f.values) <= 1e-14

    def test_refinement_invariance(self, grid16):
        a = random_band_limited(grid16, 4, 3)
        b = random_band_limited(Grid(32), 4, 3)
        assert np.abs(b.values[::2, ::2, ::2] - a.values).max() <= 1e-12

    @pytest.mark.parametrize("band", [1, 3, 5])
    def test_advertised_band(self, grid16, band):
        f = random_band_limited(grid16, 2, band)
        assert f.band_limit() <= band

    def test_band_too_large(self, grid16):
        with pytest.raises(ValueError):
            random_band_limited(grid16, 0, 8)

    @given(st.integers(0, 2**31), st.floats(0.01, 10.0))
    @settings(max_examples=15, deadline=None)
    def test_amplitude_bounds_sup(self, seed, amp):
        assert random_band_limited(Grid(8), seed, 2, amp).sup() <= amp * (1 + 1e-12)


class TestSerialization:
    def test_binary_roundtrip(self, grid16, tmp_path):
        f = random_band_limited(grid16, 8, 4)
        f.to_binary(tmp_path / "f.bin")
        assert np.array_equal(ScalarField.from_binary(grid16, tmp_path / "f.bin").values, f.values)

    def test_csv_has_one_row_per_point(self, tmp_path):
        g = Grid(8)
        write_csv(tmp_path / "f.csv", [ScalarField.constant(g, 1.0)], ["f"])
        lines = (tmp_path / "f.csv").read_text().splitlines()
        assert len(lines) == 1 + 8 ** 3
