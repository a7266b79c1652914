"""Folland-Stein derivatives, norms and the empirical-constant reports."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactlab.folland_stein import (DAIndex, S_MAX, WordIndex, algebra_constant_report, band_drift,
                                      cumulative_band_max, da_derivative, division_report, fs_inner,
                                      fs_norm, fs_norm_recursive, green_gain_report, hypoelliptic_report,
                                      reciprocal, sobolev_ratio_report, sup_norm, word_derivative)
from contactlab.grid import Grid, ScalarField, inner, random_band_limited

VOL_SQRT = (2 * np.pi) ** 1.5


class TestDerivatives:
    def test_empty_word(self, model16):
        f = random_band_limited(model16.grid, 1, 3)
        assert word_derivative(f, (), model16) is f

    @pytest.mark.parametrize("word", [(1,), (2,), (1, 2), (2, 2, 1)])
    def test_constant(self, model16, word):
        assert word_derivative(ScalarField.constant(model16.grid, 3.0), word, model16).sup() == 0.0

    def test_bracket(self, model16):
        f = random_band_limited(model16.grid, 2, 3)
        diff = word_derivative(f, (1, 2), model16) - word_derivative(f, (2, 1), model16)
        assert (diff + model16.apply_reeb(f)).sup() <= 1e-10

    def test_reeb_index(self, model16):
        f = random_band_limited(model16.grid, 3, 3)
        out, order = da_derivative(f, (0, 0, 1), model16)
        assert (out - model16.apply_reeb(f)).sup() == 0.0 and order == 2

    def test_contact_order(self):
        assert DAIndex(1, 1, 1).contact_order == 4
        assert WordIndex((1, 2, 2)).order == 3

    def test_e1_e1_sin_y(self, model16):
        x, y, z = model16.grid.mesh()
        f = ScalarField.from_function(model16.grid, lambda x, y, z: np.sin(y))
        out, _ = da_derivative(f, (2, 0, 0), model16)
        # e1 = sin z d_x - cos z d_y, so e1 e1 sin y = -cos^2 z sin y
        assert np.abs(out.values + np.cos(z) ** 2 * np.sin(y)).max() <= 1e-10

    @pytest.mark.parametrize("bad", [(0,), (3, 1)])
    def test_bad_letters(self, bad):
        with pytest.raises(ValueError):
            WordIndex(bad)


class TestNorms:
    @pytest.mark.parametrize("s", range(S_MAX + 1))
    def test_constant(self, grid16, s):
        assert fs_norm(ScalarField.constant(grid16, -2.0), s) == pytest.approx(2.0 * VOL_SQRT, rel=1e-14)

    def test_s0_is_l2(self, grid16):
        f = random_band_limited(grid16, 4, 5)
        assert fs_norm(f, 0) == pytest.approx(math.sqrt(inner(f, f)), rel=1e-12)

    @pytest.mark.parametrize("band,s", [(3, 4), (4, 4), (5, 6)])
    def test_refinement_invariance(self, band, s):
        a = random_band_limited(Grid(16), 6, band)
        b = random_band_limited(Grid(32), 6, band)
        assert fs_norm(a, s) == pytest.approx(fs_norm(b, s), rel=1e-9)

    @pytest.mark.parametrize("s", range(5))
    def test_recursion(self, grid16, s):
        f = random_band_limited(grid16, 7, 4)
        assert fs_norm_recursive(f, s) == pytest.approx(fs_norm(f, s), rel=1e-10)

    def test_monotone_in_s(self, grid16):
        f = random_band_limited(grid16, 8, 3)
        norms = [fs_norm(f, s) for s in range(5)]
        assert all(a <= b for a, b in zip(norms, norms[1:]))

    def test_polarization(self, grid16):
        f, g = random_band_limited(grid16, 1, 3), random_band_limited(grid16, 2, 3)
        assert fs_inner(f, f, 3) == pytest.approx(fs_norm(f, 3) ** 2, rel=1e-12)
        assert fs_inner(f, g, 2) == pytest.approx(fs_inner(g, f, 2), rel=1e-12)

    def test_s_max_enforced(self, grid16):
        with pytest.raises(ValueError):
            fs_norm(ScalarField.zeros(grid16), S_MAX + 1)

    @given(st.floats(-3, 3), st.integers(0, 4))
    @settings(max_examples=20, deadline=None)
    def test_homogeneous(self, c, s):
        f = random_band_limited(Grid(8), 5, 2)
        assert fs_norm(f * c, s) == pytest.approx(abs(c) * fs_norm(f, s), rel=1e-12, abs=1e-14)


class TestSup:
    def test_constant_ratio(self, grid16):
        f = ScalarField.constant(grid16, 1.5)
        assert sup_norm(f) / fs_norm(f, 3) == pytest.approx(VOL_SQRT ** -1, rel=1e-12)

    def test_off_grid_maximum(self, grid16):
        f = ScalarField.from_function(grid16, lambda x, y, z: np.sin(x + 0.1) * np.cos(y - 0.2))
        assert sup_norm(f) == pytest.approx(1.0, abs=1e-10)

    def test_same_on_refined_grid(self):
        a, b = random_band_limited(Grid(16), 3, 3), random_band_limited(Grid(32), 3, 3)
        assert sup_norm(a) == pytest.approx(sup_norm(b), rel=1e-9)


class TestReports:
    def test_reciprocal(self, grid16):
        r = reciprocal(ScalarField.constant(grid16, 2.0))
        assert np.abs(r.values - 0.5).max() <= 1e-15
        assert fs_norm(r, 4) == pytest.approx(0.5 * VOL_SQRT, rel=1e-14)

    def test_reciprocal_guard(self, grid16):
        with pytest.raises(ValueError, match="refusing"):
            reciprocal(ScalarField.from_function(grid16, lambda x, y, z: np.sin(x)))

    def test_sobolev_finite(self, grid16):
        rep = sobolev_ratio_report(grid16, 50, bands=(3,))
        assert rep.finite() and len(rep.rows) == 50

    def test_sobolev_refinement(self):
        a = sobolev_ratio_report(Grid(16), 4, bands=(3,), seed=2).ratios()
        b = sobolev_ratio_report(Grid(32), 4, bands=(3,), seed=2).ratios()
        np.testing.assert_allclose(a, b, rtol=1e-9)

    def test_algebra_constant_at_one(self, grid16):
        from contactlab.grid import multiply
        one, g = ScalarField.constant(grid16, 1.0), random_band_limited(grid16, 3, 3)
        ratio = fs_norm(multiply(one, g), 2) / (fs_norm(one, 4) * fs_norm(g, 2))
        assert ratio == pytest.approx(VOL_SQRT ** -1, rel=1e-12)

    def test_algebra_stability(self):
        a = algebra_constant_report(Grid(16), 50, bands=(3,))
        b = algebra_constant_report(Grid(32), 50, bands=(3,))
        assert a.finite() and abs(a.ratios().max() - b.ratios().max()) <= 0.2 * b.ratios().max()

    def test_division_finite(self, grid16):
        assert division_report(grid16, 5, bands=(2, 3)).finite()

    def test_cumulative_max(self):
        rows = [(0, 2, 1.0), (1, 2, 3.0), (0, 3, 2.0), (0, 4, 5.0)]
        assert cumulative_band_max(rows) == {(2,): 3.0, (3,): 3.0, (4,): 5.0}

    def test_hypoelliptic_and_gain(self, hodge16):
        for rep in (hypoelliptic_report(hodge16, bands=(2, 3), samples=2),
                    green_gain_report(hodge16, bands=(2, 3), samples=2)):
            assert rep.finite()
            assert all(np.isfinite(v) for v in band_drift(rep, key=lambda r: (r[0],)).values())
