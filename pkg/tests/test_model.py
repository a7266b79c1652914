"""Contact model: frame identities, musical maps, star, coframe conversions, metric."""

import numpy as np
import pytest

from contactlab.forms import FrameForm, FrameVectorField, RuminForm
from contactlab.grid import (CoordForm, Grid, ScalarField, integrate, partial_derivative,
                             random_band_limited, wedge)
from contactlab.model import ContactModel, JChoice, frame_matrix


def sin_x(grid):
    return ScalarField.from_function(grid, lambda x, y, z: np.sin(x))


def rand_frame_form(grid, k, seed, band=3):
    return FrameForm(k, tuple(random_band_limited(grid, seed + i, band) for i in range((1, 3, 3, 1)[k])))


@pytest.mark.parametrize("kind", ["default", "anisotropic"])
def test_invariants(kind):
    report = ContactModel(16, kind).verify()
    assert max(report.values()) <= 1e-12, report


def test_frame_matrix_is_orthogonal_involution():
    z = np.linspace(0, 6, 13)
    F = frame_matrix(z)
    np.testing.assert_allclose(F @ F, np.broadcast_to(np.eye(3), F.shape), atol=1e-15)
    np.testing.assert_allclose(F, np.swapaxes(F, -1, -2))


def test_unknown_j_choice():
    with pytest.raises(ValueError):
        JChoice("conformal")


class TestFrameDerivatives:
    @pytest.mark.parametrize("i", [1, 2])
    def test_constant(self, model16, i):
        assert model16.apply_horizontal(ScalarField.constant(model16.grid, 2.0), i).sup() == 0.0

    def test_e1_sin_x(self, model16):
        x, y, z = model16.grid.mesh()
        out = model16.apply_horizontal(sin_x(model16.grid), 1)
        assert np.abs(out.values - np.sin(z) * np.cos(x)).max() <= 1e-12

    def test_e1_kills_z_only(self, model16):
        f = ScalarField.from_function(model16.grid, lambda x, y, z: np.cos(2 * z))
        assert model16.apply_horizontal(f, 1).sup() <= 1e-13

    def test_reeb_sin_x(self, model16):
        x, y, z = model16.grid.mesh()
        assert np.abs(model16.apply_reeb(sin_x(model16.grid)).values - np.cos(z) * np.cos(x)).max() <= 1e-12

    def test_reeb_constant(self, model16):
        assert model16.apply_reeb(ScalarField.constant(model16.grid, 1.0)).sup() == 0.0

    def test_bracket(self, model16):
        f = random_band_limited(model16.grid, 4, 3)
        e = model16.apply_horizontal
        lhs = model16.apply_reeb(f)
        rhs = -(e(e(f, 2), 1) - e(e(f, 1), 2))
        assert (lhs - rhs).sup() <= 1e-10

    def test_bad_index(self, model16):
        with pytest.raises(ValueError):
            model16.apply_horizontal(sin_x(model16.grid), 3)


class TestMusical:
    def test_sharp_flat_roundtrip(self, model8, rng):
        g = model8.grid
        for _ in range(100):
            a, b = (ScalarField(g, rng.standard_normal(g.shape)) for _ in range(2))
            X = FrameVectorField((ScalarField.zeros(g), a, b))
            assert (model8.sharp(model8.flat(X)) - X).sup() <= 1e-12

    def test_flat_reeb(self, model8):
        g = model8.grid
        T = FrameVectorField((ScalarField.constant(g, 1.0), ScalarField.zeros(g), ScalarField.zeros(g)))
        assert model8.flat(T).sup() == 0.0

    def test_flat_e1(self, model8):
        g = model8.grid
        e1 = FrameVectorField((ScalarField.zeros(g), ScalarField.constant(g, 1.0), ScalarField.zeros(g)))
        p, q = model8.flat(e1).components
        assert p.sup() == 0.0 and np.all(q.values == 1.0)


class TestStar:
    def test_star_of_one(self, model8):
        one = FrameForm(0, (ScalarField.constant(model8.grid, 1.0),))
        out = model8.hodge_star(one)
        assert out.degree == 3 and np.all(out.components[0].values == 1.0)

    @pytest.mark.parametrize("kind", ["default", "anisotropic"])
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_involution(self, kind, k):
        m = ContactModel(8, kind)
        w = rand_frame_form(m.grid, k, 10 * k)
        assert (m.hodge_star(m.hodge_star(w)) - w).sup() <= 1e-12

    @pytest.mark.parametrize("kind", ["default", "anisotropic"])
    def test_wedge_star_is_norm(self, kind):
        m = ContactModel(16, kind)
        a = rand_frame_form(m.grid, 1, 3, band=2)
        top = wedge(m.frame_to_coords(a), m.frame_to_coords(m.hodge_star(a)))
        # dV = eta ^ eps1 ^ eps2 = -dx^dy^dz
        lhs = -integrate(top.components[0])
        rhs = m.form_inner(a, a)
        if kind == "default":
            assert lhs == pytest.approx(a.l2() ** 2, rel=1e-10)
        # the anisotropic weight is not band-limited, so only quadrature accuracy is expected
        assert lhs == pytest.approx(rhs, rel=1e-6 if kind == "anisotropic" else 1e-10)


class TestCoframe:
    def test_dz(self, model8):
        g = model8.grid
        dz = CoordForm(1, (ScalarField.zeros(g), ScalarField.zeros(g), ScalarField.constant(g, 1.0)))
        c0, c1, c2 = model8.coords_to_frame(dz).components
        assert c0.sup() <= 1e-15 and c1.sup() <= 1e-15 and np.abs(c2.values - 1).max() <= 1e-15

    def test_eta(self, model8):
        c0, c1, c2 = model8.coords_to_frame(model8.eta()).components
        assert np.abs(c0.values - 1).max() <= 1e-15 and max(c1.sup(), c2.sup()) <= 1e-15

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_roundtrip(self, model16, k):
        w = rand_frame_form(model16.grid, k, 40 + k)
        assert (model16.coords_to_frame(model16.frame_to_coords(w)) - w).sup() <= 1e-12

    def test_d_eta(self, model16):
        from contactlab.grid import exterior_derivative
        assert (exterior_derivative(model16.eta()) - model16.d_eta()).sup() <= 1e-12


class TestMetric:
    def test_default_christoffels_vanish(self, model8, rng):
        assert np.all(model8.christoffels(rng.uniform(0, 6, (10, 3))) == 0.0)

    @staticmethod
    def fd_christoffels(m, p, h=1e-5):
        g = m.metric_coords(p)
        dg = np.zeros((3, 3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            dg[k] = (m.metric_coords(p + e) - m.metric_coords(p - e)) / (2 * h)
        lower = 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - np.einsum("lij->lij", dg))
        return np.einsum("kl,lij->kij", np.linalg.inv(g), lower)

    @pytest.mark.parametrize("kind,scale,tol", [("anisotropic", 1.0, 1e-6), ("anisotropic", 2.5, 1e-6)])
    def test_against_finite_differences(self, kind, scale, tol, rng):
        m = ContactModel(8, kind, scale=scale)
        pts = rng.uniform(0, 2 * np.pi, (50, 3))
        err = max(np.abs(self.fd_christoffels(m, p) - m.christoffels(p)).max() for p in pts)
        assert err <= tol

    def test_constant_lambda_matches_fd(self, rng):
        m = ContactModel(8, JChoice("anisotropic", epsilon=0.0, scale=3.0))
        pts = rng.uniform(0, 2 * np.pi, (20, 3))
        err = max(np.abs(self.fd_christoffels(m, p) - m.christoffels(p)).max() for p in pts)
        assert err <= 1e-8

    def test_metric_z_derivative(self, aniso8, rng):
        p = rng.uniform(0, 6, (5, 3))
        h = 1e-6
        e = np.array([0, 0, h])
        fd = (aniso8.metric_coords(p + e) - aniso8.metric_coords(p - e)) / (2 * h)
        np.testing.assert_allclose(aniso8.metric_coords_dz(p), fd, atol=1e-8)
