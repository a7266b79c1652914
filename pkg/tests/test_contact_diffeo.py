"""Contact fields, Phi, its linearization and the Psi solver."""

import json

import numpy as np
import pytest

from contactlab.contact_diffeo import GeneratingFunction, PhiValue, SolverFailure
from contactlab.forms import FrameVectorField, RuminForm
from contactlab.grid import ScalarField, random_band_limited


def const(grid, c):
    return ScalarField.constant(grid, c)


def sin_x(grid, a=0.05):
    return ScalarField.from_function(grid, lambda x, y, z: a * np.sin(x))


class TestContactFields:
    def test_one_gives_reeb(self, diffeo16):
        g = diffeo16.grid
        X = diffeo16.contact_field_from_g(const(g, 1.0))
        assert np.all(X.components[0].values == 1.0) and X.horizontal().sup() == 0.0

    def test_zero(self, diffeo16):
        assert diffeo16.contact_field_from_g(ScalarField.zeros(diffeo16.grid)).sup() == 0.0

    def test_sin_x(self, diffeo16):
        g = diffeo16.grid
        x, y, z = g.mesh()
        X = diffeo16.contact_field_from_g(sin_x(g))
        assert np.abs(X.components[0].values - 0.05 * np.sin(x)).max() <= 1e-15
        assert X.components[1].sup() <= 1e-14
        assert np.abs(X.components[2].values - 0.05 * np.sin(z) * np.cos(x)).max() <= 1e-12
        assert diffeo16.pi_q_lie_eta(X).l2() <= 1e-10

    @pytest.mark.parametrize("seed", range(3))
    def test_residuals_small(self, diffeo16, seed):
        X = diffeo16.contact_field_from_g(random_band_limited(diffeo16.grid, seed, 3, 0.05))
        assert max(diffeo16.check_contact_field(X).values()) <= 1e-6

    def test_e1_flagged(self, diffeo16):
        g = diffeo16.grid
        e1 = FrameVectorField((ScalarField.zeros(g), const(g, 1.0), ScalarField.zeros(g)))
        assert diffeo16.pi_q_lie_eta(e1).l2() > 1e-3
        assert max(diffeo16.check_contact_field(e1).values()) > 1e-3

    def test_reeb_residuals(self, diffeo16):
        g = diffeo16.grid
        T = FrameVectorField((const(g, 1.0), ScalarField.zeros(g), ScalarField.zeros(g)))
        res = diffeo16.check_contact_field(T)
        assert res["b"] == 0.0 and res["c"] == 0.0 and res["a"] <= 1e-14

    def test_smallness(self, grid16):
        with pytest.raises(ValueError, match="smallness"):
            GeneratingFunction(const(grid16, 0.5))


class TestPhi:
    def test_zero(self, diffeo16):
        assert diffeo16.phi(FrameVectorField.zeros(diffeo16.grid)).l2() <= 1e-14

    def test_reconstruction(self, diffeo16):
        cx, g = diffeo16.complex, diffeo16.grid
        X = FrameVectorField(tuple(random_band_limited(g, 5 + i, 2, 0.03) for i in range(3)))
        beta = cx.project_form(diffeo16.defect(X))
        v = diffeo16.phi(X, beta)
        recon = cx.d_Q0(v.alpha) + v.omega
        assert (recon - beta).l2() <= 1e-5 * beta.l2()
        # alpha is mean-zero; omega is closed under the discrete codifferential (delta then projection)
        assert abs(np.mean(v.alpha.values)) <= 1e-8 * v.alpha.sup()
        assert cx.project_form(cx.delta_Q(v.omega)).l2() <= 1e-6 * v.omega.l2()

    def test_inverse_of_generating_component(self, diffeo16):
        g = random_band_limited(diffeo16.grid, 2, 3, 0.05)
        z = ScalarField.zeros(diffeo16.grid)
        X = diffeo16.dphi0_inverse(PhiValue(g, z, RuminForm.zeros(1, diffeo16.grid)))
        assert (X - diffeo16.contact_field_from_g(g)).sup() <= 1e-14

    def test_inverse_of_zero(self, diffeo16):
        assert diffeo16.dphi0_inverse(PhiValue.zeros(diffeo16.grid)).sup() == 0.0

    def test_linearization_roundtrip(self, diffeo16):
        cx, h, grid = diffeo16.complex, diffeo16.hodge, diffeo16.grid
        worst = 0.0
        for s in range(20):
            g = random_band_limited(grid, 100 + s, 2, 0.02)
            a1 = RuminForm(1, tuple(random_band_limited(grid, 200 + s + 7 * i, 2, 0.02) for i in range(2)))
            alpha = cx.delta_Q(a1)[0]
            b2 = RuminForm(2, tuple(random_band_limited(grid, 300 + s + 7 * i, 2, 0.02) for i in range(2)))
            omega = cx.D_Q_star(b2) + h.harmonic_basis(1)[s % 3] * 0.01
            v = PhiValue(g, alpha, omega)
            back = diffeo16.dphi0(diffeo16.dphi0_inverse(v))
            worst = max(worst, (back - v).l2() / v.l2())
        assert worst <= 1e-5


class TestSolver:
    def test_zero(self, diffeo16):
        X, rep = diffeo16.solve_psi(ScalarField.zeros(diffeo16.grid))
        assert X.sup() == 0.0 and rep.iterations == 0 and rep.converged

    def test_constant(self, diffeo16):
        X, rep = diffeo16.solve_psi(const(diffeo16.grid, 0.05))
        assert rep.converged and rep.iterations <= 3 and rep.defect_l2[-1] <= 1e-9

    def test_projected_criterion(self, diffeo16):
        X, rep = diffeo16.solve_psi(sin_x(diffeo16.grid), criterion="projected")
        assert rep.converged and rep.defect_projected[-1] <= 1e-9
        hist = [d for d in rep.defect_projected if d < 1e-3]
        assert all(b <= 0.5 * a for a, b in zip(hist, hist[1:]))
        v = diffeo16.phi(X)
        assert v.alpha.l2() <= 1e-6 and v.omega.l2() <= 1e-6

    def test_failure_is_reported(self, diffeo16):
        with pytest.raises(SolverFailure) as info:
            diffeo16.solve_psi(sin_x(diffeo16.grid), tol=1e-30, max_iter=2)
        assert info.value.report.iterations == 2 and not info.value.report.converged

    def test_report_json(self, diffeo16):
        _, rep = diffeo16.solve_psi(const(diffeo16.grid, 0.02))
        d = json.loads(rep.to_json())
        assert d["converged"] is True and d["criterion"] == "full"

    def test_bad_criterion(self, diffeo16):
        with pytest.raises(ValueError):
            diffeo16.solve_psi(const(diffeo16.grid, 0.02), criterion="loose")


class TestExperiments:
    def test_zero_scaling(self, diffeo16):
        res = diffeo16.quadratic_scaling_experiment(ScalarField.zeros(diffeo16.grid), t_list=(0.1, 0.05))
        assert all(r[2] == 0.0 for r in res["rows"])

    def test_difference_equal_inputs(self, diffeo16):
        g = sin_x(diffeo16.grid, 1.0)
        res = diffeo16.difference_scaling_experiment(g, g, t_list=(0.05,))
        assert res["rows"][0][1] == 0.0

    def test_difference_degenerates(self, diffeo16):
        g = sin_x(diffeo16.grid, 1.0)
        res = diffeo16.difference_scaling_experiment(ScalarField.zeros(diffeo16.grid), g, t_list=(0.05,))
        quad = diffeo16.quadratic_scaling_experiment(g, s_list=(2,), t_list=(0.05,))
        assert res["rows"][0][1] == pytest.approx(quad["rows"][0][2], rel=1e-8)

    def test_comp_derivative_trivial(self, diffeo16):
        g = diffeo16.grid
        u = sin_x(g, 1.0)
        res = diffeo16.composition_derivative_check(u, ScalarField.zeros(g), t_list=(1.0, 0.5))
        assert all(r[1] == 0.0 for r in res["rows"])
        res = diffeo16.composition_derivative_check(const(g, 2.0), sin_x(g), t_list=(1.0, 0.5))
        assert res["target_l2"] == 0.0 and all(r[1] <= 1e-12 for r in res["rows"])

    def test_group_of_zeros(self, diffeo16):
        z = ScalarField.zeros(diffeo16.grid)
        res = diffeo16.group_closure_experiment(z, z)
        assert max(v for k, v in res.items() if k != "maps") <= 1e-13
