"""Contact vector fields, the map Phi and the solver for Psi = Phi^{-1} o pi o Phi.

For n = 1 and a vector field X = X0 T + X_H,

    g_X     = -2 G delta(X_H _| d eta) + H(X0)
    alpha_X =  2 G delta(beta)
    omega_X =  G D* D(beta) + H(beta),        beta = pi_Q(F_X* eta)

and the linearization at 0 has the explicit inverse
(g, alpha, omega) -> (g + alpha) T + sharp(-d_Q g + omega).
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

from .folland_stein import fs_norm
from .forms import FrameVectorField, RuminForm
from .flowmap import (GeodesicConfig, GridMap, compose, compose_function, contact_defect,
                      displacement_from_identity, flow_from_field, invert, lie_derivative)
from .grid import CoordForm, ScalarField, exterior_derivative, multiply
from .hodge import Hodge
from .model import ContactModel

DEFAULT_SMALLNESS = 0.1


@dataclasses.dataclass(frozen=True, eq=False)
class GeneratingFunction:
    g: ScalarField
    smallness: float = DEFAULT_SMALLNESS

    def __post_init__(self):
        if self.g.sup() > self.smallness:
            raise ValueError(f"sup|g| = {self.g.sup():.3g} exceeds smallness {self.smallness}")


@dataclasses.dataclass(frozen=True, eq=False)
class PhiValue:
    g: ScalarField
    alpha: ScalarField
    omega: RuminForm

    def __sub__(self, other: "PhiValue") -> "PhiValue":
        return PhiValue(self.g - other.g, self.alpha - other.alpha, self.omega - other.omega)

    def __add__(self, other: "PhiValue") -> "PhiValue":
        return PhiValue(self.g + other.g, self.alpha + other.alpha, self.omega + other.omega)

    def __mul__(self, s: float) -> "PhiValue":
        return PhiValue(self.g * s, self.alpha * s, self.omega * s)

    __rmul__ = __mul__

    def l2(self) -> float:
        return math.sqrt(self.g.l2() ** 2 + self.alpha.l2() ** 2 + self.omega.l2() ** 2)

    @classmethod
    def zeros(cls, grid) -> "PhiValue":
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid), RuminForm.zeros(1, grid))


@dataclasses.dataclass
class SolveReport:
    """defect_l2 / defect_fs: the full grid defect; defect_projected: its part in the
    discrete space V^1, which is what the iteration can drive to zero."""

    iterations: int
    defect_l2: list
    defect_fs: list
    converged: bool
    defect_projected: list = dataclasses.field(default_factory=list)
    criterion: str = "full"
    X: FrameVectorField | None = dataclasses.field(default=None, repr=False)

    def to_dict(self) -> dict:
        r = lambda v: [float(f"{x:.12g}") for x in v]
        return {"iterations": self.iterations, "converged": self.converged, "criterion": self.criterion,
                "defect_l2": r(self.defect_l2), "defect_fs": r(self.defect_fs),
                "defect_projected": r(self.defect_projected)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class SolverFailure(RuntimeError):
    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class ContactDiffeo:
    """Phi, its linearization and the Psi solver on one model."""

    def __init__(self, hodge: Hodge, geodesic: GeodesicConfig | None = None, fs_s: int = 2):
        self.hodge = hodge
        self.complex = hodge.complex
        self.model: ContactModel = hodge.model
        self.grid = self.model.grid
        self.geodesic = geodesic or GeodesicConfig()
        self.fs_s = fs_s

    @classmethod
    def for_grid(cls, n: int, **kw) -> "ContactDiffeo":
        return cls(Hodge(ContactModel(n, **kw)))

    # helpers ------------------------------------------------------------

    def _green(self, form: RuminForm) -> RuminForm:
        return self.hodge.G(form)

    def _project(self, form: RuminForm) -> RuminForm:
        return self.complex.project_form(form)

    def _g(self, g) -> ScalarField:
        return g.g if isinstance(g, GeneratingFunction) else g

    # contact fields -------------------------------------------------------

    def contact_field_from_g(self, g) -> FrameVectorField:
        """X_g = g T - sharp(d_Q g)."""
        g = self._g(g)
        dg = self.complex.d_Q0(g)
        sharp = self.model.sharp(dg)
        return FrameVectorField((g, -sharp[1], -sharp[2]))

    def check_contact_field(self, X: FrameVectorField) -> dict:
        """Residuals of the three characterizing conditions of contact fields."""
        cx, h = self.complex, self.hodge
        xi = self._project(self.model.flat(X))  # X _| d eta restricted to H
        x0 = RuminForm(0, (X.components[0],))
        a = x0 - h.H(x0) + 2.0 * h.G(cx.delta_Q(xi))
        b = h.H(xi)
        c = cx.D_Q(xi)
        scale = max(X.l2(), 1e-300)
        return {"a": a.l2() / scale, "b": b.l2() / scale, "c": c.l2() / scale}

    def pi_q_lie_eta(self, X: FrameVectorField) -> RuminForm:
        """pi_Q(L_X eta) through the coordinate Cartan formula."""
        return self.complex.pi_Q(lie_derivative(self.model, X, self.model.eta()))

    # Phi ----------------------------------------------------------------

    def flow(self, X: FrameVectorField) -> GridMap:
        return flow_from_field(self.model, X, self.geodesic)

    def defect(self, X: FrameVectorField) -> RuminForm:
        return contact_defect(self.model, self.flow(X))

    def phi(self, X: FrameVectorField, beta: RuminForm | None = None) -> PhiValue:
        cx, h = self.complex, self.hodge
        xi = self._project(self.model.flat(X))
        x0 = RuminForm(0, (X.components[0],))
        g = h.H(x0) - 2.0 * h.G(cx.delta_Q(xi))
        if beta is None:
            beta = self.defect(X)
        beta = self._project(beta)
        alpha = 2.0 * h.G(cx.delta_Q(beta))
        omega = h.G(cx.D_Q_star(cx.D_Q(beta))) + h.H(beta)
        return PhiValue(g[0], alpha[0], omega)

    def dphi0_inverse(self, v: PhiValue) -> FrameVectorField:
        """(g, alpha, omega) -> (g + alpha) T + sharp(-d_Q g + omega)."""
        w = self.complex.d_Q0(v.g) * -1.0 + v.omega
        sharp = self.model.sharp(w)
        return FrameVectorField((v.g + v.alpha, sharp[1], sharp[2]))

    def dphi0(self, X: FrameVectorField, step: float = 1e-4) -> PhiValue:
        """Central-difference directional derivative of Phi at 0."""
        return (self.phi(X * step) - self.phi(X * -step)) * (0.5 / step)

    # Psi solver -----------------------------------------------------------

    def solve_psi(self, g, tol: float = 1e-9, max_iter: int = 20,
                  criterion: str = "full") -> tuple[FrameVectorField, SolveReport]:
        """Frozen-Jacobian Newton for Phi(X) = (g_{X_g}, 0, 0), started at X_g.

        ``criterion`` picks the stopping quantity: the full grid defect
        ||pi_Q F_X* eta||_0 ("full") or its projection onto the discrete
        space ("projected").  The latter is the residual of the discrete
        equations; the former additionally contains the part of the defect
        the grid cannot represent.
        """
        if criterion not in ("full", "projected"):
            raise ValueError(f"unknown criterion {criterion!r}")
        g = self._g(g)
        X = self.contact_field_from_g(g)
        report = SolveReport(0, [], [], False, criterion=criterion)
        if g.sup() == 0.0:
            report.converged = True
            report.X = X
            for hist in (report.defect_l2, report.defect_fs, report.defect_projected):
                hist.append(0.0)
            return X, report
        target = None
        for it in range(max_iter + 1):
            beta = self.defect(X)
            report.defect_l2.append(beta.l2())
            report.defect_fs.append(fs_norm(beta, self.fs_s))
            report.defect_projected.append(self._project(beta).l2())
            if not np.isfinite(report.defect_l2[-1]):
                raise SolverFailure("non-finite contact defect", report)
            value = self.phi(X, beta)
            if target is None:
                target = PhiValue(value.g, ScalarField.zeros(self.grid), RuminForm.zeros(1, self.grid))
            measured = report.defect_l2[-1] if criterion == "full" else report.defect_projected[-1]
            if measured <= tol:
                report.converged = True
                break
            if it == max_iter:
                break
            X = X - self.dphi0_inverse(value - target)
            report.iterations = it + 1
        report.X = X
        if not report.converged:
            raise SolverFailure(f"Psi solver did not reach {criterion} defect {tol:g} in {max_iter} "
                                f"iterations (last full {report.defect_l2[-1]:.3e}, projected "
                                f"{report.defect_projected[-1]:.3e})", report)
        return X, report

    def contact_map(self, g, tol: float = 1e-9, max_iter: int = 20, criterion: str = "full") -> GridMap:
        X, _ = self.solve_psi(g, tol, max_iter, criterion)
        return self.flow(X)

    # experiments ----------------------------------------------------------

    def quadratic_scaling_experiment(self, g: ScalarField, s_list=(0, 1, 2),
                                     t_list=(0.08, 0.04, 0.02, 0.01), tol: float = 1e-11,
                                     criterion: str = "projected") -> dict:
        """Slopes of log ||Psi(X_tg) - X_tg||_s against log t."""
        rows = []
        for t in t_list:
            Xg = self.contact_field_from_g(g * t)
            X, rep = self.solve_psi(g * t, tol=tol, criterion=criterion)
            diff = X - Xg
            for s in s_list:
                rows.append((t, s, fs_norm(diff, s), fs_norm(Xg, s), rep.iterations))
        slopes = {}
        for s in s_list:
            pts = [(r[0], r[2]) for r in rows if r[1] == s]
            if len(pts) < 2 or min(p[1] for p in pts) <= 0.0:
                slopes[s] = float("nan")
                continue
            x, y = np.log(np.array(pts)).T
            slopes[s] = float(np.polyfit(x, y, 1)[0])
        return {"rows": rows, "slopes": slopes}

    def mixed_norm_sweep(self, amplitude: float = 0.02, modes=(1, 2, 3, 4), s: int = 2,
                         tol: float = 1e-11, criterion: str = "projected") -> dict:
        """||Psi(X) - X||_s / (||X||_s ||X||_{s-1}) for g = amplitude sin(m x) / m^2."""
        rows = []
        for m in modes:
            g = ScalarField.from_function(self.grid, lambda x, y, z: amplitude * np.sin(m * x) / m ** 2)
            Xg = self.contact_field_from_g(g)
            X, _ = self.solve_psi(g, tol=tol, criterion=criterion)
            num = fs_norm(X - Xg, s)
            rows.append((m, s, num, fs_norm(Xg, s) * fs_norm(Xg, s - 1),
                         num / (fs_norm(Xg, s) * fs_norm(Xg, s - 1)),
                         num / fs_norm(Xg, s) ** 2))
        mixed = [r[4] for r in rows]
        return {"rows": rows, "max_over_min": float(max(mixed) / min(mixed))}

    def difference_scaling_experiment(self, g1: ScalarField, g2: ScalarField, s: int = 2,
                                      t_list=(0.05, 0.025, 0.0125), tol: float = 1e-11,
                                      criterion: str = "projected") -> dict:
        rows = []
        for t in t_list:
            X1g, X2g = self.contact_field_from_g(g1 * t), self.contact_field_from_g(g2 * t)
            X1 = self.solve_psi(g1 * t, tol=tol, criterion=criterion)[0] if g1.sup() > 0 else X1g
            X2 = self.solve_psi(g2 * t, tol=tol, criterion=criterion)[0] if g2.sup() > 0 else X2g
            lhs = fs_norm((X2 - X2g) - (X1 - X1g), s)
            d = X2g - X1g
            rhs = (fs_norm(d, s - 1) * (fs_norm(X2g, s) + fs_norm(X1g, s))
                   + fs_norm(d, s) * (fs_norm(X2g, s - 1) + fs_norm(X1g, s - 1)))
            rows.append((t, lhs, rhs, lhs / rhs if rhs > 0 else float("nan")))
        ratios = [r[3] for r in rows]
        return {"rows": rows, "drift": float((max(ratios) - min(ratios)) / max(ratios))}

    def composition_derivative_check(self, u: ScalarField, h: ScalarField,
                                     t_list=(1.0, 0.5, 0.25, 0.125), tol: float = 1e-11,
                                     criterion: str = "projected") -> dict:
        """|| (u o F_{th} - u)/t - X_h _| du ||_0 against t at g = 0."""
        Xh = self.contact_field_from_g(h)
        du = exterior_derivative(CoordForm(0, (u,)))
        v = self.model.frame_to_coords_vector(Xh)
        target = sum((multiply(v[i], du[i]) for i in range(3)), ScalarField.zeros(self.grid))
        rows = []
        for t in t_list:
            if h.sup() == 0.0:
                rows.append((t, 0.0))
                continue
            F = self.contact_map(h * t, tol=tol, criterion=criterion)
            q = (compose_function(u, F) - u) * (1.0 / t) - target
            rows.append((t, q.l2()))
        errs = [r[1] for r in rows]
        if min(errs) <= 0.0:
            order = float("inf")
        else:
            order = float(np.polyfit(np.log(t_list), np.log(errs), 1)[0])
        return {"rows": rows, "order": order, "target_l2": target.l2()}

    def group_closure_experiment(self, g1: ScalarField, g2: ScalarField, tol: float = 1e-9,
                                 criterion: str = "full") -> dict:
        F1 = self.contact_map(g1, tol=tol, criterion=criterion)
        F2 = self.contact_map(g2, tol=tol, criterion=criterion)
        F21 = compose(F1, F2)
        F1inv = invert(F1)
        ident = compose(F1inv, F1)
        return {
            "defect_F1": contact_defect(self.model, F1).l2(),
            "defect_F2": contact_defect(self.model, F2).l2(),
            "defect_F2oF1": contact_defect(self.model, F21).l2(),
            "defect_F1inv": contact_defect(self.model, F1inv).l2(),
            "sup_F1oF1inv_minus_id": displacement_from_identity(compose(F1, F1inv)),
            "sup_F1invoF1_minus_id": displacement_from_identity(ident),
            "maps": (F1, F2),
        }
