"""Rumin complex of the contact model in dimension three.

    R0 --d_Q--> R1 --D_Q--> R2 --d_Q--> R3

Every operator goes through coordinates: lift the frame components, take the
spectral exterior derivative, rotate back.  Frame coefficients are degree-one
trigonometric polynomials in z, so inside the padded workspace all of this is
exact; truncation only happens at the end.

Discrete spaces.  Each degree keeps the full x, y band |k| <= N/2 - 1 but its
own z band per component, with K0 = N/2 - 3:

    R0: K0        R1: (K0+1, K0)        R2: (K0+2, K0+1)        R3: K0+2

With these bands d_Q, D_Q and d_Q map each space into the next without
truncation, so the discrete complex is exact, and the adjoints (formal adjoint
followed by projection) are exact L2 adjoints.  The Hodge solvers work on these
spaces.  The public single-operator functions apply the formal operator to the
whole grid band and truncate the result to the grid band.
"""

from __future__ import annotations

import numpy as np

from ._spectral import Workspace
from .forms import RUMIN_SIZES, FrameForm, RuminForm
from .grid import CoordForm, ScalarField
from .model import ContactModel

CONTACT_ORDER = {"d_Q0": 1, "D_Q": 2, "d_Q2": 1, "delta_Q1": 1, "D_Q_star": 2, "delta_Q3": 1}


def z_bands(n: int) -> dict[int, tuple[int, ...]]:
    k0 = n // 2 - 3
    return {0: (k0,), 1: (k0 + 1, k0), 2: (k0 + 2, k0 + 1), 3: (k0 + 2,)}


class RuminComplex:
    """Operators on padded spectral coefficients plus RuminForm wrappers.

    Coefficient forms are tuples of arrays with the workspace shape in the last
    three axes; leading batch axes are allowed.
    """

    def __init__(self, model: ContactModel):
        self.model = model
        self.grid = model.grid
        self.ws: Workspace = model.ws
        self.bands = z_bands(self.grid.n)

    # ------------------------------------------------------------------
    # coefficient-level building blocks
    # ------------------------------------------------------------------

    def _rot(self, v0, v1, v2):
        return self.ws.frame_rotate(v0, v1, v2)

    def _curl(self, A):
        ws = self.ws
        return (ws.dy(A[2]) - ws.dz(A[1]), ws.dz(A[0]) - ws.dx(A[2]), ws.dx(A[1]) - ws.dy(A[0]))

    def _div(self, B):
        ws = self.ws
        return ws.dx(B[0]) + ws.dy(B[1]) + ws.dz(B[2])

    def d0(self, c):
        (f,) = c
        ws = self.ws
        _, e1f, e2f = self._rot(ws.dx(f), ws.dy(f), ws.dz(f))
        return (e1f, e2f)

    def D(self, c):
        a, b = c
        ws = self.ws
        A = self._rot(np.zeros_like(a), a, b)
        B = self._curl(A)
        # f = -d(lift)(e1, e2) = B . T, the unique correction making d(lift + f eta) vanish on H
        f = ws.cos_z(B[0]) + ws.sin_z(B[1])
        A2 = (A[0] + ws.cos_z(f), A[1] + ws.sin_z(f), A[2])
        B2 = self._curl(A2)
        # eta^eps1 <-> (0, 0, -1), eta^eps2 <-> (sin z, -cos z, 0) in (dy^dz, dz^dx, dx^dy)
        return (-B2[2], ws.sin_z(B2[0]) - ws.cos_z(B2[1]))

    def d2(self, c):
        p, q = c
        ws = self.ws
        B = (ws.sin_z(q), -ws.cos_z(q), -p)
        # d beta = div B dx^dy^dz = -div B dV
        return (-self._div(B),)

    @staticmethod
    def star(k: int, c):
        """Default-J Hodge star on Rumin forms, R^k -> R^{3-k}."""
        if k == 1:
            a, b = c
            return (b, -a)
        if k == 2:
            p, q = c
            return (-q, p)
        return tuple(c)

    def delta1(self, c):
        (r,) = self.d2(self.star(1, c))
        return (-r,)

    def delta3(self, c):
        return tuple(-x for x in self.star(1, self.d0(c)))

    def D_star(self, c):
        # the printed sign (+ * D *) is the negative adjoint in this orientation
        return tuple(-x for x in self.star(1, self.D(self.star(2, c))))

    # projections onto the discrete spaces ------------------------------

    def project(self, k: int, c):
        return tuple(self.ws.truncate(x, r) for x, r in zip(c, self.bands[k]))

    def grid_band(self, c):
        return tuple(self.ws.truncate(x, self.ws.half) for x in c)

    def laplacian_c(self, k: int, c):
        """Discrete Laplacian on V^k (input is projected onto V^k first)."""
        P = self.project
        c = P(k, c)
        if k == 0:
            return tuple(2.0 * x for x in P(0, self.delta1(P(1, self.d0(c)))))
        if k == 1:
            dd = lambda v: P(1, self.d0(P(0, self.delta1(v))))
            first = dd(dd(c))
            second = P(1, self.D_star(P(2, self.D(c))))
            return tuple(x + y for x, y in zip(first, second))
        if k == 2:
            dd = lambda v: P(2, self.delta3(P(3, self.d2(v))))
            first = P(2, self.D(P(1, self.D_star(c))))
            second = dd(dd(c))
            return tuple(x + y for x, y in zip(first, second))
        if k == 3:
            return P(3, self.d2(P(2, self.delta3(c))))
        raise ValueError(f"degree must be 0..3, got {k}")

    # conversions --------------------------------------------------------

    def coeffs(self, form: RuminForm):
        return tuple(self.ws.from_values(c.values) for c in form.components)

    def form(self, k: int, c) -> RuminForm:
        ws = self.ws
        return RuminForm(k, tuple(ScalarField(self.grid, ws.to_values(ws.truncate(x, ws.half))) for x in c))

    def zeros_c(self, k: int, batch: tuple = ()):
        return tuple(np.zeros(batch + self.ws.shape, dtype=complex) for _ in range(RUMIN_SIZES[k]))

    @staticmethod
    def inner_c(a, b) -> float:
        return sum(Workspace.inner(x, y) for x, y in zip(a, b))

    # ------------------------------------------------------------------
    # public operators on RuminForm
    # ------------------------------------------------------------------

    def _wrap(self, op, k_in: int, k_out: int, form: RuminForm) -> RuminForm:
        if form.degree != k_in:
            raise ValueError(f"expected a degree-{k_in} form, got degree {form.degree}")
        return self.form(k_out, op(self.coeffs(form)))

    def d_Q0(self, f: RuminForm | ScalarField) -> RuminForm:
        if isinstance(f, ScalarField):
            f = RuminForm(0, (f,))
        return self._wrap(self.d0, 0, 1, f)

    def D_Q(self, alpha: RuminForm) -> RuminForm:
        return self._wrap(self.D, 1, 2, alpha)

    def d_Q2(self, beta: RuminForm) -> RuminForm:
        return self._wrap(self.d2, 2, 3, beta)

    def d_Q(self, form: RuminForm) -> RuminForm:
        return (self.d_Q0, self.D_Q, self.d_Q2)[form.degree](form)

    def delta_Q(self, form: RuminForm) -> RuminForm:
        """delta_Q on R1 (to R0) or R3 (to R2)."""
        if form.degree == 1:
            return self._wrap(self.delta1, 1, 0, form)
        if form.degree == 3:
            return self._wrap(self.delta3, 3, 2, form)
        raise ValueError("delta_Q acts on degrees 1 and 3; use D_Q_star on degree 2")

    def D_Q_star(self, beta: RuminForm) -> RuminForm:
        return self._wrap(self.D_star, 2, 1, beta)

    def laplacian(self, k: int, form: RuminForm) -> RuminForm:
        if form.degree != k:
            raise ValueError(f"expected degree {k}, got {form.degree}")
        return self.form(k, self.laplacian_c(k, self.coeffs(form)))

    def project_form(self, form: RuminForm) -> RuminForm:
        """Orthogonal projection onto the discrete space V^k."""
        return self.form(form.degree, self.project(form.degree, self.coeffs(form)))

    def pi_Q(self, beta: CoordForm) -> RuminForm:
        """Horizontal part (beta(e1), beta(e2)) of a coordinate one-form."""
        if beta.degree != 1:
            raise ValueError("pi_Q takes a one-form")
        comps = self.model.coords_to_frame(beta).components
        return RuminForm(1, comps[1:])

    def lift_two_form(self, beta: RuminForm) -> CoordForm:
        """Coordinate representative p eta^eps1 + q eta^eps2."""
        if beta.degree != 2:
            raise ValueError("expected a degree-2 Rumin form")
        p, q = beta.components
        ws = self.ws
        cp, cq = ws.from_values(p.values), ws.from_values(q.values)
        B = (ws.sin_z(cq), -ws.cos_z(cq), -cp)
        return CoordForm(2, tuple(ScalarField(self.grid, ws.to_values(ws.truncate(b, ws.half))) for b in B))

    def lift_one_form(self, alpha: RuminForm) -> CoordForm:
        if alpha.degree != 1:
            raise ValueError("expected a degree-1 Rumin form")
        a, b = alpha.components
        return self.model.frame_to_coords(FrameForm(1, (ScalarField.zeros(self.grid), a, b)))
