"""The compact contact manifold T^3 with eta = cos z dx + sin z dy.

Frame:  T = cos z d/dx + sin z d/dy,  e1 = sin z d/dx - cos z d/dy,  e2 = d/dz,
coframe (eta, eps1, eps2) with eps1 = sin z dx - cos z dy, eps2 = dz.
Then d eta = eps1 ^ eps2, [e1, e2] = -T and eta ^ d eta (T, e1, e2) = 1.

The frame is orthonormal for the Euclidean metric but left-handed in
(x, y, z): dV = eta ^ eps1 ^ eps2 = -dx ^ dy ^ dz.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ._spectral import workspace
from .forms import FrameForm, FrameVectorField, RuminForm
from .grid import CoordForm, Grid, ScalarField, random_band_limited

FRAME_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class JChoice:
    """Compatible complex structure on H.

    ``default``: J e1 = e2, J e2 = -e1, adapted metric Euclidean.
    ``anisotropic``: J e1 = lam e2, J e2 = -e1 / lam with lam(z) = scale * exp(epsilon cos z);
    the adapted metric is diag(1, lam, 1/lam) in the frame.
    """

    kind: str = "default"
    epsilon: float = 0.3
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("default", "anisotropic"):
            raise ValueError(f"unknown J choice {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("lambda scale must be positive")

    def lam(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "default":
            return np.ones_like(z)
        return self.scale * np.exp(self.epsilon * np.cos(z))

    def dlam(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "default":
            return np.zeros_like(z)
        return -self.epsilon * np.sin(z) * self.lam(z)


def frame_matrix(z) -> np.ndarray:
    """Columns T, e1, e2 in coordinates; shape (..., 3, 3).  Symmetric and orthogonal."""
    z = np.asarray(z, dtype=float)
    c, s = np.cos(z), np.sin(z)
    o, i = np.zeros_like(z), np.ones_like(z)
    return np.stack([np.stack([c, s, o], -1), np.stack([s, -c, o], -1), np.stack([o, o, i], -1)], -2)


def _frame_matrix_dz(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    c, s = np.cos(z), np.sin(z)
    o = np.zeros_like(z)
    return np.stack([np.stack([-s, c, o], -1), np.stack([c, s, o], -1), np.stack([o, o, o], -1)], -2)


class ContactModel:
    """Immutable bundle of the contact structure, frame, J and metric on a grid."""

    def __init__(self, grid: Grid | int, j_choice: JChoice | str = "default", *,
                 epsilon: float = 0.3, scale: float = 1.0, verify: bool = True):
        self.grid = grid if isinstance(grid, Grid) else Grid(int(grid))
        if isinstance(j_choice, str):
            j_choice = JChoice(j_choice, epsilon, scale)
        self.j = j_choice
        self.ws = workspace(self.grid.n)
        if verify:
            report = self.verify()
            bad = {k: v for k, v in report.items() if v > FRAME_TOL * 10}
            if bad:
                raise ValueError(f"contact model invariants violated: {bad}")

    @property
    def is_default(self) -> bool:
        return self.j.kind == "default"

    def with_grid(self, grid: Grid | int) -> "ContactModel":
        return ContactModel(grid, self.j, verify=False)

    # ------------------------------------------------------------------
    # spectral helpers
    # ------------------------------------------------------------------

    def _c(self, f: ScalarField):
        return self.ws.from_values(f.values)

    def _field(self, c) -> ScalarField:
        ws = self.ws
        return ScalarField(self.grid, ws.to_values(ws.truncate(c, ws.half)))

    # ------------------------------------------------------------------
    # frame derivatives
    # ------------------------------------------------------------------

    def apply_horizontal(self, f: ScalarField, i: int) -> ScalarField:
        """e_i f for i in {1, 2}."""
        ws = self.ws
        c = self._c(f)
        if i == 1:
            return self._field(ws.sin_z(ws.dx(c)) - ws.cos_z(ws.dy(c)))
        if i == 2:
            return self._field(ws.dz(c))
        raise ValueError(f"horizontal index must be 1 or 2, got {i}")

    def apply_reeb(self, f: ScalarField) -> ScalarField:
        ws = self.ws
        c = self._c(f)
        return self._field(ws.cos_z(ws.dx(c)) + ws.sin_z(ws.dy(c)))

    # ------------------------------------------------------------------
    # closed-form structure
    # ------------------------------------------------------------------

    def eta(self) -> CoordForm:
        x, y, z = self.grid.mesh()
        g = self.grid
        return CoordForm(1, (ScalarField(g, np.cos(z)), ScalarField(g, np.sin(z)), ScalarField.zeros(g)))

    def d_eta(self) -> CoordForm:
        """d eta = sin z dx^dz - cos z dy^dz, stored as (dy^dz, dz^dx, dx^dy)."""
        x, y, z = self.grid.mesh()
        g = self.grid
        return CoordForm(2, (ScalarField(g, -np.cos(z)), ScalarField(g, -np.sin(z)), ScalarField.zeros(g)))

    @staticmethod
    def eta_at(points) -> np.ndarray:
        """Coordinate components of eta at arbitrary points, shape (3, ...)."""
        z = np.asarray(points)[..., 2]
        return np.stack([np.cos(z), np.sin(z), np.zeros_like(z)])

    # ------------------------------------------------------------------
    # frame <-> coordinates
    # ------------------------------------------------------------------

    def _rotate(self, comps):
        ws = self.ws
        out = ws.frame_rotate(*(self._c(f) for f in comps))
        return tuple(self._field(c) for c in out)

    def frame_to_coords_vector(self, X: FrameVectorField) -> CoordForm:
        """Coordinate components (X^x, X^y, X^z), stored as a degree-1 container."""
        return CoordForm(1, self._rotate(X.components))

    def coords_to_frame_vector(self, v: CoordForm) -> FrameVectorField:
        return FrameVectorField(self._rotate(v.components))

    def frame_to_coords(self, form: FrameForm) -> CoordForm:
        k = form.degree
        if k == 0:
            return CoordForm(0, form.components)
        if k == 1:
            return CoordForm(1, self._rotate(form.components))
        if k == 2:
            return CoordForm(2, tuple(-c for c in self._rotate(form.components)))
        return CoordForm(3, (-form.components[0],))

    def coords_to_frame(self, form: CoordForm) -> FrameForm:
        k = form.degree
        if k == 0:
            return FrameForm(0, form.components)
        if k == 1:
            return FrameForm(1, self._rotate(form.components))
        if k == 2:
            return FrameForm(2, tuple(-c for c in self._rotate(form.components)))
        return FrameForm(3, (-form.components[0],))

    # ------------------------------------------------------------------
    # musical maps, projection and star
    # ------------------------------------------------------------------

    @staticmethod
    def flat(X: FrameVectorField) -> RuminForm:
        """X -> X _| d eta restricted to H; flat(a e1 + b e2) = -b eps1 + a eps2."""
        _, a, b = X.components
        return RuminForm(1, (-b, a))

    @staticmethod
    def sharp(phi: RuminForm) -> FrameVectorField:
        """Inverse of flat on H; sharp(p eps1 + q eps2) = q e1 - p e2."""
        if phi.degree != 1:
            raise ValueError("sharp takes a horizontal one-form")
        p, q = phi.components
        return FrameVectorField((ScalarField.zeros(p.grid), q, -p))

    def pi_h(self, beta: CoordForm) -> CoordForm:
        """pi_H(beta) = T _| (eta ^ beta), computed in coordinates."""
        from .grid import wedge
        B = wedge(self.eta(), beta)
        T = self.frame_to_coords_vector(_reeb_field(self.grid))
        return interior_vector(T, B)

    def hodge_star(self, form: FrameForm) -> FrameForm:
        """Star of the adapted metric, fixed by alpha ^ *beta = <alpha, beta> dV."""
        k = form.degree
        if self.is_default or k in (0, 3):
            return FrameForm(3 - k, form.components)
        lam = self.j.lam(self.grid.mesh()[2])
        c0, c1, c2 = form.components
        g = self.grid
        if k == 1:
            return FrameForm(2, (c0, ScalarField(g, c1.values / lam), ScalarField(g, c2.values * lam)))
        return FrameForm(1, (c0, ScalarField(g, c1.values * lam), ScalarField(g, c2.values / lam)))

    def form_inner(self, a: FrameForm, b: FrameForm) -> float:
        """Pointwise metric inner product integrated over T^3."""
        if a.degree != b.degree:
            raise ValueError("degree mismatch")
        w = self._metric_weights(a.degree)
        vol = self.grid.cell_volume
        return float(sum(np.sum(wi * x.values * y.values) for wi, x, y in zip(w, a.components, b.components)) * vol)

    def _metric_weights(self, k: int):
        if k in (0, 3):
            return (1.0,)
        lam = self.j.lam(self.grid.mesh()[2])
        if k == 1:
            return (1.0, 1.0 / lam, lam)
        return (1.0, lam, 1.0 / lam)

    # ------------------------------------------------------------------
    # metric
    # ------------------------------------------------------------------

    def metric_frame(self, z) -> np.ndarray:
        lam = self.j.lam(z)
        one = np.ones_like(lam)
        return np.stack([one, lam, 1.0 / lam], -1)

    def metric_coords(self, points) -> np.ndarray:
        """g_ij at points (..., 3); returns (..., 3, 3)."""
        z = np.asarray(points, dtype=float)[..., 2]
        F = frame_matrix(z)
        D = self.metric_frame(z)
        return np.einsum("...ia,...a,...ja->...ij", F, D, F)

    def metric_coords_dz(self, points) -> np.ndarray:
        z = np.asarray(points, dtype=float)[..., 2]
        F, dF = frame_matrix(z), _frame_matrix_dz(z)
        lam, dlam = self.j.lam(z), self.j.dlam(z)
        D = self.metric_frame(z)
        dD = np.stack([np.zeros_like(lam), dlam, -dlam / lam ** 2], -1)
        return (np.einsum("...ia,...a,...ja->...ij", dF, D, F)
                + np.einsum("...ia,...a,...ja->...ij", F, dD, F)
                + np.einsum("...ia,...a,...ja->...ij", F, D, dF))

    def christoffels(self, points) -> np.ndarray:
        """Gamma^k_ij at points (..., 3), returned with index order (..., k, i, j)."""
        points = np.asarray(points, dtype=float)
        if self.is_default:
            return np.zeros(points.shape[:-1] + (3, 3, 3))
        g = self.metric_coords(points)
        dg = self.metric_coords_dz(points)
        ginv = np.linalg.inv(g)
        # d_m g_ab is nonzero only for m = z
        lower = np.zeros(points.shape[:-1] + (3, 3, 3))  # Gamma_{l i j}
        lower[..., :, 2, :] += dg
        lower[..., :, :, 2] += dg
        lower[..., 2, :, :] -= dg
        return 0.5 * np.einsum("...kl,...lij->...kij", ginv, lower)

    # ------------------------------------------------------------------
    # invariants
    # ------------------------------------------------------------------

    def verify(self) -> dict:
        """Pointwise residuals of the defining identities of the model."""
        z = self.grid.mesh()[2]
        F = frame_matrix(z)
        T, e1, e2 = F[..., :, 0], F[..., :, 1], F[..., :, 2]
        eta = np.stack([np.cos(z), np.sin(z), np.zeros_like(z)], -1)
        deta_B = np.stack([-np.cos(z), -np.sin(z), np.zeros_like(z)], -1)

        def deta(u, v):
            return np.einsum("...i,...i->...", deta_B, np.cross(u, v))

        def dot(a, b):
            return np.einsum("...i,...i->...", a, b)

        out = {
            "eta(T)-1": np.abs(dot(eta, T) - 1).max(),
            "T_|deta": max(np.abs(deta(T, e1)).max(), np.abs(deta(T, e2)).max()),
            "eta(e1),eta(e2)": max(np.abs(dot(eta, e1)).max(), np.abs(dot(eta, e2)).max()),
            "deta(e1,e2)-1": np.abs(deta(e1, e2) - 1).max(),
        }
        # eta ^ d eta on (T, e1, e2): only the eta(T) deta(e1, e2) term survives
        vol = dot(eta, T) * deta(e1, e2) - dot(eta, e1) * deta(T, e2) + dot(eta, e2) * deta(T, e1)
        out["eta^deta(T,e1,e2)-1"] = np.abs(vol - 1).max()
        lam = self.j.lam(z)
        J = np.zeros(z.shape + (2, 2))
        J[..., 1, 0] = lam
        J[..., 0, 1] = -1.0 / lam
        out["J^2+1"] = np.abs(J @ J + np.eye(2)).max()
        rng = np.random.default_rng(0)
        ab = rng.standard_normal((64, 2))
        # d eta(X, JX) = lam a^2 + b^2 / lam for X = a e1 + b e2
        lam_s = self.j.lam(rng.uniform(0, 2 * np.pi, 64))
        out["-min deta(X,JX)"] = max(0.0, -float(np.min(lam_s * ab[:, 0] ** 2 + ab[:, 1] ** 2 / lam_s)))
        f = random_band_limited(self.grid, 12345, min(2, self.grid.half - 2), 1.0)
        br = (self.apply_horizontal(self.apply_horizontal(f, 2), 1)
              - self.apply_horizontal(self.apply_horizontal(f, 1), 2)
              + self.apply_reeb(f))
        out["[e1,e2]+T"] = br.sup()
        return {k: float(v) for k, v in out.items()}


def _reeb_field(grid: Grid) -> FrameVectorField:
    return FrameVectorField((ScalarField.constant(grid, 1.0), ScalarField.zeros(grid), ScalarField.zeros(grid)))


def reeb_field(grid: Grid) -> FrameVectorField:
    return _reeb_field(grid)


def interior_vector(X: CoordForm, form: CoordForm) -> CoordForm:
    """X _| form for a coordinate vector X (stored as a degree-1 container)."""
    from .grid import multiply
    x = X.components
    k = form.degree
    if k == 1:
        s = multiply(x[0], form[0]) + multiply(x[1], form[1]) + multiply(x[2], form[2])
        return CoordForm(0, (s,))
    if k == 2:
        # X _| beta corresponds to B x X for the dual vector B of beta
        b = form.components
        return CoordForm(1, (multiply(b[1], x[2]) - multiply(b[2], x[1]),
                             multiply(b[2], x[0]) - multiply(b[0], x[2]),
                             multiply(b[0], x[1]) - multiply(b[1], x[0])))
    if k == 3:
        r = form.components[0]
        return CoordForm(2, tuple(multiply(r, xi) for xi in x))
    return CoordForm.zeros(0, form.grid)
