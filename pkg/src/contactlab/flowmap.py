"""Near-identity maps of the torus: exponential chart, pullbacks, group operations.

A GridMap is F(x) = L x + o + u(x) with L an integer matrix (so F descends to
the torus), o a constant offset and u a periodic displacement stored by its
values at the grid points.  Everything else about F (off-grid values,
Jacobian) comes from the trigonometric interpolant of u.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .forms import FrameVectorField, RuminForm
from .grid import (CoordForm, Grid, ScalarField, TWO_PI, _mesh, _padded_size, downsample,
                   eval_offgrid_many, exterior_derivative, partial_derivative, upsample)
from .model import ContactModel, interior_vector

INJECTIVITY_BUDGET = 0.5
MIN_JACOBIAN_DET = 0.1
MAX_DISPLACEMENT = math.pi / 2


class MapError(RuntimeError):
    pass


def wrap(v):
    """Reduce to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(v), TWO_PI)


@dataclasses.dataclass(frozen=True)
class GeodesicConfig:
    step_count: int = 32
    quadrature_nodes: int = 64
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.step_count < 8:
            raise ValueError("step_count must be at least 8")


# ---------------------------------------------------------------------------
# affine and grid maps
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class AffineMap:
    """x -> L x + o; only a torus map when L is an integer matrix."""

    linear: np.ndarray
    offset: np.ndarray

    def evaluate(self, points) -> np.ndarray:
        return np.einsum("ij,...j->...i", self.linear, points) + self.offset

    def jacobian_at(self, points) -> np.ndarray:
        return np.broadcast_to(self.linear, np.shape(points)[:-1] + (3, 3))


def rotation_shift(c: float) -> AffineMap:
    """F_c(x, y, z) = (x cos c - y sin c, x sin c + y cos c, z + c); preserves eta for every c."""
    cc, sc = math.cos(c), math.sin(c)
    L = np.array([[cc, -sc, 0.0], [sc, cc, 0.0], [0.0, 0.0, 1.0]])
    return AffineMap(L, np.array([0.0, 0.0, c]))


@dataclasses.dataclass(frozen=True, eq=False)
class GridMap:
    displacement: tuple
    linear: np.ndarray = dataclasses.field(default_factory=lambda: np.eye(3))
    offset: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(3))
    budget: float = INJECTIVITY_BUDGET

    def __post_init__(self):
        u = tuple(self.displacement)
        if len(u) != 3:
            raise ValueError("displacement needs three components")
        L = np.asarray(self.linear, dtype=float)
        if not np.allclose(L, np.round(L), atol=1e-12) or abs(round(np.linalg.det(np.round(L)))) != 1:
            raise ValueError("linear part must be an integer matrix with determinant +-1")
        object.__setattr__(self, "displacement", u)
        object.__setattr__(self, "linear", np.round(L))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        sup = self.sup_displacement()
        if sup > min(self.budget, MAX_DISPLACEMENT):
            raise MapError(f"sup displacement {sup:.3g} exceeds budget {min(self.budget, MAX_DISPLACEMENT):.3g}")
        det = self.min_jacobian_det()
        if det < MIN_JACOBIAN_DET:
            raise MapError(f"Jacobian determinant {det:.3g} below {MIN_JACOBIAN_DET}")

    # constructors -------------------------------------------------------

    @classmethod
    def identity(cls, grid: Grid) -> "GridMap":
        return cls(tuple(ScalarField.zeros(grid) for _ in range(3)))

    @classmethod
    def translation(cls, grid: Grid, vector) -> "GridMap":
        return cls(tuple(ScalarField.zeros(grid) for _ in range(3)), offset=np.asarray(vector, dtype=float))

    @classmethod
    def symmetry(cls, grid: Grid, c: float) -> "GridMap":
        """F_c as a torus map; needs c in (pi/2) Z so the rotation is a lattice map."""
        q = c / (np.pi / 2)
        if abs(q - round(q)) > 1e-12:
            raise ValueError("F_c is a torus map only for c in (pi/2) Z; use rotation_shift for pointwise checks")
        aff = rotation_shift(c)
        return cls(tuple(ScalarField.zeros(grid) for _ in range(3)), aff.linear, aff.offset)

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, linear=None, offset=None, **kw) -> "GridMap":
        """Map whose image of the grid points is ``values`` (shape (3, N, N, N))."""
        L = np.eye(3) if linear is None else np.asarray(linear, dtype=float)
        o = np.zeros(3) if offset is None else np.asarray(offset, dtype=float)
        base = np.einsum("ij,j...->i...", L, np.stack(grid.mesh())) + o[:, None, None, None]
        u = wrap(values - base)
        return cls(tuple(ScalarField(grid, c) for c in u), L, o, **kw)

    # queries ------------------------------------------------------------

    @property
    def grid(self) -> Grid:
        return self.displacement[0].grid

    def sup_displacement(self) -> float:
        return float(np.max(np.sqrt(sum(c.values ** 2 for c in self.displacement))))

    def _derivatives(self):
        return [partial_derivative(c, a) for c in self.displacement for a in range(3)]

    def min_jacobian_det(self) -> float:
        J = self.jacobian_grid()
        return float(np.min(np.linalg.det(J)))

    def affine(self) -> AffineMap:
        return AffineMap(self.linear, self.offset)

    def grid_images(self) -> np.ndarray:
        """F at the grid points, shape (N, N, N, 3)."""
        pts = self.grid.points()
        u = np.stack([c.values for c in self.displacement], -1)
        return self.affine().evaluate(pts) + u

    def jacobian_grid(self) -> np.ndarray:
        d = self._derivatives()
        J = np.stack([c.values for c in d], -1).reshape(self.grid.shape + (3, 3))
        return self.linear + J

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        u = np.moveaxis(eval_offgrid_many(self.displacement, points), 0, -1)
        return self.affine().evaluate(points) + u

    def jacobian_at(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        d = np.moveaxis(eval_offgrid_many(self._derivatives(), points), 0, -1)
        return self.linear + d.reshape(d.shape[:-1] + (3, 3))

    def sample(self, m: int):
        """(points, F(points), DF(points)) on the m^3 grid, from the interpolant."""
        pts = np.stack(_mesh(m), -1)
        u = np.stack([upsample(c.values, m) for c in self.displacement], -1)
        d = np.stack([upsample(c.values, m) for c in self._derivatives()], -1)
        return pts, self.affine().evaluate(pts) + u, self.linear + d.reshape(d.shape[:-1] + (3, 3))

    def to_binary(self, prefix) -> None:
        for name, c in zip("xyz", self.displacement):
            c.to_binary(f"{prefix}_u{name}.bin")


# ---------------------------------------------------------------------------
# exponential map
# ---------------------------------------------------------------------------

def exp_map(model: ContactModel, points, vectors, config: GeodesicConfig | None = None) -> np.ndarray:
    """exp(x, X) in coordinates; points and vectors have shape (..., 3)."""
    points = np.asarray(points, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    if model.is_default:
        return points + vectors
    config = config or GeodesicConfig()
    n = config.step_count
    h = 1.0 / n
    y, v = points.copy(), vectors.copy()

    def rhs(y, v):
        G = model.christoffels(y)
        return v, -np.einsum("...kij,...i,...j->...k", G, v, v)

    for _ in range(n):
        k1y, k1v = rhs(y, v)
        k2y, k2v = rhs(y + 0.5 * h * k1y, v + 0.5 * h * k1v)
        k3y, k3v = rhs(y + 0.5 * h * k2y, v + 0.5 * h * k2v)
        k4y, k4v = rhs(y + h * k3y, v + h * k3v)
        y = y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(v))):
            raise MapError("geodesic integration produced non-finite values")
    return y


def exp_quadratic_coeff(model: ContactModel, points, vectors, config: GeodesicConfig | None = None) -> np.ndarray:
    """-int_0^1 (1-t) Gamma(gamma(t))(gamma'(t), gamma'(t)) dt with gamma(t) = exp(x, tX).

    gamma'(t) = (dy/dX)(x, tX) X is taken by central differences in t.
    """
    points = np.asarray(points, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    if model.is_default:
        return np.zeros(np.broadcast(points, vectors).shape)
    config = config or GeodesicConfig()
    nodes, weights = np.polynomial.legendre.leggauss(config.quadrature_nodes)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    h = config.fd_step
    total = np.zeros(np.broadcast(points, vectors).shape)
    for ti, wi in zip(t, w):
        y = exp_map(model, points, ti * vectors, config)
        dy = (exp_map(model, points, (ti + h) * vectors, config)
              - exp_map(model, points, (ti - h) * vectors, config)) / (2 * h)
        G = model.christoffels(y)
        total -= wi * (1 - ti) * np.einsum("...kij,...i,...j->...k", G, dy, dy)
    return total


def metric_norm(model: ContactModel, X: FrameVectorField) -> np.ndarray:
    lam = model.j.lam(model.grid.mesh()[2])
    f0, f1, f2 = (c.values for c in X.components)
    return np.sqrt(f0 ** 2 + lam * f1 ** 2 + f2 ** 2 / lam)


def flow_from_field(model: ContactModel, X: FrameVectorField, config: GeodesicConfig | None = None,
                    budget: float = INJECTIVITY_BUDGET) -> GridMap:
    """F_X = exp o X, sampled at the grid points."""
    sup = float(np.max(metric_norm(model, X)))
    if sup > budget:
        raise MapError(f"sup |X|_g = {sup:.3g} exceeds the injectivity budget {budget}")
    v = model.frame_to_coords_vector(X)
    if model.is_default:
        return GridMap(v.components, budget=budget)
    pts = model.grid.points()
    vec = np.stack([c.values for c in v.components], -1)
    image = exp_map(model, pts, vec, config)
    return GridMap.from_values(model.grid, np.moveaxis(image, -1, 0), budget=budget)


# ---------------------------------------------------------------------------
# pullbacks
# ---------------------------------------------------------------------------

FORM_SIZES = (1, 3, 3, 1)


def _pull_values(degree: int, psi_at_F: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Pointwise pullback; psi_at_F has shape (ncomp, ...), J shape (..., 3, 3)."""
    if degree == 0:
        return psi_at_F
    if degree == 1:
        return np.einsum("i...,...ij->j...", psi_at_F, J)
    det = np.linalg.det(J)
    if degree == 2:
        # B' = det J J^{-1} B(F)
        adj = det[..., None, None] * np.linalg.inv(J)
        return np.einsum("...ji,i...->j...", adj, psi_at_F)
    return psi_at_F * det


def pullback_values(F, psi: Callable | CoordForm, points, degree: int | None = None) -> np.ndarray:
    """(F* psi) at arbitrary points; F is any object with evaluate / jacobian_at."""
    points = np.asarray(points, dtype=float)
    y = F.evaluate(points)
    J = F.jacobian_at(points)
    if isinstance(psi, CoordForm):
        degree = psi.degree
        vals = eval_offgrid_many(psi.components, y)
    else:
        if degree is None:
            raise ValueError("degree is required for closed-form psi")
        vals = np.asarray(psi(y))
    return _pull_values(degree, vals, J)


def pullback(F: GridMap, psi: Callable | CoordForm, degree: int | None = None) -> CoordForm:
    """F* psi as a grid form, evaluated on the dealiasing grid and projected."""
    grid = F.grid
    m = _padded_size(grid.n)
    pts, y, J = F.sample(m)
    if isinstance(psi, CoordForm):
        degree = psi.degree
        vals = eval_offgrid_many(psi.components, y)
    else:
        if degree is None:
            raise ValueError("degree is required for closed-form psi")
        vals = np.asarray(psi(y))
    out = _pull_values(degree, vals, J)
    return CoordForm(degree, tuple(ScalarField(grid, downsample(c, grid.n)) for c in out))


def eta_closed_form(points) -> np.ndarray:
    z = np.asarray(points)[..., 2]
    return np.stack([np.cos(z), np.sin(z), np.zeros_like(z)])


def d_eta_closed_form(points) -> np.ndarray:
    z = np.asarray(points)[..., 2]
    return np.stack([-np.cos(z), -np.sin(z), np.zeros_like(z)])


def compose_function(u: ScalarField, F: GridMap) -> ScalarField:
    """u o F as a grid function (dealiased)."""
    return pullback(F, CoordForm(0, (u,)))[0]


# ---------------------------------------------------------------------------
# Lie derivative, quadratic remainder, contact defect
# ---------------------------------------------------------------------------

def lie_derivative(model: ContactModel, X: FrameVectorField, psi: CoordForm) -> CoordForm:
    """Cartan: L_X psi = X _| d psi + d(X _| psi)."""
    v = model.frame_to_coords_vector(X)
    if psi.degree == 0:
        return interior_vector(v, exterior_derivative(psi))
    first = interior_vector(v, exterior_derivative(psi)) if psi.degree < 3 else CoordForm.zeros(2, psi.grid)
    return first + exterior_derivative(interior_vector(v, psi))


def quad_remainder(model: ContactModel, X: FrameVectorField, psi: CoordForm | None = None,
                   config: GeodesicConfig | None = None) -> CoordForm:
    """F_X* psi - psi - L_X psi; psi defaults to eta."""
    psi = model.eta() if psi is None else psi
    F = flow_from_field(model, X, config)
    return pullback(F, psi) - psi - lie_derivative(model, X, psi)


def contact_defect(model: ContactModel, F: GridMap) -> RuminForm:
    """pi_Q(F* eta)."""
    pulled = pullback(F, eta_closed_form, degree=1)
    comps = model.coords_to_frame(pulled).components
    return RuminForm(1, comps[1:])


# ---------------------------------------------------------------------------
# group operations
# ---------------------------------------------------------------------------

def compose(F: GridMap, G: GridMap) -> GridMap:
    """G o F, exact at the grid points."""
    y = F.grid_images()
    image = G.evaluate(y)
    L = G.linear @ F.linear
    o = G.linear @ F.offset + G.offset
    budget = max(F.budget, G.budget)
    return GridMap.from_values(F.grid, np.moveaxis(image, -1, 0), L, o, budget=budget)


def invert(F: GridMap, tol: float = 1e-12, max_iter: int = 50) -> GridMap:
    """F^{-1} by damped Newton on F(y) = x at every grid point."""
    grid = F.grid
    Linv = np.round(np.linalg.inv(F.linear))
    x = grid.points()
    u0 = np.stack([c.values for c in F.displacement], -1)
    y = np.einsum("ij,...j->...i", Linv, x - F.offset - u0)

    def residual(y):
        return wrap(F.evaluate(y) - x)

    r = residual(y)
    rn = np.linalg.norm(r, axis=-1)
    for _ in range(max_iter):
        if rn.max() <= tol:
            break
        step = np.linalg.solve(F.jacobian_at(y), r[..., None])[..., 0]
        lam = np.ones(rn.shape)
        for _ in range(10):
            y_try = y - lam[..., None] * step
            r_try = residual(y_try)
            rn_try = np.linalg.norm(r_try, axis=-1)
            bad = rn_try > rn
            if not bad.any():
                break
            lam = np.where(bad, 0.5 * lam, lam)
        y, r, rn = y_try, r_try, rn_try
    if rn.max() > tol:
        raise MapError(f"inversion did not converge; worst residual {rn.max():.3e}")
    Linv_o = Linv @ F.offset
    return GridMap.from_values(grid, np.moveaxis(y, -1, 0), Linv, -Linv_o, budget=F.budget)


def displacement_from_identity(F: GridMap) -> float:
    """sup |F(x) - x| over the grid, modulo the lattice."""
    d = wrap(F.grid_images() - F.grid.points())
    return float(np.max(np.linalg.norm(d, axis=-1)))
