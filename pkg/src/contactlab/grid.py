"""Periodic pseudospectral fields on the 3-torus [0, 2pi)^3.

A field is stored by its values on the uniform N^3 grid.  Spectrally it is
represented by the trigonometric interpolant

    f(x) = sum_k c_k exp(i k.x),   |k_j| <= N/2 - 1,

i.e. every public operation returns fields whose Nyquist modes are zero
(the "retained space").  Derivatives are exact on that space and products
are dealiased by 3/2 zero padding, so for band-limited input the results
are exact up to rounding.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi
AXES = {"x": 0, "y": 1, "z": 2}


@dataclasses.dataclass(frozen=True)
class Grid:
    """Uniform N^3 grid on [0, 2pi)^3; point (i, j, k) sits at 2pi (i, j, k) / N."""

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {n!r}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def half(self) -> int:
        """Largest retained wavenumber, N/2 - 1."""
        return self.n // 2 - 1

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    def coords(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _mesh(self.n)

    def points(self) -> np.ndarray:
        """Grid points as an array of shape (N, N, N, 3)."""
        return np.stack(self.mesh(), axis=-1)


@functools.lru_cache(maxsize=None)
def _mesh(n: int):
    x = np.arange(n) * (TWO_PI / n)
    out = np.meshgrid(x, x, x, indexing="ij")
    for a in out:
        a.flags.writeable = False
    return tuple(out)


# ---------------------------------------------------------------------------
# spectral layout helpers
#
# "band layout": complex array of shape (..., N-1, N-1, N-1); index j on each
# axis holds wavenumber j - (N/2 - 1).  Nyquist modes are not stored.
# ---------------------------------------------------------------------------

def to_band(values: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    c = np.fft.fftn(values, axes=(-3, -2, -1)) / n ** 3
    c = np.fft.fftshift(c, axes=(-3, -2, -1))
    return c[..., 1:, 1:, 1:]


def from_band(coeffs: np.ndarray, real: bool = True) -> np.ndarray:
    m = coeffs.shape[-1]
    n = m + 1
    full = np.zeros(coeffs.shape[:-3] + (n, n, n), dtype=complex)
    full[..., 1:, 1:, 1:] = coeffs
    full = np.fft.ifftshift(full, axes=(-3, -2, -1))
    out = np.fft.ifftn(full, axes=(-3, -2, -1)) * n ** 3
    return out.real if real else out


def resample_band(coeffs: np.ndarray, n_new: int) -> np.ndarray:
    """Zero-pad or truncate band-layout coefficients to grid size ``n_new``."""
    m_old = coeffs.shape[-1]
    m_new = n_new - 1
    h_old, h_new = m_old // 2, m_new // 2
    h = min(h_old, h_new)
    out = np.zeros(coeffs.shape[:-3] + (m_new,) * 3, dtype=complex)
    src = slice(h_old - h, h_old + h + 1)
    dst = slice(h_new - h, h_new + h + 1)
    out[..., dst, dst, dst] = coeffs[..., src, src, src]
    return out


def band_inner(a: np.ndarray, b: np.ndarray) -> float:
    """L^2 inner product of two real fields given by band coefficients."""
    return float(TWO_PI ** 3 * np.sum((np.conj(a) * b).real))


def _padded_size(n: int) -> int:
    m = (3 * n) // 2
    return m + (m % 2)


def upsample(values: np.ndarray, m: int) -> np.ndarray:
    """Values of the retained-space interpolant on an m^3 grid (m even, m >= n)."""
    n = values.shape[-1]
    c = to_band(values)
    full = np.zeros(values.shape[:-3] + (m, m, m), dtype=complex)
    lo = m // 2 - (n // 2 - 1)
    sl = slice(lo, lo + n - 1)
    full[..., sl, sl, sl] = c
    full = np.fft.ifftshift(full, axes=(-3, -2, -1))
    return np.fft.ifftn(full, axes=(-3, -2, -1)).real * m ** 3


def downsample(values_fine: np.ndarray, n: int) -> np.ndarray:
    """Project fine-grid values onto the retained space of the n-grid."""
    m = values_fine.shape[-1]
    c = np.fft.fftn(values_fine, axes=(-3, -2, -1)) / m ** 3
    c = np.fft.fftshift(c, axes=(-3, -2, -1))
    lo = m // 2 - (n // 2 - 1)
    sl = slice(lo, lo + n - 1)
    return from_band(c[..., sl, sl, sl])


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class ScalarField:
    """Real-valued function on the periodic grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("field values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable) -> "ScalarField":
        x, y, z = grid.mesh()
        return cls(grid, np.broadcast_to(func(x, y, z), grid.shape))

    @classmethod
    def from_band(cls, grid: Grid, coeffs: np.ndarray) -> "ScalarField":
        return cls(grid, from_band(coeffs))

    def band(self) -> np.ndarray:
        return to_band(self.values)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _same_grid(self, other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _same_grid(self, other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __rsub__(self, other):
        return ScalarField(self.grid, other - self.values)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __mul__(self, a):
        if isinstance(a, ScalarField):
            raise TypeError("use multiply() for the dealiased product of two fields")
        return ScalarField(self.grid, self.values * a)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return ScalarField(self.grid, self.values / a)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2(self) -> float:
        return float(np.sqrt(integrate_values(self.values ** 2, self.grid)))

    def band_limit(self, rtol: float = 1e-12) -> int:
        """Smallest B such that modes with max |k_j| > B are below rtol relative."""
        c = np.abs(self.band())
        scale = max(float(c.max()), 1e-300)
        h = self.grid.half
        k = np.abs(np.arange(-h, h + 1))
        kmax = np.maximum(np.maximum(k[:, None, None], k[None, :, None]), k[None, None, :])
        big = kmax[c > rtol * scale]
        return int(big.max()) if big.size else 0

    def resample(self, grid: Grid) -> "ScalarField":
        return ScalarField(grid, from_band(resample_band(self.band(), grid.n)))

    def to_csv(self, path) -> None:
        write_csv(path, [self])

    def to_binary(self, path) -> None:
        np.asarray(self.values, dtype="<f8").tofile(path)

    @classmethod
    def from_binary(cls, grid: Grid, path) -> "ScalarField":
        return cls(grid, np.fromfile(path, dtype="<f8").reshape(grid.shape))


def _same_grid(*fields: ScalarField) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError("fields live on different grids")
    return g


def write_csv(path, fields: Sequence[ScalarField], names: Sequence[str] | None = None) -> None:
    """Dump fields row-major in (i, j, k) with 12 significant digits."""
    grid = _same_grid(*fields)
    names = list(names or [f"f{i}" for i in range(len(fields))])
    idx = np.indices(grid.shape).reshape(3, -1).T
    cols = [f.values.reshape(-1) for f in fields]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "k", *names])
        for row, (i, j, k) in enumerate(idx):
            w.writerow([i, j, k, *(f"{c[row]:.12g}" for c in cols)])


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def _wavenumbers(n: int) -> np.ndarray:
    h = n // 2 - 1
    return np.arange(-h, h + 1)


def partial_derivative(f: ScalarField, axis: str | int) -> ScalarField:
    ax = AXES[axis] if isinstance(axis, str) else int(axis)
    k = _wavenumbers(f.grid.n)
    shape = [1, 1, 1]
    shape[ax] = -1
    c = f.band() * (1j * k.reshape(shape))
    return ScalarField(f.grid, from_band(c))


def multiply(f: ScalarField, g: ScalarField) -> ScalarField:
    """Dealiased pointwise product (3/2 zero padding, truncated to the retained space)."""
    grid = _same_grid(f, g)
    m = _padded_size(grid.n)
    fine = upsample(f.values, m) * upsample(g.values, m)
    return ScalarField(grid, downsample(fine, grid.n))


def apply_pointwise(func: Callable, *fields: ScalarField, with_coords: bool = False) -> ScalarField:
    """Dealiased nonlinear pointwise map.

    ``func`` receives the padded-grid values of each field (and the padded
    coordinates x, y, z when ``with_coords``) and returns padded-grid values.
    """
    grid = _same_grid(*fields) if fields else None
    if grid is None:
        raise ValueError("apply_pointwise needs at least one field")
    m = _padded_size(grid.n)
    args = [upsample(f.values, m) for f in fields]
    if with_coords:
        args.extend(_mesh(m))
    out = np.broadcast_to(func(*args), (m, m, m))
    return ScalarField(grid, downsample(np.asarray(out, dtype=float), grid.n))


def integrate_values(values: np.ndarray, grid: Grid) -> float:
    return float(np.sum(values) * grid.cell_volume)


def integrate(f: ScalarField) -> float:
    return integrate_values(f.values, f.grid)


def inner(f: ScalarField, g: ScalarField) -> float:
    _same_grid(f, g)
    return integrate_values(f.values * g.values, f.grid)


def _offgrid_basis(coord: np.ndarray, n: int) -> np.ndarray:
    k = np.arange(-n // 2, n // 2)
    e = np.exp(1j * coord[:, None] * k[None, :])
    # the Nyquist mode is interpolated by cos(N x / 2) so the interpolant stays real
    e[:, 0] = np.cos(coord * (n // 2))
    return e


def eval_offgrid(f: ScalarField, points, chunk: int = 4096) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary points.

    Direct summation over all grid modes, separable in the three axes.
    ``points`` has shape (..., 3); it is reduced mod 2pi.
    """
    pts = np.mod(np.asarray(points, dtype=float), TWO_PI)
    lead = pts.shape[:-1]
    pts = pts.reshape(-1, 3)
    n = f.grid.n
    c = np.fft.fftshift(np.fft.fftn(f.values) / n ** 3)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        ex, ey, ez = (_offgrid_basis(p[:, a], n) for a in range(3))
        t = np.einsum("abc,pc->pab", c, ez, optimize=True)
        t = np.einsum("pab,pb->pa", t, ey, optimize=True)
        out[s:s + chunk] = np.einsum("pa,pa->p", t, ex, optimize=True).real
    return out.reshape(lead)


def eval_offgrid_many(fields: Sequence[ScalarField], points) -> np.ndarray:
    return np.stack([eval_offgrid(f, points) for f in fields])


def random_band_limited(grid: Grid, seed: int, band: int, amplitude: float = 1.0) -> ScalarField:
    """Deterministic real random field with spectrum inside |k_j| <= band.

    The coefficients depend only on (seed, band), so the same seed gives the
    same function on every grid that resolves it.  The field is scaled so the
    l^1 norm of its coefficients equals ``amplitude``, which bounds sup|f|.
    """
    if band < 0 or band >= grid.n // 2:
        raise ValueError(f"band must satisfy 0 <= band < N/2 = {grid.n // 2}, got {band}")
    rng = np.random.default_rng(seed)
    m = 2 * band + 1
    c = rng.standard_normal((m, m, m)) + 1j * rng.standard_normal((m, m, m))
    c = 0.5 * (c + np.conj(c[::-1, ::-1, ::-1]))
    c *= amplitude / np.sum(np.abs(c))
    return ScalarField(grid, from_band(resample_band(c, grid.n)))


# ---------------------------------------------------------------------------
# coordinate differential forms
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class CoordForm:
    """Differential form in coordinate components.

    degree 0: (f,); degree 1: (dx, dy, dz); degree 2: (dy^dz, dz^dx, dx^dy);
    degree 3: (dx^dy^dz,).
    """

    degree: int
    components: tuple

    def __post_init__(self):
        expected = (1, 3, 3, 1)[self.degree]
        comps = tuple(self.components)
        if len(comps) != expected:
            raise ValueError(f"degree {self.degree} form needs {expected} components, got {len(comps)}")
        _same_grid(*comps)
        object.__setattr__(self, "components", comps)

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    def __getitem__(self, i) -> "ScalarField":
        return self.components[i]

    def __len__(self):
        return len(self.components)

    def __add__(self, other: "CoordForm") -> "CoordForm":
        _check_degree(self, other)
        return CoordForm(self.degree, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "CoordForm") -> "CoordForm":
        _check_degree(self, other)
        return CoordForm(self.degree, tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, s: float) -> "CoordForm":
        return CoordForm(self.degree, tuple(a * s for a in self.components))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])

    def l2(self) -> float:
        return float(np.sqrt(sum(c.l2() ** 2 for c in self.components)))

    def sup(self) -> float:
        return max(c.sup() for c in self.components)

    @classmethod
    def from_array(cls, degree: int, grid: Grid, arr: np.ndarray) -> "CoordForm":
        return cls(degree, tuple(ScalarField(grid, a) for a in arr))

    @classmethod
    def zeros(cls, degree: int, grid: Grid) -> "CoordForm":
        return cls(degree, tuple(ScalarField.zeros(grid) for _ in range((1, 3, 3, 1)[degree])))


def _check_degree(a: CoordForm, b: CoordForm):
    if a.degree != b.degree:
        raise ValueError("degree mismatch")


def exterior_derivative(form: CoordForm) -> CoordForm:
    """Spectral exterior derivative of a coordinate form."""
    d = partial_derivative
    c = form.components
    if form.degree == 0:
        f = c[0]
        return CoordForm(1, (d(f, 0), d(f, 1), d(f, 2)))
    if form.degree == 1:
        ax, ay, az = c
        return CoordForm(2, (d(az, 1) - d(ay, 2), d(ax, 2) - d(az, 0), d(ay, 0) - d(ax, 1)))
    if form.degree == 2:
        byz, bzx, bxy = c
        return CoordForm(3, (d(byz, 0) + d(bzx, 1) + d(bxy, 2),))
    return CoordForm.zeros(3, form.grid)


def wedge(a: CoordForm, b: CoordForm) -> CoordForm:
    """Dealiased wedge product for degrees adding up to at most 3."""
    if a.degree + b.degree > 3:
        raise ValueError("wedge degree exceeds 3")
    m = multiply
    if a.degree == 0:
        return CoordForm(b.degree, tuple(m(a.components[0], c) for c in b.components))
    if b.degree == 0:
        return wedge(b, a)
    if a.degree == 1 and b.degree == 1:
        (a1, a2, a3), (b1, b2, b3) = a.components, b.components
        return CoordForm(2, (m(a2, b3) - m(a3, b2), m(a3, b1) - m(a1, b3), m(a1, b2) - m(a2, b1)))
    one, two = (a, b) if a.degree == 1 else (b, a)
    s = sum((m(x, y) for x, y in zip(one.components, two.components)), ScalarField.zeros(a.grid))
    return CoordForm(3, (s,))
