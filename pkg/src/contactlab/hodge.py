"""Harmonic projectors, Green operators and the Hodge decomposition.

The Rumin Laplacians only multiply by e^{+-iz}, so on spectral coefficients
they are block diagonal in (kx, ky) with blocks of size at most about 2N.  The
dense path assembles all blocks with one batched operator application and
diagonalizes them; the CG path is matrix free and deflated against the
harmonic basis.
"""

from __future__ import annotations

import dataclasses
import functools
import logging

import numpy as np

from .forms import RUMIN_SIZES, RuminForm
from .grid import from_band, random_band_limited
from .model import ContactModel
from .rumin import RuminComplex

log = logging.getLogger(__name__)

# block assembly stores (N-1)^2 blocks of side <= 2N, so dense stays cheap well past N = 12
DENSE_MAX_N = 32


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    method: str = "auto"  # auto | dense | cg
    tol: float = 1e-10
    max_iterations: int = 5000
    null_threshold: float = 1e-8

    def __post_init__(self):
        if self.method not in ("auto", "dense", "cg"):
            raise ValueError(f"unknown solver method {self.method!r}")

    def resolve(self, n: int) -> str:
        if self.method == "auto":
            return "dense" if n <= DENSE_MAX_N else "cg"
        return self.method


@dataclasses.dataclass
class SolveStats:
    degree: int
    method: str
    iterations: int
    residual: float


@dataclasses.dataclass
class _Blocks:
    index: list  # (component, kz) per block row/column
    eigvals: np.ndarray  # (nx, ny, m)
    eigvecs: np.ndarray  # (nx, ny, m, m)


@dataclasses.dataclass
class HodgeSetup:
    degree: int
    harmonic_basis: list
    method: str
    harmonic_coeffs: list = dataclasses.field(repr=False, default_factory=list)


@dataclasses.dataclass
class HodgeDecomposition:
    harmonic: RuminForm
    exact: RuminForm
    coexact: RuminForm

    def total(self) -> RuminForm:
        return self.harmonic + self.exact + self.coexact


class Hodge:
    """Hodge theory of the Rumin complex on one grid."""

    def __init__(self, model: ContactModel | RuminComplex, config: SolverConfig | None = None):
        self.complex = model if isinstance(model, RuminComplex) else RuminComplex(model)
        self.model = self.complex.model
        self.grid = self.model.grid
        self.config = config or SolverConfig()
        self.method = self.config.resolve(self.grid.n)
        self.stats: list[SolveStats] = []
        self._setups: dict[int, HodgeSetup] = {}

    # ------------------------------------------------------------------
    # dense block assembly
    # ------------------------------------------------------------------

    @functools.lru_cache(maxsize=None)
    def _blocks(self, k: int) -> _Blocks:
        cx = self.complex
        ws = cx.ws
        index = [(c, kz) for c, r in enumerate(cx.bands[k]) for kz in range(-r, r + 1)]
        m = len(index)
        cols = cx.zeros_c(k, (m,))
        for j, (c, kz) in enumerate(index):
            cols[c][j, :, :, ws.lz + kz] = 1.0
        out = cx.laplacian_c(k, cols)
        mat = np.empty((ws.n - 1, ws.n - 1, m, m), dtype=complex)
        for i, (c, kz) in enumerate(index):
            mat[:, :, i, :] = np.moveaxis(out[c][:, :, :, ws.lz + kz], 0, -1)
        mat = 0.5 * (mat + np.conj(np.swapaxes(mat, -1, -2)))
        w, v = np.linalg.eigh(mat)
        return _Blocks(index, w, v)

    def _to_block(self, k: int, c) -> np.ndarray:
        lz = self.complex.ws.lz
        idx = self._blocks(k).index
        return np.stack([c[comp][..., lz + kz] for comp, kz in idx], -1)

    def _from_block(self, k: int, vec: np.ndarray):
        cx = self.complex
        out = cx.zeros_c(k, vec.shape[:-3])
        for j, (comp, kz) in enumerate(self._blocks(k).index):
            out[comp][..., cx.ws.lz + kz] = vec[..., j]
        return out

    def _dense_apply(self, k: int, c, spectral_fn):
        b = self._blocks(k)
        vec = self._to_block(k, c)
        coef = np.einsum("xyji,...xyj->...xyi", np.conj(b.eigvecs), vec)
        coef = coef * spectral_fn(b.eigvals)
        return self._from_block(k, np.einsum("xyij,...xyj->...xyi", b.eigvecs, coef))

    def _null_mask(self, w):
        return np.abs(w) < self.config.null_threshold

    # ------------------------------------------------------------------
    # harmonic forms
    # ------------------------------------------------------------------

    def setup(self, k: int) -> HodgeSetup:
        if k not in self._setups:
            self._setups[k] = self._build_setup(k)
        return self._setups[k]

    def _build_setup(self, k: int) -> HodgeSetup:
        cx = self.complex
        b = self._blocks(k)
        null = self._null_mask(b.eigvals)
        vals = []
        for ix, iy, j in zip(*np.nonzero(null)):
            vec = np.zeros(b.eigvecs.shape[:-1], dtype=complex)
            vec[ix, iy, :] = b.eigvecs[ix, iy, :, j]
            c = self._from_block(k, vec)
            values = np.stack([from_band(cx.ws.extract(x), real=False) for x in c])
            vals.extend([values.real, values.imag])
        basis_vals = _orthonormalize(vals, self.grid.cell_volume)
        forms = [RuminForm.from_array(k, self.grid, v) for v in basis_vals]
        coeffs = [cx.project(k, cx.coeffs(f)) for f in forms]
        return HodgeSetup(k, forms, self.method, coeffs)

    def harmonic_basis(self, k: int) -> list:
        return list(self.setup(k).harmonic_basis)

    def _harmonic_c(self, k: int, c):
        out = self.complex.zeros_c(k)
        for h in self.setup(k).harmonic_coeffs:
            s = self.complex.inner_c(h, c)
            out = tuple(o + s * x for o, x in zip(out, h))
        return out

    def H(self, form: RuminForm) -> RuminForm:
        k = form.degree
        return self.complex.form(k, self._harmonic_c(k, self.complex.coeffs(form)))

    # ------------------------------------------------------------------
    # Green operator
    # ------------------------------------------------------------------

    def green_c(self, k: int, c, method: str | None = None):
        cx = self.complex
        method = method or self.method
        c = cx.project(k, c)
        if method == "dense":
            def inv(w):
                safe = np.where(self._null_mask(w), 1.0, w)
                return np.where(self._null_mask(w), 0.0, 1.0 / safe)
            u = self._dense_apply(k, c, inv)
            lu = cx.laplacian_c(k, u)
            rhs = _sub(c, self._harmonic_c(k, c))
            res = _norm(_sub(lu, rhs)) / max(_norm(rhs), 1e-300)
            self.stats.append(SolveStats(k, "dense", 0, res))
            return u
        if method == "cg":
            return self._cg(k, c)
        raise ValueError(f"unknown method {method!r}")

    def _deflate(self, k, c):
        return _sub(c, self._harmonic_c(k, c))

    def _cg(self, k: int, c):
        cx = self.complex
        A = lambda v: cx.laplacian_c(k, v)
        b = self._deflate(k, c)
        bnorm = _norm(b)
        x = cx.zeros_c(k)
        if bnorm == 0.0:
            self.stats.append(SolveStats(k, "cg", 0, 0.0))
            return x
        r = b
        p = r
        rr = cx.inner_c(r, r)
        tol = self.config.tol
        for it in range(1, self.config.max_iterations + 1):
            Ap = A(p)
            alpha = rr / cx.inner_c(p, Ap)
            x = _axpy(x, alpha, p)
            r = _axpy(r, -alpha, Ap)
            if it % 50 == 0:
                r = self._deflate(k, _sub(b, A(x)))
            rr_new = cx.inner_c(r, r)
            if np.sqrt(rr_new) <= tol * bnorm:
                x = self._deflate(k, x)
                res = _norm(_sub(b, A(x))) / bnorm
                self.stats.append(SolveStats(k, "cg", it, res))
                return x
            p = _axpy(r, rr_new / rr, p)
            rr = rr_new
        res = _norm(_sub(b, A(x))) / bnorm
        raise SolverError(f"CG for degree {k} did not converge", res, self.config.max_iterations)

    def G(self, form: RuminForm, method: str | None = None) -> RuminForm:
        k = form.degree
        return self.complex.form(k, self.green_c(k, self.complex.coeffs(form), method))

    # ------------------------------------------------------------------
    # decomposition and commutation checks
    # ------------------------------------------------------------------

    def decompose(self, form: RuminForm) -> HodgeDecomposition:
        """Orthogonal decomposition of the projection of form onto the discrete space."""
        cx = self.complex
        P = cx.project
        k = form.degree
        c = P(k, cx.coeffs(form))
        zero = cx.zeros_c(k)
        harm = self._harmonic_c(k, c)
        if k == 0:
            exact, coexact = zero, _sub(c, harm)
        elif k == 3:
            exact, coexact = _sub(c, harm), zero
        else:
            if k == 1:
                dd = lambda v: P(1, cx.d0(P(0, cx.delta1(v))))
                ex_rhs = dd(dd(c))
                co_rhs = P(1, cx.D_star(P(2, cx.D(c))))
            else:
                dd = lambda v: P(2, cx.delta3(P(3, cx.d2(v))))
                ex_rhs = P(2, cx.D(P(1, cx.D_star(c))))
                co_rhs = dd(dd(c))
            exact = self.green_c(k, ex_rhs)
            coexact = self.green_c(k, co_rhs)
        return HodgeDecomposition(cx.form(k, harm), cx.form(k, exact), cx.form(k, coexact))

    def verify_commutations(self, seed: int = 0, band: int = 3) -> dict:
        """Residuals of P H = H P = 0 and of d G f = 1/2 G d delta d f."""
        cx = self.complex
        P = cx.project
        rng = np.random.default_rng(seed)
        band = min(band, cx.bands[0][0])

        def rand_form(k):
            return RuminForm(k, tuple(random_band_limited(self.grid, int(rng.integers(2**31)), band)
                                      for _ in range(RUMIN_SIZES[k])))

        ops = {
            "d_Q0": (0, 1, cx.d0), "D_Q": (1, 2, cx.D), "d_Q2": (2, 3, cx.d2),
            "delta_Q1": (1, 0, cx.delta1), "D_Q_star": (2, 1, cx.D_star), "delta_Q3": (3, 2, cx.delta3),
        }
        report = {}
        for name, (k_in, k_out, op) in ops.items():
            ph = max([_norm(P(k_out, op(h))) for h in self.setup(k_in).harmonic_coeffs] + [0.0])
            w = cx.coeffs(rand_form(k_in))
            img = P(k_out, op(P(k_in, w)))
            hp = _norm(self._harmonic_c(k_out, img)) / max(_norm(img), 1e-300)
            report[f"{name}_H"] = ph
            report[f"H_{name}"] = hp
        f = P(0, cx.coeffs(rand_form(0)))
        lhs = P(1, cx.d0(self.green_c(0, f)))
        rhs = self.green_c(1, P(1, cx.d0(P(0, cx.delta1(P(1, cx.d0(f)))))))
        rhs = tuple(0.5 * x for x in rhs)
        report["dG-halfGddd"] = _norm(_sub(lhs, rhs)) / max(_norm(lhs), 1e-300)
        return report


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _axpy(y, a, x):
    return tuple(yi + a * xi for yi, xi in zip(y, x))


def _norm(c) -> float:
    return float(np.sqrt(max(RuminComplex.inner_c(c, c), 0.0)))


def _orthonormalize(vals: list, cell_volume: float, rtol: float = 1e-8) -> list:
    if not vals:
        return []
    A = np.stack([v.ravel() for v in vals], 1) * np.sqrt(cell_volume)
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    keep = s > rtol * s.max()
    basis = u[:, keep] / np.sqrt(cell_volume)
    # fix signs for reproducibility
    basis = basis * np.sign(basis[np.argmax(np.abs(basis), 0), np.arange(basis.shape[1])])
    return [basis[:, j].reshape(vals[0].shape) for j in range(basis.shape[1])]
