"""Padded spectral workspace for operators with coefficients in e^{+-iz}.

Every frame coefficient of the contact model is a trigonometric polynomial
of degree one in z, so multiplying by it shifts the kz index by one.  Arrays
here use the band layout in x and y and a centred, zero-padded layout in z
(index j holds kz = j - lz).  Intermediate results inside one operator are
therefore exact; truncation happens only where a caller asks for it.
"""

from __future__ import annotations

import functools

import numpy as np

from .grid import TWO_PI, to_band, from_band


class Workspace:
    def __init__(self, n: int, pad: int = 6):
        self.n = n
        self.half = n // 2 - 1
        self.pad = pad
        self.lz = self.half + pad
        k = np.arange(-self.half, self.half + 1)
        self.kx = k[:, None, None]
        self.ky = k[None, :, None]
        self.kz_axis = np.arange(-self.lz, self.lz + 1)
        self.kz = self.kz_axis[None, None, :]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n - 1, self.n - 1, 2 * self.lz + 1)

    # layout conversion -----------------------------------------------------

    def embed(self, band: np.ndarray) -> np.ndarray:
        out = np.zeros(band.shape[:-1] + (2 * self.lz + 1,), dtype=complex)
        out[..., self.pad:self.pad + self.n - 1] = band
        return out

    def extract(self, c: np.ndarray) -> np.ndarray:
        """Band-layout coefficients; modes with |kz| > N/2 - 1 are dropped."""
        return c[..., self.pad:self.pad + self.n - 1]

    def from_values(self, values: np.ndarray) -> np.ndarray:
        return self.embed(to_band(values))

    def to_values(self, c: np.ndarray) -> np.ndarray:
        return from_band(self.extract(c))

    # linear algebra --------------------------------------------------------

    def truncate(self, c: np.ndarray, r: int) -> np.ndarray:
        return np.where(np.abs(self.kz) <= r, c, 0.0)

    def mask(self, r: int) -> np.ndarray:
        return np.broadcast_to(np.abs(self.kz) <= r, self.shape)

    @staticmethod
    def inner(a: np.ndarray, b: np.ndarray) -> float:
        return float(TWO_PI ** 3 * np.sum((np.conj(a) * b).real))

    # differential operators ------------------------------------------------

    def dx(self, c):
        return 1j * self.kx * c

    def dy(self, c):
        return 1j * self.ky * c

    def dz(self, c):
        return 1j * self.kz * c

    def shift(self, c, m: int):
        """Multiply by e^{imz}, m = +-1."""
        out = np.zeros_like(c)
        if m > 0:
            out[..., 1:] = c[..., :-1]
        else:
            out[..., :-1] = c[..., 1:]
        return out

    def cos_z(self, c):
        return 0.5 * (self.shift(c, 1) + self.shift(c, -1))

    def sin_z(self, c):
        return -0.5j * (self.shift(c, 1) - self.shift(c, -1))

    # frame <-> coordinates (pointwise rotation by z) -------------------------
    #
    # Columns of the frame matrix are T = (cos z, sin z, 0), e1 = (sin z, -cos z, 0),
    # e2 = (0, 0, 1).  The matrix is orthogonal and symmetric, hence its own inverse.

    def frame_rotate(self, v0, v1, v2):
        """(v0, v1, v2) -> (cos z v0 + sin z v1, sin z v0 - cos z v1, v2)."""
        return (self.cos_z(v0) + self.sin_z(v1), self.sin_z(v0) - self.cos_z(v1), v2)


@functools.lru_cache(maxsize=None)
def workspace(n: int) -> Workspace:
    return Workspace(n)
