"""Multi-component field containers expressed against the global frame."""

from __future__ import annotations

import dataclasses

import numpy as np

from .grid import Grid, ScalarField, _same_grid, inner

RUMIN_SIZES = (1, 2, 2, 1)
FRAME_FORM_SIZES = (1, 3, 3, 1)


class _Components:
    components: tuple

    def _check(self, n_expected: int):
        comps = tuple(self.components)
        if len(comps) != n_expected:
            raise ValueError(f"{type(self).__name__} needs {n_expected} components, got {len(comps)}")
        _same_grid(*comps)
        object.__setattr__(self, "components", comps)

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    def _new(self, comps):
        return dataclasses.replace(self, components=tuple(comps))

    def __add__(self, other):
        self._compatible(other)
        return self._new(a + b for a, b in zip(self.components, other.components))

    def __sub__(self, other):
        self._compatible(other)
        return self._new(a - b for a, b in zip(self.components, other.components))

    def __mul__(self, s: float):
        return self._new(a * s for a in self.components)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def _compatible(self, other):
        if type(other) is not type(self) or getattr(other, "degree", None) != getattr(self, "degree", None):
            raise ValueError("incompatible operands")

    def __getitem__(self, i) -> ScalarField:
        return self.components[i]

    def __len__(self):
        return len(self.components)

    def array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])

    def inner(self, other) -> float:
        """Componentwise L^2 inner product (the frame is orthonormal for the default J)."""
        self._compatible(other)
        return sum(inner(a, b) for a, b in zip(self.components, other.components))

    def l2(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def sup(self) -> float:
        return max(c.sup() for c in self.components)


@dataclasses.dataclass(frozen=True, eq=False)
class FrameVectorField(_Components):
    """X = f0 T + f1 e1 + f2 e2."""

    components: tuple

    def __post_init__(self):
        self._check(3)

    @classmethod
    def zeros(cls, grid: Grid) -> "FrameVectorField":
        return cls(tuple(ScalarField.zeros(grid) for _ in range(3)))

    @property
    def reeb_part(self) -> ScalarField:
        return self.components[0]

    def horizontal(self) -> "FrameVectorField":
        return FrameVectorField((ScalarField.zeros(self.grid), self.components[1], self.components[2]))

    def is_horizontal(self, atol: float = 0.0) -> bool:
        return self.components[0].sup() <= atol


@dataclasses.dataclass(frozen=True, eq=False)
class RuminForm(_Components):
    """Section of R^k in frame components.

    Bases: k=0 {1}; k=1 {eps1, eps2}; k=2 {eta^eps1, eta^eps2}; k=3 {eta^eps1^eps2}.
    """

    degree: int
    components: tuple

    def __post_init__(self):
        if self.degree not in (0, 1, 2, 3):
            raise ValueError(f"Rumin degree must be 0..3, got {self.degree}")
        self._check(RUMIN_SIZES[self.degree])

    @classmethod
    def zeros(cls, degree: int, grid: Grid) -> "RuminForm":
        return cls(degree, tuple(ScalarField.zeros(grid) for _ in range(RUMIN_SIZES[degree])))

    @classmethod
    def from_array(cls, degree: int, grid: Grid, arr) -> "RuminForm":
        return cls(degree, tuple(ScalarField(grid, a) for a in arr))

    def resample(self, grid: Grid) -> "RuminForm":
        return RuminForm(self.degree, tuple(c.resample(grid) for c in self.components))


@dataclasses.dataclass(frozen=True, eq=False)
class FrameForm(_Components):
    """Full differential form in the coframe (eta, eps1, eps2).

    Bases: k=0 {1}; k=1 {eta, eps1, eps2}; k=2 {eps1^eps2, eps2^eta, eta^eps1};
    k=3 {eta^eps1^eps2}.  The cyclic 2-form basis makes the default Hodge star
    the identity on components.
    """

    degree: int
    components: tuple

    def __post_init__(self):
        if self.degree not in (0, 1, 2, 3):
            raise ValueError(f"degree must be 0..3, got {self.degree}")
        self._check(FRAME_FORM_SIZES[self.degree])

    @classmethod
    def zeros(cls, degree: int, grid: Grid) -> "FrameForm":
        return cls(degree, tuple(ScalarField.zeros(grid) for _ in range(FRAME_FORM_SIZES[degree])))
