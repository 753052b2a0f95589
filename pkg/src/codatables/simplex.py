"""Aitchison geometry of the D-part simplex.

Compositions are positive vectors that carry only ratio information. The
operations here never close their inputs implicitly: every function is scale
invariant, so raw counts and proportions give the same answer. Call
:func:`close` explicitly when a constant-sum representative is wanted.

Coordinates are always evaluated as ``V.T @ clr(x)`` for a dense contrast
matrix ``V`` held by a :class:`CoordinateSystem`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import DimensionError, InvalidComposition, NotInClrPlane

ALGEBRA_TOL = 1e-12
INPUT_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_positive(values: np.ndarray, what: str = "part") -> None:
    if not np.all(np.isfinite(values)):
        raise InvalidComposition(f"non-finite {what} in {values!r}")
    if np.any(values <= 0):
        raise InvalidComposition(f"nonpositive {what} in {values!r}")


@dataclass(frozen=True, eq=False)
class Composition:
    """A D-part composition (any positive representative of its class)."""

    parts: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        parts = np.asarray(self.parts, dtype=float)
        if parts.ndim != 1 or parts.size < 2:
            raise InvalidComposition(f"a composition needs a 1-D vector of D >= 2 parts, got shape {parts.shape}")
        check_positive(parts)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != parts.size:
                raise DimensionError(f"{len(labels)} labels for {parts.size} parts")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "parts", _frozen(parts))

    @property
    def D(self) -> int:
        return self.parts.size

    def __len__(self) -> int:
        return self.parts.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.parts, dtype=dtype)

    def __repr__(self) -> str:
        return f"Composition({self.parts.tolist()!r})"


@dataclass(frozen=True, eq=False)
class ClrVector:
    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DimensionError(f"clr vector must be 1-D, got shape {values.shape}")
        object.__setattr__(self, "values", _frozen(values))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class CoordinateSystem:
    """Orthonormal logratio coordinates given by a contrast matrix.

    Column ``k`` of ``contrast`` is the clr representation of the ``k``-th
    basis element, so ``clr(x) = contrast @ z`` and ``z = contrast.T @ clr(x)``.
    The matrix is checked for zero column sums and orthonormality on
    construction.
    """

    contrast: np.ndarray
    coordinate_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        V = np.asarray(self.contrast, dtype=float)
        if V.ndim != 2 or V.shape[1] > V.shape[0] - 1:
            raise DimensionError(f"contrast matrix must be D x m with m <= D-1, got {V.shape}")
        names = tuple(self.coordinate_names) or tuple(f"z_{k + 1}" for k in range(V.shape[1]))
        if len(names) != V.shape[1]:
            raise DimensionError(f"{len(names)} names for {V.shape[1]} coordinates")
        colsum = np.abs(V.sum(axis=0)).max(initial=0.0)
        if colsum >= ALGEBRA_TOL:
            raise ValueError(f"contrast columns do not sum to zero (max |sum| = {colsum:.3g})")
        ortho = np.abs(V.T @ V - np.eye(V.shape[1])).max(initial=0.0)
        if ortho >= ALGEBRA_TOL:
            raise ValueError(f"contrast columns are not orthonormal (max deviation {ortho:.3g})")
        object.__setattr__(self, "contrast", _frozen(V))
        object.__setattr__(self, "coordinate_names", names)

    @property
    def dim_in(self) -> int:
        return self.contrast.shape[0]

    @property
    def dim_out(self) -> int:
        return self.contrast.shape[1]

    def subsystem(self, columns: Sequence[int]) -> CoordinateSystem:
        """Coordinates restricted to the given column indices."""
        columns = list(columns)
        return CoordinateSystem(self.contrast[:, columns], tuple(self.coordinate_names[k] for k in columns))


@dataclass(frozen=True, eq=False)
class IlrVector:
    values: np.ndarray
    system: CoordinateSystem

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.system.dim_out,):
            raise DimensionError(f"expected {self.system.dim_out} coordinates, got shape {values.shape}")
        object.__setattr__(self, "values", _frozen(values))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def as_parts(x: Composition | ArrayLike) -> np.ndarray:
    """Validated part vector of ``x``."""
    if isinstance(x, Composition):
        return x.parts
    return Composition(x).parts


def _labels(x) -> tuple[str, ...] | None:
    return x.labels if isinstance(x, Composition) else None


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_parts(x), as_parts(y)
    if a.size != b.size:
        raise DimensionError(f"compositions have {a.size} and {b.size} parts")
    return a, b


def close(x: Composition | ArrayLike, kappa: float = 1.0) -> Composition:
    """Rescale the parts of ``x`` to sum to ``kappa``."""
    if not (np.isfinite(kappa) and kappa > 0):
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    parts = as_parts(x)
    return Composition(kappa * parts / parts.sum(), _labels(x))


def perturb(x: Composition | ArrayLike, y: Composition | ArrayLike) -> Composition:
    a, b = _pair(x, y)
    return Composition(a * b, _labels(x))


def perturb_inv(x: Composition | ArrayLike, y: Composition | ArrayLike) -> Composition:
    """``x ⊖ y``: perturbation of ``x`` by the inverse of ``y``."""
    a, b = _pair(x, y)
    return Composition(a / b, _labels(x))


def power(x: Composition | ArrayLike, a: float) -> Composition:
    return Composition(as_parts(x) ** float(a), _labels(x))


def aitchison_inner(x: Composition | ArrayLike, y: Composition | ArrayLike) -> float:
    """Aitchison inner product as the double sum over all pairwise logratios."""
    a, b = _pair(x, y)
    la, lb = np.log(a), np.log(b)
    ra = la[:, None] - la[None, :]
    rb = lb[:, None] - lb[None, :]
    return float((ra * rb).sum() / (2 * a.size))


def aitchison_norm(x: Composition | ArrayLike) -> float:
    return float(np.sqrt(max(aitchison_inner(x, x), 0.0)))


def aitchison_dist(x: Composition | ArrayLike, y: Composition | ArrayLike) -> float:
    return aitchison_norm(perturb_inv(x, y))


def clr(x: Composition | ArrayLike) -> ClrVector:
    """Centered logratio coefficients, ``ln(x_i / g(x))``."""
    logs = np.log(as_parts(x))
    return ClrVector(logs - logs.mean(), _labels(x))


def clr_inverse(c: ClrVector | ArrayLike) -> Composition:
    values = np.asarray(c.values if isinstance(c, ClrVector) else c, dtype=float)
    if values.ndim != 1:
        raise DimensionError(f"clr vector must be 1-D, got shape {values.shape}")
    if abs(values.sum()) > INPUT_TOL:
        raise NotInClrPlane(f"clr coefficients sum to {values.sum():.3g}, not 0")
    parts = np.exp(values - values.max())
    return close(Composition(parts, c.labels if isinstance(c, ClrVector) else None))


def pivot_contrast(D: int, pivot: int = 1) -> np.ndarray:
    """Contrast matrix (D x D-1) of pivot coordinates with part ``pivot`` first.

    ``pivot`` is 1-based. Row order follows the original part order.
    """
    if D < 2:
        raise ValueError(f"need D >= 2, got {D}")
    if not 1 <= pivot <= D:
        raise IndexError(f"pivot {pivot} out of range 1..{D}")
    order = [pivot - 1] + [j for j in range(D) if j != pivot - 1]
    V = np.zeros((D, D - 1))
    for i in range(1, D):
        # coordinate i contrasts reordered part i with the geometric mean of parts i+1..D
        scale = np.sqrt((D - i) / (D - i + 1))
        V[order[i - 1], i - 1] = scale
        for j in order[i:]:
            V[j, i - 1] = -scale / (D - i)
    return V


def pivot_system(D: int, pivot: int = 1) -> CoordinateSystem:
    """Pivot coordinates of a D-part composition with part ``pivot`` (1-based) moved first."""
    V = pivot_contrast(D, pivot)
    return CoordinateSystem(V, tuple(f"z{pivot}_{i}" for i in range(1, D)))


def to_coords(x: Composition | ArrayLike, system: CoordinateSystem) -> IlrVector:
    c = clr(x).values
    if c.size != system.dim_in:
        raise DimensionError(f"composition has {c.size} parts, system expects {system.dim_in}")
    return IlrVector(system.contrast.T @ c, system)


def from_coords(z: IlrVector) -> Composition:
    return clr_inverse(z.system.contrast @ z.values)
