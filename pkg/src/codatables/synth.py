"""Synthetic samples of compositional tables.

Tables are drawn as logistic-normal variables: Gaussian vectors in pivot
coordinates, centred at the coordinates of a base table and mapped back to the
simplex. Contamination shifts a fixed number of draws in coordinate space, so
outlying tables stay strictly positive and differ only in their ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .errors import InvalidSpec
from .pca import TableSample
from .tables import (
    CompositionalTable,
    TableCoordinateSystem,
    neutral_table,
    table_coords,
    table_from_coords,
    table_pivot_system,
)


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    shape: tuple[int, int]
    coordinate_covariance: np.ndarray
    n: int
    base_table: CompositionalTable | None = None
    contamination: float = 0.0
    contamination_shift: np.ndarray | None = None
    seed: int = 0
    system: TableCoordinateSystem | None = field(default=None, repr=False)

    def __post_init__(self):
        I, J = self.shape
        p = I * J - 1
        cov = np.asarray(self.coordinate_covariance, dtype=float)
        if cov.shape != (p, p):
            raise InvalidSpec(f"covariance must be {p}x{p} for {I}x{J} tables, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise InvalidSpec("covariance is not symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -1e-10 * max(1.0, eig[-1]):
            raise InvalidSpec(f"covariance is not positive semidefinite (smallest eigenvalue {eig[0]:.3g})")
        if self.n < 1:
            raise InvalidSpec(f"n must be positive, got {self.n}")
        if not 0 <= self.contamination <= 0.4:
            raise InvalidSpec(f"contamination must lie in [0, 0.4], got {self.contamination}")
        shift = np.zeros(p) if self.contamination_shift is None else np.asarray(self.contamination_shift, float)
        if shift.shape != (p,):
            raise InvalidSpec(f"contamination shift must have {p} entries, got shape {shift.shape}")
        base = self.base_table if self.base_table is not None else neutral_table(I, J)
        if base.shape != (I, J):
            raise InvalidSpec(f"base table is {base.shape}, expected {(I, J)}")
        system = self.system if self.system is not None else table_pivot_system(I, J)
        object.__setattr__(self, "coordinate_covariance", cov)
        object.__setattr__(self, "contamination_shift", shift)
        object.__setattr__(self, "base_table", base)
        object.__setattr__(self, "system", system)

    @property
    def n_outliers(self) -> int:
        return int(math.floor(self.contamination * self.n + 1e-9))


@dataclass(frozen=True, eq=False)
class GeneratedSample:
    sample: TableSample
    outlier: np.ndarray
    coords: np.ndarray
    center: np.ndarray


def generate(spec: GeneratorSpec) -> GeneratedSample:
    """Draw ``spec.n`` tables; returns them with inlier/outlier ground truth."""
    rng = np.random.default_rng(spec.seed)
    I, J = spec.shape
    p = I * J - 1
    center = table_coords(spec.base_table, spec.system).full
    eigvals, U = np.linalg.eigh(spec.coordinate_covariance)
    root = U * np.sqrt(np.clip(eigvals, 0.0, None))
    Z = center + rng.standard_normal((spec.n, p)) @ root.T

    outlier = np.zeros(spec.n, dtype=bool)
    outlier[rng.choice(spec.n, size=spec.n_outliers, replace=False)] = True
    Z[outlier] += spec.contamination_shift

    width = len(str(spec.n))
    tables = tuple(
        CompositionalTable(
            table_from_coords(z, spec.system).cells,
            spec.base_table.row_labels,
            spec.base_table.col_labels,
            f"s{i + 1:0{width}d}",
        )
        for i, z in enumerate(Z)
    )
    return GeneratedSample(TableSample(tables), outlier, Z, center)


def spiked_covariance(p: int, leading_sd: float = 2.0, rest_sd: float = 0.5) -> np.ndarray:
    """Diagonal covariance with one dominant coordinate direction (the first)."""
    return np.diag([leading_sd**2] + [rest_sd**2] * (p - 1))


def axis_shift(p: int, norm: float, axis: int = 1) -> np.ndarray:
    shift = np.zeros(p)
    shift[axis] = norm
    return shift


def contamination_scenario(
    shape: tuple[int, int] = (2, 4),
    n: int = 200,
    contamination: float = 0.2,
    shift_norm: float = 10.0,
    seed: int = 0,
    leading_sd: float = 2.0,
    rest_sd: float = 0.5,
    base_table: CompositionalTable | ArrayLike | None = None,
) -> GeneratorSpec:
    """Spiked-covariance sample with outliers shifted along the second coordinate.

    The shift is orthogonal to the dominant direction, so a non-robust
    covariance estimate rotates its first principal axis toward the outliers.
    """
    p = shape[0] * shape[1] - 1
    if base_table is not None and not isinstance(base_table, CompositionalTable):
        base_table = CompositionalTable(base_table)
    return GeneratorSpec(
        shape=shape,
        coordinate_covariance=spiked_covariance(p, leading_sd, rest_sd),
        n=n,
        base_table=base_table,
        contamination=contamination,
        contamination_shift=axis_shift(p, shift_norm),
        seed=seed,
    )
