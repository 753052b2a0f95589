"""Two-factor compositional tables.

A table is an I x J grid of positive cells whose information lies in the
ratios between cells. It is identified with the IJ-part composition of its
column-major flattening ``(x11, ..., xI1, ..., x1J, ..., xIJ)``.

Every table splits orthogonally (in the Aitchison sense) into an
independence table, generated by the row and column geometric marginals,
and an interaction table that carries the row/column association. Pivot
coordinates respect the split: I-1 row and J-1 column coordinates describe
the independence part, (I-1)(J-1) odds-ratio coordinates the interaction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import DimensionError, InvalidComposition
from .simplex import Composition, CoordinateSystem, IlrVector, _frozen, check_positive

NEUTRAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CompositionalTable:
    cells: np.ndarray
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()
    sample_id: str | None = None

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=float)
        if cells.ndim != 2 or cells.shape[0] < 2 or cells.shape[1] < 2:
            raise InvalidComposition(f"a compositional table needs I, J >= 2, got shape {cells.shape}")
        check_positive(cells, "cell")
        I, J = cells.shape
        rows = tuple(str(s) for s in self.row_labels) or tuple(f"r{i + 1}" for i in range(I))
        cols = tuple(str(s) for s in self.col_labels) or tuple(f"c{j + 1}" for j in range(J))
        if len(rows) != I or len(cols) != J:
            raise DimensionError(f"{len(rows)}x{len(cols)} labels for a {I}x{J} table")
        object.__setattr__(self, "cells", _frozen(cells))
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def cell_labels(self) -> tuple[str, ...]:
        """``"row:col"`` labels in vectorization (column-major) order."""
        return tuple(f"{r}:{c}" for c in self.col_labels for r in self.row_labels)

    def with_cells(self, cells: ArrayLike) -> CompositionalTable:
        return CompositionalTable(cells, self.row_labels, self.col_labels, self.sample_id)

    def __repr__(self) -> str:
        return f"CompositionalTable({self.cells.tolist()!r}, sample_id={self.sample_id!r})"


def as_table(t: CompositionalTable | ArrayLike) -> CompositionalTable:
    return t if isinstance(t, CompositionalTable) else CompositionalTable(t)


def _like(t, cells: np.ndarray) -> CompositionalTable:
    return t.with_cells(cells) if isinstance(t, CompositionalTable) else CompositionalTable(cells)


def _pair(t, u) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_table(t).cells, as_table(u).cells
    if a.shape != b.shape:
        raise DimensionError(f"tables have shapes {a.shape} and {b.shape}")
    return a, b


def vectorize(t: CompositionalTable | ArrayLike) -> Composition:
    t = as_table(t)
    return Composition(t.cells.ravel(order="F"), t.cell_labels)


def unvectorize(
    x: Composition | ArrayLike,
    shape: tuple[int, int],
    row_labels: Sequence[str] = (),
    col_labels: Sequence[str] = (),
    sample_id: str | None = None,
) -> CompositionalTable:
    parts = x.parts if isinstance(x, Composition) else np.asarray(x, dtype=float)
    if parts.size != shape[0] * shape[1]:
        raise DimensionError(f"{parts.size} parts cannot fill a {shape[0]}x{shape[1]} table")
    return CompositionalTable(parts.reshape(shape, order="F"), tuple(row_labels), tuple(col_labels), sample_id)


def table_close(t: CompositionalTable | ArrayLike, kappa: float = 1.0) -> CompositionalTable:
    if not (np.isfinite(kappa) and kappa > 0):
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    cells = as_table(t).cells
    return _like(t, kappa * cells / cells.sum())


def table_perturb(t, u) -> CompositionalTable:
    a, b = _pair(t, u)
    return _like(t, a * b)


def table_perturb_inv(t, u) -> CompositionalTable:
    a, b = _pair(t, u)
    return _like(t, a / b)


def table_power(t, a: float) -> CompositionalTable:
    return _like(t, as_table(t).cells ** float(a))


def table_inner(t, u) -> float:
    """Aitchison inner product of two tables, summed over all pairs of cells."""
    a, b = _pair(t, u)
    la, lb = np.log(a).ravel(), np.log(b).ravel()
    ra = la[:, None] - la[None, :]
    rb = lb[:, None] - lb[None, :]
    return float((ra * rb).sum() / (2 * a.size))


def table_norm(t) -> float:
    return float(np.sqrt(max(table_inner(t, t), 0.0)))


def table_dist(t, u) -> float:
    return table_norm(table_perturb_inv(t, u))


def is_neutral(t, tol: float = NEUTRAL_TOL) -> bool:
    return table_norm(t) < tol


def neutral_table(I: int, J: int) -> CompositionalTable:
    return CompositionalTable(np.full((I, J), 1.0 / (I * J)))


# -- decomposition ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TableDecomposition:
    independence: CompositionalTable
    interaction: CompositionalTable
    row_projection: CompositionalTable
    col_projection: CompositionalTable


def _closed_exp(logs: np.ndarray) -> np.ndarray:
    e = np.exp(logs - logs.max())
    return e / e.sum()


def decompose(t: CompositionalTable | ArrayLike) -> TableDecomposition:
    """Split ``t`` into independence and interaction tables.

    Geometric means are taken in the log domain. All four outputs are closed
    to unit sum.
    """
    t = as_table(t)
    logs = np.log(t.cells)
    I, J = logs.shape
    row_means = logs.mean(axis=1, keepdims=True)
    col_means = logs.mean(axis=0, keepdims=True)
    row_proj = np.broadcast_to(row_means, (I, J))
    col_proj = np.broadcast_to(col_means, (I, J))
    return TableDecomposition(
        independence=t.with_cells(_closed_exp(row_proj + col_proj)),
        interaction=t.with_cells(_closed_exp(logs - row_proj - col_proj)),
        row_projection=t.with_cells(_closed_exp(row_proj)),
        col_projection=t.with_cells(_closed_exp(col_proj)),
    )


def clr_table(t: CompositionalTable | ArrayLike) -> np.ndarray:
    """clr coefficients of all cells, returned in table shape."""
    logs = np.log(as_table(t).cells)
    return logs - logs.mean()


def clr_independence(t: CompositionalTable | ArrayLike) -> np.ndarray:
    """clr of the independence table from the marginal geometric means of ``t``.

    Returned in table shape; cell ``(i, j)`` is ``ln(g_i. g_.j / g_..^2)``.
    """
    logs = np.log(as_table(t).cells)
    return logs.mean(axis=1, keepdims=True) + logs.mean(axis=0, keepdims=True) - 2 * logs.mean()


def clr_interaction(t: CompositionalTable | ArrayLike) -> np.ndarray:
    """clr of the interaction table, ``ln(x_ij g_.. / (g_i. g_.j))``, in table shape."""
    logs = np.log(as_table(t).cells)
    return logs + logs.mean() - logs.mean(axis=1, keepdims=True) - logs.mean(axis=0, keepdims=True)


# -- pivot coordinates ------------------------------------------------------


def _row_contrast_grid(I: int, J: int, i: int) -> np.ndarray:
    """Log coefficients of row coordinate ``i`` (1-based) on a table in pivot order."""
    g = np.zeros((I, J))
    scale = np.sqrt((I - i) * J / (1 + I - i))
    g[i - 1, :] = scale / J
    g[i:, :] = -scale / (J * (I - i))
    return g


def _odds_ratio_contrast_grid(I: int, J: int, r: int, s: int) -> np.ndarray:
    """Log coefficients of the odds-ratio coordinate with pivot cell ``(r, s)`` (1-based).

    Expands ``c * ln prod_{i>r, j>s} x_ij x_rs / (x_is x_rj)``.
    """
    g = np.zeros((I, J))
    nr, ns = I - r, J - s
    c = np.sqrt(1.0 / (nr * ns * (nr + 1) * (ns + 1)))
    g[r - 1, s - 1] = nr * ns * c
    g[r:, s:] = c
    g[r:, s - 1] = -ns * c
    g[r - 1, s:] = -nr * c
    return g


@dataclass(frozen=True, eq=False)
class TableCoordinateSystem:
    """Pivot coordinates of I x J tables for one choice of pivot row and column.

    Coordinates are ordered rows, columns, then odds ratios; odds-ratio pivot
    cells ``(r, s)`` run row-major. ``or_index`` maps each ``(r, s)`` to its
    position inside the odds-ratio block. Indices in names and maps are
    1-based and refer to the permuted table (pivot row/column first).
    """

    system: CoordinateSystem
    I: int
    J: int
    row_pivot: int = 1
    col_pivot: int = 1
    or_index: Mapping[tuple[int, int], int] = field(default_factory=dict)
    vectorization: str = "column-major"

    @property
    def contrast(self) -> np.ndarray:
        return self.system.contrast

    @property
    def coordinate_names(self) -> tuple[str, ...]:
        return self.system.coordinate_names

    @property
    def row_slice(self) -> slice:
        return slice(0, self.I - 1)

    @property
    def col_slice(self) -> slice:
        return slice(self.I - 1, self.I + self.J - 2)

    @property
    def independence_slice(self) -> slice:
        return slice(0, self.I + self.J - 2)

    @property
    def interaction_slice(self) -> slice:
        return slice(self.I + self.J - 2, self.I * self.J - 1)

    def part_slice(self, part: str) -> slice:
        return {
            "whole": slice(0, self.I * self.J - 1),
            "independence": self.independence_slice,
            "interaction": self.interaction_slice,
        }[normalize_part(part)]

    def part_system(self, part: str) -> CoordinateSystem:
        sl = self.part_slice(part)
        return self.system.subsystem(range(sl.start, sl.stop))

    def part_contrast(self, part: str) -> np.ndarray:
        return self.contrast[:, self.part_slice(part)]


_PART_ALIASES = {
    "whole": "whole",
    "ind": "independence",
    "independence": "independence",
    "int": "interaction",
    "interaction": "interaction",
}


def normalize_part(part: str) -> str:
    try:
        return _PART_ALIASES[part]
    except KeyError:
        raise ValueError(f"unknown part {part!r}; expected whole, independence or interaction") from None


def table_pivot_system(I: int, J: int, row_pivot: int = 1, col_pivot: int = 1) -> TableCoordinateSystem:
    """Pivot coordinates with row ``row_pivot`` and column ``col_pivot`` moved first."""
    if I < 2 or J < 2:
        raise ValueError(f"need I, J >= 2, got {I}x{J}")
    if not 1 <= row_pivot <= I:
        raise IndexError(f"row pivot {row_pivot} out of range 1..{I}")
    if not 1 <= col_pivot <= J:
        raise IndexError(f"column pivot {col_pivot} out of range 1..{J}")
    row_order = [row_pivot - 1] + [i for i in range(I) if i != row_pivot - 1]
    col_order = [col_pivot - 1] + [j for j in range(J) if j != col_pivot - 1]

    grids, names = [], []
    for i in range(1, I):
        grids.append(_row_contrast_grid(I, J, i))
        names.append(f"z_r_{i}")
    for j in range(1, J):
        grids.append(_row_contrast_grid(J, I, j).T)
        names.append(f"z_c_{j}")
    or_index = {}
    for r in range(1, I):
        for s in range(1, J):
            or_index[(r, s)] = len(or_index)
            grids.append(_odds_ratio_contrast_grid(I, J, r, s))
            names.append(f"z_OR_{r}_{s}")

    V = np.empty((I * J, len(grids)))
    for k, g in enumerate(grids):
        original = np.empty_like(g)
        original[np.ix_(row_order, col_order)] = g
        V[:, k] = original.ravel(order="F")
    return TableCoordinateSystem(CoordinateSystem(V, tuple(names)), I, J, row_pivot, col_pivot, or_index)


@dataclass(frozen=True, eq=False)
class TableCoordinates:
    rows: np.ndarray
    cols: np.ndarray
    odds_ratios: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.rows, self.cols, self.odds_ratios])

    @property
    def independence(self) -> np.ndarray:
        return np.concatenate([self.rows, self.cols])


def _check_shape(shape: tuple[int, int], system: TableCoordinateSystem) -> None:
    if shape != (system.I, system.J):
        raise DimensionError(f"table is {shape[0]}x{shape[1]}, system expects {system.I}x{system.J}")


def _full_coords(t, system: TableCoordinateSystem) -> np.ndarray:
    t = as_table(t)
    _check_shape(t.shape, system)
    return system.contrast.T @ clr_table(t).ravel(order="F")


def table_coords(t: CompositionalTable | ArrayLike, system: TableCoordinateSystem) -> TableCoordinates:
    z = _full_coords(t, system)
    return TableCoordinates(z[system.row_slice], z[system.col_slice], z[system.interaction_slice])


def coords_independence(t, system: TableCoordinateSystem) -> IlrVector:
    return IlrVector(_full_coords(t, system)[system.independence_slice], system.part_system("independence"))


def coords_interaction(t, system: TableCoordinateSystem) -> IlrVector:
    return IlrVector(_full_coords(t, system)[system.interaction_slice], system.part_system("interaction"))


def coords_matrix(tables: Iterable[CompositionalTable], system: TableCoordinateSystem, part: str = "whole") -> np.ndarray:
    """n x p matrix of coordinates of ``part`` for a sequence of tables."""
    rows = [clr_table(t).ravel(order="F") for t in tables]
    if not rows:
        return np.empty((0, system.part_slice(part).stop - system.part_slice(part).start))
    if len(rows[0]) != system.I * system.J:
        raise DimensionError(f"tables have {len(rows[0])} cells, system expects {system.I * system.J}")
    return np.vstack(rows) @ system.part_contrast(part)


def table_from_coords(
    z: ArrayLike, system: TableCoordinateSystem, part: str = "whole", like: CompositionalTable | None = None
) -> CompositionalTable:
    """Closed table whose ``part`` coordinates are ``z`` (other coordinates zero)."""
    V = system.part_contrast(part)
    z = np.asarray(z, dtype=float)
    if z.shape != (V.shape[1],):
        raise DimensionError(f"expected {V.shape[1]} coordinates, got shape {z.shape}")
    cells = _closed_exp(V @ z).reshape((system.I, system.J), order="F")
    return like.with_cells(cells) if like is not None else CompositionalTable(cells)


# -- clr/coordinate proportionality ----------------------------------------


@dataclass(frozen=True)
class ProportionalityReport:
    independence_residual: float
    interaction_residual: float
    pivots_checked: int

    @property
    def max_residual(self) -> float:
        return max(self.independence_residual, self.interaction_residual)


def all_pivot_systems(I: int, J: int) -> dict[tuple[int, int], TableCoordinateSystem]:
    return {(k, l): table_pivot_system(I, J, k, l) for k in range(1, I + 1) for l in range(1, J + 1)}


def proportionality_check(
    t: CompositionalTable | ArrayLike,
    systems: Mapping[tuple[int, int], TableCoordinateSystem] | None = None,
) -> ProportionalityReport:
    """Compare the first pivot coordinates of every (k, l) system with clr cells.

    For each pivot cell ``(k, l)`` the independence clr of that cell must be
    ``sqrt((I-1)/IJ) z_r1 + sqrt((J-1)/IJ) z_c1`` and the interaction clr
    ``sqrt((I-1)(J-1)/IJ) z_OR11``. The clr values are taken from the cells
    of the decomposed tables.
    """
    t = as_table(t)
    I, J = t.shape
    if systems is None:
        systems = all_pivot_systems(I, J)
    parts = decompose(t)
    clr_ind = clr_table(parts.independence)
    clr_int = clr_table(parts.interaction)
    a_r, a_c = np.sqrt((I - 1) / (I * J)), np.sqrt((J - 1) / (I * J))
    a_or = np.sqrt((I - 1) * (J - 1) / (I * J))
    res_ind = res_int = 0.0
    for (k, l), system in systems.items():
        z = table_coords(t, system)
        res_ind = max(res_ind, abs(clr_ind[k - 1, l - 1] - (a_r * z.rows[0] + a_c * z.cols[0])))
        res_int = max(res_int, abs(clr_int[k - 1, l - 1] - a_or * z.odds_ratios[system.or_index[(1, 1)]]))
    return ProportionalityReport(float(res_ind), float(res_int), len(systems))
