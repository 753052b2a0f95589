"""Classical and robust PCA of samples of compositional tables.

PCA is fitted in pivot coordinates (full rank, so MCD can be used), and the
loadings are mapped back to clr space with the contrast matrix of the
analysed part, where each row refers to one cell of the table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .errors import ComparisonError, DegenerateAxis, DimensionError, RankDeficient
from .robust import ScatterEstimate, mcd_estimate, moments
from .tables import (
    CompositionalTable,
    TableCoordinateSystem,
    coords_matrix,
    normalize_part,
    table_pivot_system,
)

EIGEN_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class TableSample:
    """n tables of identical shape and factor levels."""

    tables: tuple[CompositionalTable, ...]
    part: str = "whole"

    def __post_init__(self):
        tables = tuple(self.tables)
        if len(tables) < 3:
            raise DimensionError(f"a sample needs at least 3 tables, got {len(tables)}")
        first = tables[0]
        for t in tables[1:]:
            if t.shape != first.shape:
                raise DimensionError(f"table {t.sample_id!r} is {t.shape}, expected {first.shape}")
            if t.row_labels != first.row_labels or t.col_labels != first.col_labels:
                raise DimensionError(f"table {t.sample_id!r} has different factor levels")
        object.__setattr__(self, "tables", tables)
        object.__setattr__(self, "part", normalize_part(self.part))

    @property
    def n(self) -> int:
        return len(self.tables)

    @property
    def shape(self) -> tuple[int, int]:
        return self.tables[0].shape

    @property
    def row_labels(self) -> tuple[str, ...]:
        return self.tables[0].row_labels

    @property
    def col_labels(self) -> tuple[str, ...]:
        return self.tables[0].col_labels

    @property
    def cell_labels(self) -> tuple[str, ...]:
        return self.tables[0].cell_labels

    @property
    def sample_ids(self) -> tuple[str, ...]:
        return tuple(t.sample_id if t.sample_id is not None else f"s{i + 1}" for i, t in enumerate(self.tables))

    @property
    def cells(self) -> np.ndarray:
        return np.stack([t.cells for t in self.tables])

    def with_part(self, part: str) -> TableSample:
        return TableSample(self.tables, part)


@dataclass(frozen=True, eq=False)
class PcaModel:
    method: str
    part: str
    center_coords: np.ndarray
    loadings_coords: np.ndarray
    eigenvalues: np.ndarray
    scores: np.ndarray
    loadings_clr: np.ndarray
    explained: np.ndarray
    system: TableCoordinateSystem
    seed: int | None
    estimate: ScatterEstimate
    coords: np.ndarray
    sample_ids: tuple[str, ...] = ()
    cell_labels: tuple[str, ...] = ()

    @property
    def p(self) -> int:
        return self.eigenvalues.size

    @property
    def proportions(self) -> np.ndarray:
        """Variance share of each component (non-cumulative)."""
        total = self.eigenvalues.sum()
        return self.eigenvalues / total if total > 0 else np.zeros_like(self.eigenvalues)

    @property
    def weights(self) -> np.ndarray:
        """Observations used by the final location/scatter estimate."""
        if self.estimate.support_mask is None:
            return np.ones(self.scores.shape[0], dtype=bool)
        return self.estimate.support_mask


def orient_columns(G: np.ndarray, G_clr: np.ndarray) -> np.ndarray:
    """Sign flips making the largest-magnitude clr entry of each column positive."""
    idx = np.argmax(np.abs(G_clr), axis=0)
    signs = np.where(G_clr[idx, np.arange(G_clr.shape[1])] < 0, -1.0, 1.0)
    return signs


def fit_pca(
    sample: TableSample,
    method: str = "robust",
    system: TableCoordinateSystem | None = None,
    seed: int | None = 0,
    part: str | None = None,
    alpha: float = 0.75,
    reweight: bool = True,
) -> PcaModel:
    """Fit PCA to the pivot coordinates of one part of the tables.

    Args:
        sample: tables to analyse.
        method: ``"classical"`` (mean and sample covariance) or ``"robust"``
            (MCD).
        system: table pivot coordinates; defaults to pivot row and column 1.
        seed: MCD seed (robust only).
        part: ``whole``, ``independence`` or ``interaction``; defaults to
            ``sample.part``.
        alpha: MCD subset fraction.
        reweight: use the reweighted MCD.

    Returns:
        PcaModel with scores ``(z_i - t) G`` and clr loadings ``V_part G``.
    """
    part = normalize_part(part or sample.part)
    I, J = sample.shape
    if system is None:
        system = table_pivot_system(I, J)
    elif (system.I, system.J) != (I, J):
        raise DimensionError(f"system is for {system.I}x{system.J} tables, sample is {I}x{J}")
    Z = coords_matrix(sample.tables, system, part)
    n, p = Z.shape

    if method == "robust":
        est = mcd_estimate(Z, alpha=alpha, seed=seed, reweight=reweight)
    elif method == "classical":
        if n < 2:
            raise RankDeficient("classical PCA needs at least 2 observations")
        center, scatter = moments(Z)
        est = ScatterEstimate(center, scatter, "classical", support_mask=np.ones(n, dtype=bool))
    else:
        raise ValueError(f"unknown method {method!r}; expected classical or robust")

    scatter = (est.scatter + est.scatter.T) / 2
    eigvals, G = np.linalg.eigh(scatter)
    order = np.argsort(eigvals, kind="stable")[::-1]
    eigvals, G = eigvals[order], G[:, order]
    eigvals = np.where(eigvals < EIGEN_CLAMP, 0.0, eigvals)

    V = system.part_contrast(part)
    G = G * orient_columns(G, V @ G)
    G_clr = V @ G
    total = eigvals.sum()
    explained = np.cumsum(eigvals) / total if total > 0 else np.zeros(p)

    return PcaModel(
        method=method,
        part=part,
        center_coords=est.center,
        loadings_coords=G,
        eigenvalues=eigvals,
        scores=(Z - est.center) @ G,
        loadings_clr=G_clr,
        explained=explained,
        system=system,
        seed=seed if method == "robust" else None,
        estimate=est,
        coords=Z,
        sample_ids=sample.sample_ids,
        cell_labels=sample.cell_labels,
    )


@dataclass(frozen=True, eq=False)
class BiplotGeometry:
    arrows: np.ndarray
    points: np.ndarray
    arrow_labels: tuple[str, ...]
    point_labels: tuple[str, ...]
    proportions: np.ndarray
    cumulative: float
    form: str
    sign_convention: str = "largest |clr loading| positive"

    @property
    def k(self) -> int:
        return self.arrows.shape[1]


def biplot_geometry(model: PcaModel, k: int = 2, form: str = "covariance") -> BiplotGeometry:
    """Rank-k biplot coordinates.

    The covariance biplot scales clr loading arrows by ``sqrt(lambda)`` and
    score points by ``1/sqrt(lambda)``. ``form="form"`` leaves arrows
    unscaled and plots the raw scores. In both forms ``points @ arrows.T`` is
    the rank-k approximation of the centred clr data.
    """
    if not 1 <= k <= model.p:
        raise ValueError(f"k must lie in 1..{model.p}, got {k}")
    lam = model.eigenvalues[:k]
    if form == "covariance":
        if np.any(lam <= 0):
            raise DegenerateAxis(f"component {int(np.argmax(lam <= 0)) + 1} has zero variance")
        root = np.sqrt(lam)
        arrows = model.loadings_clr[:, :k] * root
        points = model.scores[:, :k] / root
    elif form == "form":
        arrows = model.loadings_clr[:, :k].copy()
        points = model.scores[:, :k].copy()
    else:
        raise ValueError(f"unknown biplot form {form!r}")
    return BiplotGeometry(
        arrows=arrows,
        points=points,
        arrow_labels=model.cell_labels,
        point_labels=model.sample_ids,
        proportions=model.proportions[:k].copy(),
        cumulative=float(model.explained[k - 1]),
        form=form,
    )


def loading_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in degrees between two loading vectors, ignoring sign."""
    c = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.degrees(np.arccos(min(c, 1.0))))


@dataclass(frozen=True, eq=False)
class RunComparison:
    explained_a: float
    explained_b: float
    principal_angles: np.ndarray
    first_loading_angle: float
    score_displacement: np.ndarray


def compare_runs(model_a: PcaModel, model_b: PcaModel, k: int = 2) -> RunComparison:
    """Explained variance at k, loading-subspace angles (degrees) and score shifts."""
    if model_a.part != model_b.part:
        raise ComparisonError(f"cannot compare a {model_a.part} model with a {model_b.part} model")
    if model_a.scores.shape != model_b.scores.shape or model_a.cell_labels != model_b.cell_labels:
        raise ComparisonError("models were fitted to different samples")
    A, B = model_a.loadings_clr[:, :k], model_b.loadings_clr[:, :k]
    angles = np.degrees(subspace_angles(A, B))[::-1]
    signs = np.where(np.einsum("ij,ij->j", A, B) < 0, -1.0, 1.0)
    shift = model_a.scores[:, :k] - model_b.scores[:, :k] * signs
    return RunComparison(
        explained_a=float(model_a.explained[k - 1]),
        explained_b=float(model_b.explained[k - 1]),
        principal_angles=angles,
        first_loading_angle=loading_angle(A[:, 0], B[:, 0]),
        score_displacement=np.linalg.norm(shift, axis=1),
    )


def split_tables(sample: TableSample, mask: Sequence[bool]) -> TableSample:
    """Sub-sample of the tables selected by ``mask``."""
    return TableSample(tuple(t for t, keep in zip(sample.tables, mask) if keep), sample.part)
