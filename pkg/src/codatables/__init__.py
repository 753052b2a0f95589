"""Robust PCA of compositional tables.

Aitchison geometry of compositions and two-factor tables, the decomposition
of a table into independence and interaction parts, pivot coordinates, MCD
estimation, and PCA with loadings in clr space.
"""

__version__ = "0.1.0"

from .errors import (
    CodaError,
    ComparisonError,
    DegenerateAxis,
    DegenerateData,
    DimensionError,
    HeterogeneousLevels,
    IncompleteTable,
    InvalidComposition,
    InvalidData,
    InvalidSpec,
    NotInClrPlane,
    RankDeficient,
)
from .simplex import (
    ClrVector,
    Composition,
    CoordinateSystem,
    IlrVector,
    aitchison_dist,
    aitchison_inner,
    aitchison_norm,
    clr,
    clr_inverse,
    close,
    from_coords,
    perturb,
    pivot_system,
    power,
    to_coords,
)
from .tables import (
    CompositionalTable,
    TableCoordinateSystem,
    TableDecomposition,
    clr_independence,
    clr_interaction,
    coords_independence,
    coords_interaction,
    decompose,
    proportionality_check,
    table_coords,
    table_pivot_system,
    vectorize,
    unvectorize,
)
from .robust import OutlierReport, ScatterEstimate, classical_estimate, detect_outliers, mahalanobis_distances, mcd_estimate
from .pca import PcaModel, TableSample, biplot_geometry, compare_runs, fit_pca
