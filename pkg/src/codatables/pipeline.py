"""End-to-end analysis of a sample of compositional tables.

For each part (whole table, independence, interaction) the pipeline fits
classical or robust PCA in pivot coordinates and runs robust Mahalanobis
outlier detection, then serializes one JSON bundle per part.
"""

from __future__ import annotations

import json
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .dataio import atomic_write
from .errors import CodaError, ConfigError
from .pca import PcaModel, TableSample, biplot_geometry, fit_pca
from .robust import OutlierReport, detect_outliers
from .svg import emit_biplot_svg
from .tables import TableDecomposition, decompose, normalize_part, table_close, table_pivot_system

logger = logging.getLogger(__name__)

PARTS = ("whole", "independence", "interaction")


@dataclass(frozen=True)
class AnalysisConfig:
    part: str = "whole"
    method: str = "robust"
    alpha: float = 0.75
    quantile_level: float = 0.975
    seed: int = 0
    kappa: float = 1.0
    biplot_form: str = "covariance"
    out_dir: str | None = None
    svg: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "part", normalize_part(self.part))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.method not in ("classical", "robust"):
            raise ConfigError(f"method must be classical or robust, got {self.method!r}")
        if not 0.5 <= self.alpha <= 1:
            raise ConfigError(f"alpha must lie in [0.5, 1], got {self.alpha}")
        if not 0.5 < self.quantile_level < 1:
            raise ConfigError(f"quantile level must lie in (0.5, 1), got {self.quantile_level}")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if self.biplot_form not in ("covariance", "form"):
            raise ConfigError(f"biplot form must be covariance or form, got {self.biplot_form!r}")


@dataclass
class AnalysisBundle:
    config: AnalysisConfig
    sample: TableSample
    decompositions: list[TableDecomposition]
    models: dict[str, PcaModel] = field(default_factory=dict)
    outliers: dict[str, OutlierReport | None] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)

    def summary_lines(self) -> list[str]:
        lines = []
        for part, model in self.models.items():
            report = self.outliers.get(part)
            head = f"{part}: dim {model.p}, {model.method} PCA, first two PCs explain {100 * model.explained[min(1, model.p - 1)]:.2f}%"
            if report is None:
                lines.append(f"{head}; outlier detection skipped ({self.notes.get(part, 'not run')})")
            else:
                lines.append(
                    f"{head}; {report.n_outliers} out of all {self.sample.n} samples identified as outlying "
                    f"(cutoff {report.cutoff:.4f} at quantile {report.quantile_level})"
                )
        return lines


@contextmanager
def stage(name: str):
    try:
        yield
    except CodaError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def analyse_part(sample: TableSample, config: AnalysisConfig, part: str) -> tuple[PcaModel, OutlierReport | None, str]:
    system = table_pivot_system(*sample.shape)
    with stage(f"pca:{part}"):
        model = fit_pca(sample, config.method, system, seed=config.seed, part=part, alpha=config.alpha)
    note = ""
    report = None
    with stage(f"outliers:{part}"):
        if sample.n <= model.p:
            note = f"n={sample.n} <= dim={model.p}"
        else:
            reuse = model.estimate if model.method == "robust" else None
            report = detect_outliers(
                model.coords, alpha=config.alpha, quantile_level=config.quantile_level, seed=config.seed, estimate=reuse
            )
    return model, report, note


def run_pipeline(config: AnalysisConfig, sample: TableSample, parts: tuple[str, ...] = PARTS) -> AnalysisBundle:
    with stage("decompose"):
        decompositions = [decompose(t) for t in sample.tables]
    bundle = AnalysisBundle(config, sample, decompositions)
    for part in parts:
        model, report, note = analyse_part(sample, config, normalize_part(part))
        bundle.models[model.part] = model
        bundle.outliers[model.part] = report
        if note:
            bundle.notes[model.part] = note
        logger.info("part %s: dim %d, explained@2 %.4f", model.part, model.p, model.explained[min(1, model.p - 1)])
    return bundle


def _num(x: float) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _matrix(a: np.ndarray) -> list[list[float | None]]:
    return [[_num(v) for v in row] for row in a]


def bundle_dict(model: PcaModel, report: OutlierReport | None, sample: TableSample, seed: int) -> dict[str, Any]:
    """JSON-ready record of one fitted part."""
    I, J = sample.shape
    return {
        "shape": {"I": I, "J": J, "row_levels": list(sample.row_labels), "col_levels": list(sample.col_labels)},
        "part": model.part,
        "method": model.method,
        "eigenvalues": [_num(v) for v in model.eigenvalues],
        "explained": [_num(v) for v in model.explained],
        "loadings_clr": _matrix(model.loadings_clr),
        "scores": _matrix(model.scores),
        "outliers": None
        if report is None
        else {
            "cutoff": _num(report.cutoff),
            "distances": [_num(v) for v in report.distances],
            "flags": [bool(v) for v in report.flags],
            "quantile_level": report.quantile_level,
            "df": report.df,
        },
        "seed": seed,
        "version": __version__,
        "sample_ids": list(model.sample_ids),
        "cell_labels": list(model.cell_labels),
        "coordinate_names": list(model.system.part_system(model.part).coordinate_names),
        "center_coords": [_num(v) for v in model.center_coords],
    }


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def decomposition_csv(bundle: AnalysisBundle) -> str:
    kappa = bundle.config.kappa
    lines = ["sample_id,component,row_level,col_level,value"]
    for sid, dec in zip(bundle.sample.sample_ids, bundle.decompositions):
        for name in ("independence", "interaction"):
            t = table_close(getattr(dec, name), kappa)
            for i, r in enumerate(t.row_labels):
                for j, c in enumerate(t.col_labels):
                    lines.append(f"{sid},{name},{r},{c},{float(t.cells[i, j])!r}")
    return "\n".join(lines) + "\n"


def write_bundle(bundle: AnalysisBundle, out_dir: str | Path) -> list[Path]:
    """Write JSON bundles, SVG biplots, the decomposition table and a summary."""
    out_dir = Path(out_dir)
    written = []
    for part, model in bundle.models.items():
        path = out_dir / f"bundle_{part}.json"
        atomic_write(path, dumps(bundle_dict(model, bundle.outliers[part], bundle.sample, bundle.config.seed)))
        written.append(path)
        if bundle.config.svg:
            with stage(f"biplot:{part}"):
                geom = biplot_geometry(model, 2, bundle.config.biplot_form)
                path = out_dir / f"biplot_{part}.svg"
                emit_biplot_svg(geom, path, title=f"{model.method} PCA, {part} tables")
            written.append(path)
    path = out_dir / "decomposition.csv"
    atomic_write(path, decomposition_csv(bundle))
    written.append(path)
    path = out_dir / "summary.txt"
    atomic_write(path, "\n".join(bundle.summary_lines()) + "\n")
    written.append(path)
    return written
