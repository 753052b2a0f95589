"""Command line interface.

Exit codes: 0 success, 2 data error, 3 numeric degeneracy, 4 configuration
error.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .dataio import atomic_write, format_csv, ingest_csv
from .errors import CodaError, ConfigError
from .pca import biplot_geometry
from .pipeline import (
    AnalysisBundle,
    AnalysisConfig,
    analyse_part,
    bundle_dict,
    decomposition_csv,
    dumps,
    run_pipeline,
    stage,
    write_bundle,
)
from .svg import emit_biplot_svg
from .synth import contamination_scenario, generate
from .tables import coords_matrix, decompose, table_pivot_system

PART_CHOICES = click.Choice(["whole", "ind", "int", "independence", "interaction"])


def input_options(f):
    @click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
    @click.option("--format", "fmt", type=click.Choice(["long", "wide"]), default="long", show_default=True)
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        return f(*args, **kwargs)

    return wrapper


def analysis_options(f):
    @click.option("--part", type=PART_CHOICES, default="whole", show_default=True)
    @click.option("--method", type=click.Choice(["classical", "robust"]), default="robust", show_default=True)
    @click.option("--alpha", type=float, default=0.75, show_default=True, help="MCD subset fraction.")
    @click.option("--quantile", type=float, default=0.975, show_default=True, help="Chi-squared cutoff level.")
    @click.option("--seed", type=int, default=0, show_default=True)
    @click.option("--kappa", type=float, default=1.0, show_default=True, help="Closure constant for outputs.")
    @click.option("--form", "biplot_form", type=click.Choice(["covariance", "form"]), default="covariance")
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        return f(*args, **kwargs)

    return wrapper


def _config(part, method, alpha, quantile, seed, kappa, biplot_form, out_dir=None, svg=True) -> AnalysisConfig:
    return AnalysisConfig(
        part=part, method=method, alpha=alpha, quantile_level=quantile, seed=seed, kappa=kappa,
        biplot_form=biplot_form, out_dir=out_dir, svg=svg,
    )


def _emit(text: str, path: str | None) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        atomic_write(path, text)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True)
def cli(verbose):
    """Robust PCA of compositional tables."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command("decompose")
@input_options
@click.option("--kappa", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output CSV (stdout if omitted).")
def decompose_command(input_path, fmt, kappa, out):
    """Independence and interaction tables of every sample."""
    sample = ingest_csv(input_path, fmt)
    config = AnalysisConfig(kappa=kappa)
    with stage("decompose"):
        bundle = AnalysisBundle(config, sample, [decompose(t) for t in sample.tables])
    _emit(decomposition_csv(bundle), out)


@cli.command("coords")
@input_options
@click.option("--part", type=PART_CHOICES, default="whole", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def coords_command(input_path, fmt, part, out):
    """Pivot coordinates of every sample."""
    sample = ingest_csv(input_path, fmt)
    system = table_pivot_system(*sample.shape)
    config = AnalysisConfig(part=part)
    Z = coords_matrix(sample.tables, system, config.part)
    names = system.part_system(config.part).coordinate_names
    lines = [",".join(("sample_id",) + names)]
    for sid, z in zip(sample.sample_ids, Z):
        lines.append(",".join([sid] + [repr(float(v)) for v in z]))
    _emit("\n".join(lines) + "\n", out)


@cli.command("pca")
@input_options
@analysis_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output JSON (stdout if omitted).")
def pca_command(input_path, fmt, part, method, alpha, quantile, seed, kappa, biplot_form, out):
    """Fit PCA to one part and emit its JSON bundle."""
    config = _config(part, method, alpha, quantile, seed, kappa, biplot_form)
    sample = ingest_csv(input_path, fmt)
    model, report, _ = analyse_part(sample, config, config.part)
    _emit(dumps(bundle_dict(model, report, sample, seed)), out)


@cli.command("outliers")
@input_options
@analysis_options
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def outliers_command(input_path, fmt, part, method, alpha, quantile, seed, kappa, biplot_form, out):
    """Robust Mahalanobis distances and outlier flags for one part."""
    config = _config(part, "robust", alpha, quantile, seed, kappa, biplot_form)
    sample = ingest_csv(input_path, fmt)
    model, report, note = analyse_part(sample, config, config.part)
    if report is None:
        raise ConfigError(f"outlier detection impossible: {note}")
    lines = ["sample_id,distance,outlier"]
    for sid, d, flag in zip(sample.sample_ids, report.distances, report.flags):
        lines.append(f"{sid},{float(d)!r},{int(flag)}")
    _emit("\n".join(lines) + "\n", out)
    click.echo(
        f"{config.part}: {report.n_outliers} out of all {sample.n} samples identified as outlying "
        f"(cutoff {report.cutoff:.4f})",
        err=True,
    )


@cli.command("biplot")
@input_options
@analysis_options
@click.option("--svg", "svg_path", required=True, type=click.Path(dir_okay=False))
def biplot_command(input_path, fmt, part, method, alpha, quantile, seed, kappa, biplot_form, svg_path):
    """Render the rank-2 biplot of one part as SVG."""
    config = _config(part, method, alpha, quantile, seed, kappa, biplot_form)
    sample = ingest_csv(input_path, fmt)
    model, _, _ = analyse_part(sample, config, config.part)
    with stage(f"biplot:{config.part}"):
        emit_biplot_svg(biplot_geometry(model, 2, config.biplot_form), svg_path, f"{method} PCA, {config.part} tables")


@cli.command("pipeline")
@input_options
@analysis_options
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--svg/--no-svg", default=True, show_default=True)
def pipeline_command(input_path, fmt, part, method, alpha, quantile, seed, kappa, biplot_form, out_dir, svg):
    """Decompose, fit all three parts, detect outliers and write every output."""
    config = _config(part, method, alpha, quantile, seed, kappa, biplot_form, out_dir, svg)
    with stage("ingest"):
        sample = ingest_csv(input_path, fmt)
    bundle = run_pipeline(config, sample)
    for path in write_bundle(bundle, out_dir):
        click.echo(f"wrote {path}", err=True)
    for line in bundle.summary_lines():
        click.echo(line)


@cli.command("simulate")
@click.option("--rows", "I", type=int, default=2, show_default=True)
@click.option("--cols", "J", type=int, default=4, show_default=True)
@click.option("--n", type=int, default=200, show_default=True)
@click.option("--epsilon", type=float, default=0.0, show_default=True, help="Contamination fraction.")
@click.option("--shift-norm", type=float, default=10.0, show_default=True)
@click.option("--leading-sd", type=float, default=2.0, show_default=True)
@click.option("--rest-sd", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["long", "wide"]), default="long", show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def simulate_command(I, J, n, epsilon, shift_norm, leading_sd, rest_sd, seed, fmt, out_dir):
    """Generate a synthetic sample (CSV) with a ground-truth sidecar."""
    if I < 2 or J < 2:
        raise ConfigError("tables need at least 2 rows and 2 columns")
    spec = contamination_scenario((I, J), n, epsilon, shift_norm, seed, leading_sd, rest_sd)
    gen = generate(spec)
    out_dir = Path(out_dir)
    atomic_write(out_dir / "sample.csv", format_csv(gen.sample, fmt))
    truth = ["sample_id,outlier"] + [f"{sid},{int(o)}" for sid, o in zip(gen.sample.sample_ids, gen.outlier)]
    atomic_write(out_dir / "truth.csv", "\n".join(truth) + "\n")
    click.echo(f"wrote {gen.sample.n} tables ({int(np.sum(gen.outlier))} planted outliers) to {out_dir}", err=True)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="codatables", standalone_mode=False)
    except CodaError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return ConfigError.exit_code
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
