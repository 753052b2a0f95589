"""Exception hierarchy.

Every error raised by the library derives from :class:`CodaError`. The three
intermediate classes map onto CLI exit codes: data problems (2), numeric
degeneracy (3) and configuration problems (4).
"""

from __future__ import annotations


class CodaError(Exception):
    """Base class. ``stage`` is filled in by the pipeline when it re-raises."""

    exit_code = 1
    stage: str | None = None

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class DataError(CodaError, ValueError):
    exit_code = 2


class NumericError(CodaError, ArithmeticError):
    exit_code = 3


class ConfigError(CodaError, ValueError):
    exit_code = 4


class InvalidComposition(DataError):
    """A part or cell is nonpositive or non-finite."""


class DimensionError(DataError):
    """Operands have incompatible shapes."""


class NotInClrPlane(DataError):
    """A clr vector does not sum to zero."""


class InvalidData(DataError):
    """Non-finite values in a data matrix."""


class IncompleteTable(DataError):
    def __init__(self, sample_id: str | None, cell: tuple[str, str] | None, msg: str | None = None):
        self.sample_id = sample_id
        self.cell = cell
        if msg is None:
            msg = f"sample {sample_id!r} is missing cell {cell!r}"
        super().__init__(msg)


class HeterogeneousLevels(DataError):
    """Samples disagree on their row or column factor levels."""


class RankDeficient(NumericError):
    """Too few observations, or a scatter matrix that cannot be inverted."""


class DegenerateData(NumericError):
    """Every candidate h-subset has a singular covariance matrix."""


class DegenerateAxis(NumericError):
    """A biplot axis has zero variance."""


class ComparisonError(ConfigError):
    """Two PCA models cannot be compared."""


class InvalidSpec(ConfigError):
    """A synthetic generator specification is invalid."""
