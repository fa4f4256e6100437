"""Exception hierarchy for tvcm.

Every failure mode that callers are expected to handle raises a subclass of
TvcmError; plain ValueError/TypeError are reserved for programming mistakes
such as mismatched array lengths.
"""

from __future__ import annotations


class TvcmError(Exception):
    """Base class for all tvcm-specific errors."""


class DataError(TvcmError):
    """Invalid longitudinal dataset contents."""


class SchemaError(DataError):
    """CSV header is missing required columns."""


class CsvParseError(DataError):
    """A CSV cell could not be parsed; the message names the row."""


class EmptyDataError(DataError):
    """No data rows were found."""


class KnotError(TvcmError):
    """Knot placement failed (degenerate domain or tied quantiles)."""


class DesignError(TvcmError):
    """Design matrix cannot be built or used for fitting."""


class InsufficientDataError(DesignError):
    """Fewer observations than regression coefficients."""


class SingularDesignError(DesignError):
    """Weighted Gram matrix is numerically singular."""


class BootstrapDegeneracyError(TvcmError):
    """Too many resampled datasets produced singular designs."""


class NumericalError(TvcmError):
    """A numerical routine broke down (non-finite values, failed factorization)."""


class SelectionError(TvcmError):
    """Model selection found no feasible candidate or an infeasible fold."""
