"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: DataError -> 3, NumericError -> 4.
"""


class PhishnetError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PhishnetError):
    """Bad or inconsistent input data (manifests, feature tables, checkpoints)."""


class NumericError(PhishnetError):
    """Numerical failure: non-finite values, divergence, degenerate inputs."""
