"""Exception taxonomy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, DataError -> 3,
NumericalError / DiagnosticsError -> 4.  Invalid arguments raise plain
ValueError.
"""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class DataError(ValueError):
    """Unparseable or inconsistent input data (patterns, rasters, chains)."""


class EvaluationError(RuntimeError):
    """A likelihood or score could not be evaluated at the requested point.

    Carries the offending pair (i, j) when a nonpositive Palm intensity was
    hit inside the pairwise sum.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NumericalError(RuntimeError):
    """Linear-algebra failure that survived all recovery attempts."""


class DiagnosticsError(RuntimeError):
    """A sampler or calibration procedure produced unusable diagnostics."""
