"""Exception hierarchy shared by all modules."""


class PlasmakinError(Exception):
    """Base class for all toolkit errors."""


class InputError(PlasmakinError, ValueError):
    """Invalid argument (non-unit direction, nonpositive parameter, ...)."""


class DomainError(PlasmakinError):
    """Input lies outside the representable domain (grid too small, ...)."""


class PreconditionError(PlasmakinError):
    """Operation precondition violated (e.g. profile without decay flag)."""


class StabilityError(PlasmakinError):
    """A plasma-stability assumption is violated."""


class DegenerateDielectricError(StabilityError):
    """|epsilon| fell below the configured floor."""


class RootNotFoundError(PlasmakinError):
    """Bracketed root search failed; carries a diagnostic of the scanned range."""


class ResolutionError(PlasmakinError):
    """Grid resolution insufficient for the requested evaluation."""


class StepSizeError(PlasmakinError):
    """Time step violates the accuracy guard."""


class TruncationError(PlasmakinError):
    """Contour/series truncation error above tolerance."""


class SingularConfigurationError(InputError):
    """Geometric configuration is singular (v1 == v2, w == 0, k == 0)."""


class ConsistencyError(PlasmakinError):
    """Internal numerical-consistency check failed (e.g. fixed-point residual)."""


class ConfigError(PlasmakinError):
    """Scenario configuration problem; carries line/column when known."""

    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        loc = ""
        if path is not None:
            loc += f"{path}:"
        if line is not None:
            loc += f"{line}:"
            if column is not None:
                loc += f"{column}:"
        super().__init__(f"{loc} {message}" if loc else message)


class CompareError(PlasmakinError):
    """Manifest comparison failed (shape mismatch)."""
