"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class DegenerateGeometryError(ValueError):
    """The direction set does not span a proper tetrahedron."""


class ConfigError(ValueError):
    """A run configuration is inconsistent or incomplete."""


class NumericalError(RuntimeError):
    """A quadrature or series failed to reach the requested tolerance.

    ``achieved`` carries the best error estimate obtained, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
