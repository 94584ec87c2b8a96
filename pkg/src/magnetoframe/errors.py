"""Exception hierarchy shared by all modules."""


class MagnetoframeError(Exception):
    """Base class for every error raised by the package."""


class DomainError(MagnetoframeError):
    """A point left the chart domain."""


class MetricError(MagnetoframeError):
    """The metric is not positive definite at a queried point."""


class DegeneratePlaneError(MagnetoframeError, ValueError):
    """Two vectors do not span a plane."""


class InvariantError(MagnetoframeError):
    """A numerical invariant check failed."""


class DriftError(InvariantError):
    """Conserved quantities drifted beyond the integrator tolerance.

    The partially integrated curve is kept on ``curve``.
    """

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class ConfigError(MagnetoframeError, ValueError):
    """Invalid experiment configuration."""


class DegenerateSurfaceError(MagnetoframeError, ValueError):
    """A surface is degenerate; ``node`` holds the offending grid index, if any."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node
