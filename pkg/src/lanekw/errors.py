"""Exception types shared across the package.

The CLI maps ConfigError (and argparse usage errors) to exit code 1 and
every other LaneKWError to exit code 2.
"""


class LaneKWError(Exception):
    """Base class for all package errors."""


class DomainError(LaneKWError, ValueError):
    """An input value lies outside the mathematical domain of an operation."""


class ConfigError(LaneKWError, ValueError):
    """A config file or CLI invocation is malformed or inconsistent."""


class BlowupError(LaneKWError, RuntimeError):
    """A simulation step produced an invalid state (should be unreachable
    under the CFL bound; reports cell index and time)."""

    def __init__(self, message, *, cell=None, t=None):
        super().__init__(message)
        self.cell = cell
        self.t = t


class EmptySampleError(LaneKWError, ValueError):
    """An aggregation interval contains zero vehicle-time."""
