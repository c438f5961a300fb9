"""Exception hierarchy shared by every cellmap module."""


class CellMapError(Exception):
    """Base class for all cellmap errors."""


class DomainError(CellMapError, ValueError):
    """Input outside the domain of an operation (non-finite value, dimension mismatch, SINK where a regular cell is needed)."""


class RangeError(CellMapError, IndexError):
    """Integer index or level outside its admissible range."""


class DivergenceError(CellMapError, ArithmeticError):
    """A simulated or integrated state became non-finite or left its guard box."""


class SolverError(CellMapError, ArithmeticError):
    """An iterative solver failed to converge."""


class LayoutError(CellMapError, ValueError):
    """ROM address/data layout inconsistent with the table being exported."""


class FormatError(CellMapError, ValueError):
    """A serialized artifact has the wrong size, magic or structure."""


class ConfigError(CellMapError, ValueError):
    """A system configuration document failed validation."""


class PlaybackError(CellMapError, RuntimeError):
    """Closed-loop DOC playback entered SINK or an uncontrollable cell.

    The partial run up to the failure is kept on the exception so callers
    can still plot it.
    """

    def __init__(self, message, states=None, controls=None, cost=0.0):
        super().__init__(message)
        self.states = states
        self.controls = controls
        self.cost = cost
