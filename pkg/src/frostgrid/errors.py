"""Exception types shared across the package."""


class FrostgridError(Exception):
    """Base class for all package-specific errors."""


class InfeasibleInstanceError(FrostgridError):
    """Instance generation produced no usable candidate sites (or fewer than k)."""


class InfeasibleParametersError(FrostgridError):
    """Model parameters cannot admit any solution, e.g. k exceeds the node count."""


class NoSpanningTreeError(FrostgridError):
    """The requested node set is disconnected; no spanning tree exists."""


class PlacementError(FrostgridError):
    """Heuristic heater placement failed to find a tree-clear point."""


class BudgetExceededError(FrostgridError):
    """Exhaustive enumeration would exceed the configured combinatorial budget."""


class MappingError(FrostgridError):
    """A name in an external file does not map to a model variable."""


class ExportError(FrostgridError):
    """Model export failed (unencodable name or I/O failure)."""


class ImportedSolutionError(FrostgridError):
    """An imported solution failed feasibility validation."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NumericError(FrostgridError):
    """The LP/MILP machinery hit an unrecoverable numerical failure."""


class RenderError(FrostgridError):
    """Plan and instance are inconsistent or otherwise unrenderable."""


class PlanMismatchError(FrostgridError):
    """A plan file does not belong to the given instance (digest mismatch)."""
