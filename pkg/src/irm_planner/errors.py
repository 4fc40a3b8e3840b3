"""Exception types shared across the planner."""


class PlannerError(Exception):
    """Base class for all planner-specific errors."""


class ConfigError(PlannerError):
    """Invalid configuration value or an enumeration that would exceed limits."""


class InputError(PlannerError):
    """Malformed user input (trajectory, pose string, degenerate polyline)."""


class FormatError(PlannerError):
    """Artifact file violates its schema or carries an unsupported version."""


class UnreachableWaypoint(PlannerError):
    """A trajectory waypoint has no feasible base placement in the IRM."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"waypoint {index} has no feasible base placement")


class DegenerateCluster(PlannerError):
    """Cluster points are collinear, so no convex polygon with area exists."""


class EmptyRegionSet(PlannerError):
    """No convex region survived filtering; the layer is too sparse to refine."""
