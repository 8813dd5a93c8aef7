"""Shared exception types."""


class DegenerateGeometryError(ValueError):
    """Antiparallel tangents or edges: a non-physical fold at the grid scale."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge."""
