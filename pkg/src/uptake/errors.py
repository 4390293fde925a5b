"""Shared exception types.

Modules raise these so the CLI and HTTP layers can map failures onto
exit codes / status codes without string matching.
"""

from __future__ import annotations


class UptakeError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(UptakeError, ValueError):
    """Malformed or out-of-contract input data (bad CSV row, bad JSON, bounds)."""


class GraphCycleError(UptakeError, ValueError):
    """A directed cycle where a DAG is required."""


class UnknownNodeError(UptakeError, KeyError):
    """A construct id that is not registered in the graph."""


class PriorCoverageError(UptakeError, ValueError):
    """A model parameter without a prior entry, or a prior entry without a parameter."""


class ConvergenceError(UptakeError, RuntimeError):
    """Refusing to proceed because sampler diagnostics failed thresholds."""


class HashMismatchError(UptakeError, ValueError):
    """A posterior or prior used with a graph/dataset it was not fit against."""


class GridBoundaryError(UptakeError, ValueError):
    """Quadrature grid too small: probability mass leaks past the boundary."""
