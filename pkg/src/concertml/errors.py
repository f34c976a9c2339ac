"""Exceptions shared across model families."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """An iterative fit diverged or ran out of its iteration budget.

    ``violation`` carries the final optimality-condition violation when the
    failing solver tracks one.
    """

    def __init__(self, message: str, violation: float | None = None):
        super().__init__(message)
        self.violation = violation
