"""Numerical tolerances and the solver audit used to certify steady states."""
from __future__ import annotations

import contextvars
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field


@dataclass(frozen=True)
class NumericalSettings:
    """Tolerances shared by the solver, quadrature and fits.

    Frequencies are in MHz (ordinary frequency), lengths in micrometres.
    """

    hermiticity_tol: float = 1e-10
    trace_tol: float = 1e-10
    eigenvalue_floor: float = -1e-9
    residual_tol: float = 1e-9
    max_condition: float = 1e14
    quad_nodes: int = 201
    r_min: float = 0.5
    tail_mass: float = 1e-6
    quad_rtol: float = 5e-3


DEFAULT_SETTINGS = NumericalSettings()


@dataclass
class SolverAudit:
    """Worst-case hygiene metrics over every steady state solved while active."""

    count: int = 0
    max_trace_error: float = 0.0
    max_hermiticity_error: float = 0.0
    min_eigenvalue: float = float("inf")
    max_residual: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, count, trace_error, hermiticity_error, min_eigenvalue, residual):
        with self._lock:
            self.count += int(count)
            self.max_trace_error = max(self.max_trace_error, float(trace_error))
            self.max_hermiticity_error = max(self.max_hermiticity_error, float(hermiticity_error))
            self.min_eigenvalue = min(self.min_eigenvalue, float(min_eigenvalue))
            self.max_residual = max(self.max_residual, float(residual))

    def as_dict(self) -> dict:
        return {
            "steady_states": self.count,
            "max_trace_error": self.max_trace_error,
            "max_hermiticity_error": self.max_hermiticity_error,
            "min_eigenvalue": self.min_eigenvalue if self.count else None,
            "max_residual": self.max_residual,
        }

    def passes(self, settings: NumericalSettings = DEFAULT_SETTINGS) -> bool:
        return (
            self.count > 0
            and self.max_trace_error <= settings.trace_tol
            and self.max_hermiticity_error <= settings.hermiticity_tol
            and self.min_eigenvalue >= settings.eigenvalue_floor
            and self.max_residual <= settings.residual_tol
        )


_ACTIVE_AUDIT: contextvars.ContextVar[SolverAudit | None] = contextvars.ContextVar(
    "rydberg_eit_solver_audit", default=None
)


def active_audit() -> SolverAudit | None:
    return _ACTIVE_AUDIT.get()


@contextmanager
def solver_audit():
    """Collect hygiene metrics of all steady-state solves in this context.

    Worker threads only see the audit if they run inside a copy of the
    caller's context (see :func:`rydberg_eit.parallel.pmap`).
    """
    audit = SolverAudit()
    token = _ACTIVE_AUDIT.set(audit)
    try:
        yield audit
    finally:
        _ACTIVE_AUDIT.reset(token)
