"""Exception hierarchy shared across the toolkit.

Every error carries a short machine-readable ``code`` so the CLI can map
failures to distinct exit codes without string matching.
"""

from __future__ import annotations

from dataclasses import dataclass


class CreditPoolError(Exception):
    """Base class for all toolkit errors."""

    code = "ERROR"


@dataclass(frozen=True)
class Violation:
    """One validation failure: which field of which atom, and why."""

    code: str          # NEGATIVE_PARAMETER | WEIGHT_SUM_MISMATCH | CAP_EXCEEDED
    where: str         # e.g. "atoms[2].firm_type.sigma"
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.where}: {self.message}"


class ValidationError(CreditPoolError):
    """Raised when a measure or configuration violates model constraints.

    Collects *all* violations found, not just the first.
    """

    code = "VALIDATION"

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def codes(self):
        return tuple(v.code for v in self.violations)


class ConfigError(CreditPoolError):
    """Configuration file missing, unreadable, or structurally invalid."""

    code = "CONFIG_PARSE"


class NoConvergenceError(CreditPoolError):
    """Fixed-point iteration failed to reach tolerance within max_iter."""

    code = "NO_CONVERGENCE"

    def __init__(self, iterations: int, residual: float, tol: float):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"no convergence after {iterations} iterations: "
            f"residual {residual:.3e} > tol {tol:.3e}"
        )


class NonFiniteResultError(CreditPoolError):
    """A deterministic solve produced NaN/inf or a materially negative value."""

    code = "NONFINITE_RESULT"


class NonFiniteStateError(CreditPoolError):
    """A simulated intensity became non-finite."""

    code = "NONFINITE_STATE"

    def __init__(self, firm: int, step: int):
        self.firm = firm
        self.step = step
        super().__init__(f"non-finite intensity at firm {firm}, step {step}")


class DegenerateMeasureError(CreditPoolError):
    """All surviving intensity mass is extinct; weighted averages undefined."""

    code = "DEGENERATE_MEASURE"


class MomentsNotRecordedError(CreditPoolError):
    """Moment paths were requested but not recorded during simulation."""

    code = "MOMENTS_NOT_RECORDED"
