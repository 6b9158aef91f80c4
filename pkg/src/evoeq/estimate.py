from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Optional


class ConvergenceError(RuntimeError):
    """Raised when an integration budget runs out before the tolerance is met.

    ``value`` and ``err_estimate`` carry the best result reached so far.
    """

    def __init__(self, message: str, value: float, err_estimate: float, levels: Optional[dict] = None):
        super().__init__(message)
        self.value = value
        self.err_estimate = err_estimate
        self.levels = levels or {}


class DomainError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


@dataclass
class EstimateReport:
    value: float
    method: str  # "closed-form" | "quadrature" | "monte-carlo"
    err_estimate: float
    n: int
    d: int
    evaluations: int = 0
    seed: Optional[int] = None
    budgets: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
