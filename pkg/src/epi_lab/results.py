"""Verification verdict container shared by all checkers."""

from __future__ import annotations

from dataclasses import dataclass, field


def inequality_tolerance(lhs: float, rhs: float) -> float:
    """Default slack allowance, dominated by trapezoid truncation error at
    the default grid size."""
    return 1e-4 * max(abs(lhs), abs(rhs)) + 1e-6


@dataclass(frozen=True)
class CheckResult:
    """One inequality or identity verification.

    ``slack = lhs - rhs``; an inequality passes when slack >= -tolerance, an
    equality case when |slack| <= tolerance.  ``skipped`` marks verdicts the
    inputs do not support (degenerate denominators, unmet preconditions);
    skipped results never count as failures.
    """

    name: str
    lhs: float | None
    rhs: float | None
    slack: float | None
    passed: bool
    tolerance: float
    mode: str  # "inequality" | "equality-case"
    skipped: bool = False
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "mode": self.mode,
            "skipped": self.skipped,
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return obj.item()
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return repr(obj)


def inequality_check(
    name: str, lhs: float, rhs: float, tolerance: float | None = None,
    diagnostics: dict | None = None,
) -> CheckResult:
    lhs, rhs = float(lhs), float(rhs)
    tol = inequality_tolerance(lhs, rhs) if tolerance is None else float(tolerance)
    slack = lhs - rhs
    return CheckResult(name, lhs, rhs, slack, slack >= -tol, tol,
                       "inequality", False, dict(diagnostics or {}))


def equality_check(
    name: str, lhs: float, rhs: float, tolerance: float | None = None,
    diagnostics: dict | None = None,
) -> CheckResult:
    lhs, rhs = float(lhs), float(rhs)
    tol = inequality_tolerance(lhs, rhs) if tolerance is None else float(tolerance)
    slack = lhs - rhs
    return CheckResult(name, lhs, rhs, slack, abs(slack) <= tol, tol,
                       "equality-case", False, dict(diagnostics or {}))


def skipped_check(name: str, reason: str, mode: str = "inequality",
                  diagnostics: dict | None = None) -> CheckResult:
    diag = {"reason": reason}
    diag.update(diagnostics or {})
    return CheckResult(name, None, None, None, True, 0.0, mode, True, diag)
