"""Named residual checks collected into pass/fail reports."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = f"[{status}] {self.name}: {self.value:.6g} (tol {self.tolerance:.3g})"
        return out + (f"  -- {self.note}" if self.note else "")


@dataclass
class VerificationReport:
    name: str
    checks: list = field(default_factory=list)

    def add(self, name, value, tolerance, note="") -> CheckResult:
        res = CheckResult(name=name, value=float(value), tolerance=float(tolerance),
                          passed=bool(abs(value) <= tolerance), note=note)
        self.checks.append(res)
        return res

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        yield f"== {self.name} =="
        for c in self.checks:
            yield c.line()
        yield f"== {self.name}: {'PASS' if self.passed else 'FAIL'} =="
