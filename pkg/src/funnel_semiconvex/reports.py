from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class VerificationReport:
    """Outcome of one sampled inequality check ``lhs <= rhs``.

    ``max_violation`` is the supremum over samples of ``lhs - rhs``; a sample
    counts as a violation only when that gap exceeds its slack allowance.
    ``worst_index`` is the lowest sample index attaining the largest
    slack-adjusted gap, so the report does not depend on evaluation order.
    """

    check: str
    samples: int
    max_violation: float
    violations: int
    passed: bool
    empirical_constant: float | None = None
    skipped: int = 0
    worst_index: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "samples": self.samples,
            "skipped": self.skipped,
            "max_violation": self.max_violation,
            "violations": self.violations,
            "empirical_constant": self.empirical_constant,
            "worst_index": self.worst_index,
            "passed": self.passed,
            "details": self.details,
        }


def gap_report(check: str, gap, slack=0.0, skipped: int = 0, **details) -> VerificationReport:
    """Summarise per-sample gaps ``lhs - rhs`` against a slack allowance."""
    gap = np.asarray(gap, dtype=float)
    if gap.size == 0:
        return VerificationReport(check, 0, float("-inf"), 0, True, skipped=skipped,
                                  details=details)
    excess = gap - np.broadcast_to(np.asarray(slack, dtype=float), gap.shape)
    worst = int(np.argmax(excess))
    n_bad = int(np.count_nonzero(excess > 0) + np.count_nonzero(~np.isfinite(gap)))
    details.setdefault("max_excess_over_slack", float(excess[worst]))
    return VerificationReport(
        check=check,
        samples=int(gap.size),
        max_violation=float(np.max(gap)),
        violations=n_bad,
        passed=n_bad == 0,
        skipped=skipped,
        worst_index=worst,
        details=details,
    )
