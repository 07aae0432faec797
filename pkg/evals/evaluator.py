"""Evaluator module that judges experiment reports against frozen benchmark thresholds."""
from typing import Dict, List

from pbim.experiment import Report


class Evaluator:
    def __init__(self, thresholds: Dict[str, float]):
        """
        Thresholds (all rates are fractions, not percentage points):
            max_gap_at_budget: allowed shortfall of PSGHM behind random at the full budget
            min_rate: absolute floor for PSGHM's mean classification rate at the full budget
            max_gap_small_budget: allowed shortfall of PSGHM at the small budget behind
                random at the full budget
            max_seconds: wall-clock limit for the whole suite
        """
        self.thresholds = thresholds

    def benchmark_report(self, report: Report, positive_class: str, random_variant: str,
                         psghm_variant: str, budget: int, small_budget: int,
                         seconds: float) -> Dict[str, object]:
        """Scores one report; every check carries its observed value and verdict."""
        t = self.thresholds
        random_full = report.aggregate(random_variant, positive_class, budget)["classification_rate"]["mean"]
        psghm_full = report.aggregate(psghm_variant, positive_class, budget)["classification_rate"]["mean"]
        psghm_small = report.aggregate(psghm_variant, positive_class, small_budget)["classification_rate"]["mean"]

        checks: List[Dict[str, object]] = [
            {
                "name": f"psghm@{budget} within {t['max_gap_at_budget']:.2f} of random@{budget}",
                "value": psghm_full - random_full,
                "passed": psghm_full >= random_full - t["max_gap_at_budget"],
            },
            {
                "name": f"psghm@{budget} mean rate >= {t['min_rate']:.2f}",
                "value": psghm_full,
                "passed": psghm_full >= t["min_rate"],
            },
            {
                "name": f"psghm@{small_budget} within {t['max_gap_small_budget']:.2f} of random@{budget}",
                "value": psghm_small - random_full,
                "passed": psghm_small >= random_full - t["max_gap_small_budget"],
            },
            {
                "name": f"runtime <= {t['max_seconds']:.0f}s",
                "value": seconds,
                "passed": seconds <= t["max_seconds"],
            },
        ]
        return {
            "random_rate": random_full,
            "psghm_rate": psghm_full,
            "psghm_small_rate": psghm_small,
            "checks": checks,
            "passed": all(c["passed"] for c in checks),
        }
