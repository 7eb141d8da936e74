from .adaptive import run_adaptive_test
from .baseline import run_baseline_test
from .common import ACCEPT, REJECT, TesterVerdict, Witness
from .nonadaptive import run_nonadaptive_test

TESTERS = {
    "nonadaptive": run_nonadaptive_test,
    "adaptive": run_adaptive_test,
    "baseline": run_baseline_test,
}

__all__ = ["ACCEPT", "REJECT", "TESTERS", "TesterVerdict", "Witness",
           "run_adaptive_test", "run_baseline_test", "run_nonadaptive_test"]
