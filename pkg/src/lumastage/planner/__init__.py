from .loop import Budgets, PlannerConfig, PlanningFailure, PlanResult, run_plan
from .state import (Frontier, FrontierEntry, JudgeDecision, PairOutcome, PlanState,
                    RefinementHint, STAGE_HINTS)

__all__ = ["Budgets", "PlannerConfig", "PlanningFailure", "PlanResult", "run_plan",
           "Frontier", "FrontierEntry", "JudgeDecision", "PairOutcome", "PlanState",
           "RefinementHint", "STAGE_HINTS"]
