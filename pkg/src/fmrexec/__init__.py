"""Optimal liquidation with a diurnal impact curve, a fast mean-reverting
impact factor and an Ornstein-Uhlenbeck trading signal."""

__version__ = "0.1.0"

from .model import (DomainError, ExecutionProblem, FmrError, ImpactModel, NotPositiveDefinite,  # noqa: E402
                    SignalModel, TimeGrid, Unsupported, build_correlation)
from .riccati import RiccatiSolution, riccati_closed_form, solve_riccati  # noqa: E402
from .signals import StrategyTables, build_tables  # noqa: E402
from .strategy import Policy, PolicyKind, nu_AC, nu_first_order, nu_TS  # noqa: E402

__all__ = [
    "DomainError", "ExecutionProblem", "FmrError", "ImpactModel", "NotPositiveDefinite", "SignalModel",
    "TimeGrid", "Unsupported", "build_correlation", "RiccatiSolution", "riccati_closed_form", "solve_riccati",
    "StrategyTables", "build_tables", "Policy", "PolicyKind", "nu_AC", "nu_first_order", "nu_TS",
]
