"""Robust model selection and pricing for a language-model-as-a-service market.

Customers rent a fine-tuning model and choose a training duration while their
channel distance and energy budget fluctuate inside budgeted uncertainty sets;
the seller sets a linear price schedule anticipating the customers' robust
response.
"""

from .baselines import EvaluationReport, Recourse, evaluate_worst_case, greedy_select, static_env_opt
from .bench import ExperimentSpec, InstanceParams, generate_instance, run
from .estimators import GreedyRenter, GridPricer, IterativePricer, RobustRenter, StaticEnvRenter
from .exceptions import (EnergyBudgetViolation, InfeasibleDuration, IterationLimit,
                         NoFeasibleSelection, ValidationError)
from .market import (Customer, CustomerDecision, EnergyMode, MarketInstance, PriceSchedule,
                     Realization, ScModel, SellerOutcome, customer_net_cost,
                     customer_total_profit, seller_profit)
from .oracle import OracleGrid, brute_force_seller, brute_force_two_stage
from .pricing import PricingConfig, PricingResult, imp, near_opt, seller_profit_at
from .rsr import CcgState, RsrResult, Scenario, ScenarioKind, rsr, solve_master, solve_subproblem
from .scalar import DurationProblem, dual_value, kkt_residuals, optimal_duration
from .uncertainty import BudgetPolytope, WorstCase, worst_case_search

__version__ = "0.1.0"

__all__ = [
    "BudgetPolytope", "CcgState", "Customer", "CustomerDecision", "DurationProblem",
    "EnergyBudgetViolation", "EnergyMode", "EvaluationReport", "ExperimentSpec",
    "GreedyRenter", "GridPricer", "InfeasibleDuration", "InstanceParams", "IterationLimit",
    "IterativePricer", "MarketInstance", "NoFeasibleSelection", "OracleGrid", "PriceSchedule",
    "PricingConfig", "PricingResult", "Realization", "Recourse", "RobustRenter", "RsrResult",
    "ScModel", "Scenario", "ScenarioKind", "SellerOutcome", "StaticEnvRenter",
    "ValidationError", "WorstCase", "brute_force_seller", "brute_force_two_stage",
    "customer_net_cost", "customer_total_profit", "dual_value", "evaluate_worst_case",
    "generate_instance", "greedy_select", "imp", "kkt_residuals", "near_opt",
    "optimal_duration", "rsr", "run", "seller_profit", "seller_profit_at", "solve_master",
    "solve_subproblem", "static_env_opt", "worst_case_search",
]
