"""Customer-side baselines and the shared worst-case evaluation protocol."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import NoFeasibleSelection
from .market import CustomerDecision, Realization, customer_total_profit
from .rsr import scenario_tables
from .uncertainty import worst_case_search
from .validation import check_prices


class Recourse(str, enum.Enum):
    FIXED = "FixedDuration"
    ADAPTIVE = "AdaptiveDuration"


@dataclass(frozen=True)
class EvaluationReport:
    algorithm: str
    selection: tuple[int, ...]
    durations: tuple[float, ...]
    worst_realization: Realization
    worst_case_profit: float
    recourse: Recourse

    def to_row(self):
        return {
            "algorithm": self.algorithm,
            "selection": " ".join(map(str, self.selection)),
            "durations": " ".join(repr(t) for t in self.durations),
            "g": " ".join(repr(x) for x in self.worst_realization.g),
            "h": " ".join(repr(x) for x in self.worst_realization.h),
            "worst_case_profit": self.worst_case_profit,
            "recourse": self.recourse.value,
        }


def _nominal_tables(inst, prices):
    return scenario_tables(Realization.nominal(inst.n_customers), inst, prices)


def _decision_from_tables(choice, tau):
    N = len(choice)
    return CustomerDecision(tuple(int(u) + 1 for u in choice),
                            tuple(float(t) for t in tau[np.arange(N), choice]))


def greedy_select(inst, prices):
    """Everyone rents the cheapest-priced model and optimizes duration at nominal."""
    check_prices(prices, inst)
    value, tau = _nominal_tables(inst, prices)
    beta = prices.prices(inst.n_models)
    cheapest = np.flatnonzero(beta == beta.min())
    # among equally cheap models, lowest nominal cost, then lowest index
    cost = inst.base_charges[cheapest][None, :] + value[:, cheapest]
    choice = cheapest[np.argmin(cost, axis=1)]
    if not np.isfinite(value[np.arange(inst.n_customers), choice]).all():
        raise NoFeasibleSelection("cheapest model is infeasible at the nominal environment")
    return _decision_from_tables(choice, tau)


def static_env_opt(inst, prices):
    """Exact deterministic optimum at the nominal environment, customer by customer."""
    check_prices(prices, inst)
    value, tau = _nominal_tables(inst, prices)
    cost = inst.base_charges[None, :] + value
    choice = np.argmin(cost, axis=1)
    if not np.isfinite(cost[np.arange(inst.n_customers), choice]).all():
        raise NoFeasibleSelection("some customer has no feasible model at the nominal environment")
    return _decision_from_tables(choice, tau)


def evaluate_worst_case(decision, recourse, inst, prices, algorithm="", grid_depth=None):
    """Customers' total profit when the adversary answers ``decision``.

    ``FixedDuration`` keeps the decided durations, truncated to the realized
    energy cap; ``AdaptiveDuration`` re-optimizes them at every realization.
    """
    recourse = Recourse(recourse)
    planned = None if recourse is Recourse.ADAPTIVE else np.asarray(decision.duration)
    wc = worst_case_search(decision.model_choice, inst, prices, grid_depth, durations=planned)
    if not wc.feasible:
        raise NoFeasibleSelection(f"selection {decision.model_choice} is infeasible under the worst case")
    realized = CustomerDecision(decision.model_choice, wc.durations)
    profit = customer_total_profit(realized, wc.realization.distances(inst),
                                   wc.realization.energies(inst), inst, prices)
    return EvaluationReport(algorithm, decision.model_choice, wc.durations,
                            wc.realization, profit, recourse)
