"""Column-and-constraint generation for the customers' two-stage robust problem.

First stage: every customer picks a model ``psi_n``. Second stage: after the
environment (distance, energy budget) is revealed, each customer picks its
rent duration. The master problem chooses ``psi`` against a growing pool of
adversarial scenarios; the subproblem finds the realization that hurts the
current ``psi`` most and adds it to the pool.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import IterationLimit, NoFeasibleSelection
from .market import CustomerDecision, Realization
from .scalar import energy_rates, optimal_duration_arrays
from .uncertainty import worst_case_search
from .validation import check_positive, check_prices, check_selection

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 50
DEFAULT_ENUMERATION_LIMIT = 100_000
_CHUNK = 8192


class ScenarioKind(str, enum.Enum):
    OPTIMALITY = "Optimality"
    FEASIBILITY = "Feasibility"


@dataclass(frozen=True)
class Scenario:
    realization: Realization
    kind: ScenarioKind = ScenarioKind.OPTIMALITY


@dataclass
class CcgState:
    scenarios: list[Scenario] = field(default_factory=list)
    ub: float = math.inf
    lb: float = -math.inf
    iteration: int = 0
    trace: list[tuple[float, float]] = field(default_factory=list)
    kinds: list[ScenarioKind] = field(default_factory=list)
    converged: bool = False

    @property
    def gap(self):
        if math.isinf(self.ub) or math.isinf(self.lb):
            return math.inf
        return (self.ub - self.lb) / max(1.0, abs(self.lb))

    def trace_records(self):
        """Per-iteration records ready for line-delimited JSON."""
        return [
            {"iteration": i + 1, "lb": lb, "ub": None if math.isinf(ub) else ub, "kind": kind.value}
            for i, ((lb, ub), kind) in enumerate(zip(self.trace, self.kinds))
        ]

    def to_jsonl(self):
        return "".join(json.dumps(rec) + "\n" for rec in self.trace_records())


@dataclass(frozen=True)
class RsrResult:
    selection: tuple[int, ...]
    durations: tuple[float, ...]
    objective: float
    worst_realization: Realization
    state: CcgState

    @property
    def decision(self):
        return CustomerDecision(self.selection, self.durations)

    @property
    def profit(self):
        return -self.objective

    @property
    def nominal_durations(self):
        """Alias of ``durations`` (taken at the worst surviving scenario, not the nominal one)."""
        return self.durations


class MasterSolution(NamedTuple):
    selection: tuple[int, ...]
    alpha: float
    durations: np.ndarray  # (scenarios, N)
    lb: float


def scenario_tables(realization, inst, prices):
    """Optimal net cost and duration of every (customer, model) pair at a realization.

    Returns ``(value, tau)`` of shape ``(N, U)``; infeasible pairs have value ``+inf``.
    """
    d = realization.distances(inst)
    q = realization.energies(inst)
    rate = energy_rates(inst, d)
    beta = prices.prices(inst.n_models)
    marginal = inst.energy_price * rate + beta[None, :]
    with np.errstate(divide="ignore"):
        cap = np.where(rate > 0, q[:, None] / rate, np.inf)
    tau, value, _ = optimal_duration_arrays(
        marginal, inst.utility_coeff, inst.speeds[None, :], inst.t_min, inst.t_max, cap)
    return value, tau


class _MasterTables:
    """Scenario cost tables, cached so each scenario is evaluated once per run."""

    def __init__(self, inst, prices):
        self.inst = inst
        self.prices = prices
        self._cache = {}

    def get(self, scenario):
        key = (scenario.realization.g, scenario.realization.h)
        if key not in self._cache:
            self._cache[key] = scenario_tables(scenario.realization, self.inst, self.prices)
        return self._cache[key]


def _selection_objective(sel, H, V, allowed):
    """Master objective of selections ``sel`` (S, N) given optimality tables ``V`` (L, N, U)."""
    cols = np.arange(sel.shape[1])
    base = H[sel].sum(axis=1)
    ok = allowed[cols, sel].all(axis=1)
    if V.shape[0]:
        per_scenario = V[:, cols, sel].sum(axis=2)  # (L, S)
        alpha = per_scenario.max(axis=0)
    else:
        alpha = np.zeros(sel.shape[0])
    return np.where(ok, base + alpha, np.inf), alpha


def _local_search(H, V, allowed, N, U, rng, restarts=8):
    """Coordinate descent over customers with random restarts (inexact fallback)."""
    starts = [np.zeros(N, dtype=int)]
    if V.shape[0]:
        starts.append(np.argmin(H[None, :] + V.max(axis=0), axis=1))
    starts += [rng.integers(0, U, size=N) for _ in range(restarts)]
    best_sel, best_val = None, math.inf
    for sel in starts:
        sel = sel.copy()
        val = _selection_objective(sel[None, :], H, V, allowed)[0][0]
        improved = True
        while improved:
            improved = False
            for n in range(N):
                trial = np.repeat(sel[None, :], U, axis=0)
                trial[:, n] = np.arange(U)
                vals = _selection_objective(trial, H, V, allowed)[0]
                j = int(np.argmin(vals))
                if vals[j] < val:
                    sel, val, improved = trial[j].copy(), vals[j], True
        key = tuple(sel)
        if val < best_val or (val == best_val and best_sel is not None and key < tuple(best_sel)):
            best_sel, best_val = sel, val
    return best_sel, best_val


def solve_master(scenarios, inst, prices, enumeration_limit=DEFAULT_ENUMERATION_LIMIT,
                 random_state=None, tables=None):
    """Exact (or local-search) minimization of base charges plus the scenario max.

    Durations decouple across scenarios, so each scenario contributes the sum
    of per-customer optimal costs; feasibility scenarios only exclude
    selections that leave some customer without a feasible duration.
    """
    N, U = inst.n_customers, inst.n_models
    tables = tables or _MasterTables(inst, prices)
    H = inst.base_charges
    allowed = np.ones((N, U), dtype=bool)
    V, taus, opt_rows = [], [], []
    for i, sc in enumerate(scenarios):
        value, tau = tables.get(sc)
        allowed &= np.isfinite(value)
        taus.append(tau)
        if sc.kind is ScenarioKind.OPTIMALITY:
            V.append(value)
            opt_rows.append(i)
    V = np.array(V).reshape(-1, N, U)
    # infinite table entries are already excluded via ``allowed``
    V = np.where(np.isfinite(V), V, 0.0)

    if U ** N <= enumeration_limit:
        best_val, best_sel = math.inf, None
        product = itertools.product(range(U), repeat=N)
        while True:
            chunk = np.array(list(itertools.islice(product, _CHUNK)), dtype=int)
            if chunk.size == 0:
                break
            vals, _ = _selection_objective(chunk, H, V, allowed)
            j = int(np.argmin(vals))
            if vals[j] < best_val:
                best_val, best_sel = vals[j], chunk[j]
    else:
        rng = np.random.default_rng(random_state)
        best_sel, best_val = _local_search(H, V, allowed, N, U, rng)

    if best_sel is None or math.isinf(best_val):
        raise NoFeasibleSelection("every model selection is excluded by feasibility cuts")
    sel = best_sel
    alpha = float(_selection_objective(sel[None, :], H, V, allowed)[1][0])
    durations = np.array([tau[np.arange(N), sel] for tau in taus]).reshape(-1, N)
    return MasterSolution(tuple(int(u) + 1 for u in sel), alpha, durations, float(best_val))


def solve_subproblem(selection, inst, prices, grid_depth=None):
    """Worst-case net cost ``Q(psi)``; ``+inf`` with a witness when infeasible."""
    wc = worst_case_search(selection, inst, prices, grid_depth)
    return wc


def rsr(inst, prices, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
        enumeration_limit=DEFAULT_ENUMERATION_LIMIT, grid_depth=None, random_state=None):
    """Robust selecting-and-renting: C&CG until ``ub - lb <= tol * max(1, |lb|)``.

    The pool starts from the nominal realization. Raises
    :class:`NoFeasibleSelection` if feasibility cuts exclude every selection
    and :class:`IterationLimit` if ``max_iter`` passes without convergence.
    """
    check_positive(tol, "tol")
    check_prices(prices, inst)
    N = inst.n_customers
    H = inst.base_charges
    state = CcgState(scenarios=[Scenario(Realization.nominal(N))])
    tables = _MasterTables(inst, prices)
    incumbent = None
    rng = np.random.default_rng(random_state)
    for _ in range(max_iter):
        state.iteration += 1
        master = solve_master(state.scenarios, inst, prices, enumeration_limit,
                              random_state=rng, tables=tables)
        state.lb = max(state.lb, master.lb)
        wc = solve_subproblem(master.selection, inst, prices, grid_depth)
        charges = float(H[np.array(master.selection) - 1].sum())
        if wc.feasible:
            total = wc.value + charges
            if total < state.ub:
                state.ub = total
                incumbent = (master.selection, wc)
            kind = ScenarioKind.OPTIMALITY
        else:
            kind = ScenarioKind.FEASIBILITY
        state.scenarios.append(Scenario(wc.realization, kind))
        state.trace.append((state.lb, state.ub))
        state.kinds.append(kind)
        if state.gap <= tol:
            state.converged = True
            break
    result = None
    if incumbent is not None:
        selection, wc = incumbent
        result = RsrResult(selection, wc.durations, state.ub, wc.realization, state)
    if not state.converged:
        raise IterationLimit(state, result)
    return result


def evaluate_selection(selection, inst, prices, grid_depth=None):
    """Worst-case total cost ``sum(H) + Q(psi)`` of a fixed selection."""
    selection = check_selection(selection, inst)
    wc = worst_case_search(selection, inst, prices, grid_depth)
    return float(inst.base_charges[np.array(selection) - 1].sum()) + wc.value
