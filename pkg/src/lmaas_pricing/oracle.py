"""Brute-force reference solvers for desk-scale certification.

Nothing here calls the C&CG solver, the adversary search or the ascent code:
the two-stage problem is solved by enumerating every selection against every
lattice realization, with durations from the closed form and costs from the
market formulas.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .market import (CustomerDecision, EnergyMode, PriceSchedule, Realization,
                     customer_net_cost, seller_profit, transmission_energy_per_bit)
from .scalar import optimal_duration_arrays
from .validation import check_integer

MAX_SELECTIONS = 10_000
MAX_CUSTOMERS = 3
MAX_ZETA_POINTS = 10_000


@dataclass(frozen=True)
class OracleGrid:
    tau_points: int = 2001
    g_points: int = 11
    h_points: int = 11
    zeta_points: int = 4001

    def __post_init__(self):
        for name in ("tau_points", "g_points", "h_points", "zeta_points"):
            check_integer(getattr(self, name), name, minimum=2)

    def doubled(self):
        return OracleGrid(*(2 * v - 1 for v in (self.tau_points, self.g_points,
                                                self.h_points, self.zeta_points)))


class OracleSolution(NamedTuple):
    selection: tuple[int, ...] | None
    value: float
    realization: Realization | None
    durations: tuple[float, ...] | None


def lattice(n, points, budget):
    """Points ``i / (points - 1)`` of ``[0,1]^n`` with coordinate sum within ``budget``."""
    steps = points - 1
    rows = [tuple(i / steps for i in idx)
            for idx in itertools.product(range(points), repeat=n)]
    rows = [r for r in rows if sum(r) <= budget + 1e-9]
    return np.array(rows, dtype=float).reshape(-1, n)


def polytope_vertices(n, budget):
    """Extreme points of ``{x in [0,1]^n : sum(x) <= budget}`` by basis enumeration.

    Every choice of ``n`` linearly independent active constraints among
    ``x_i = 0``, ``x_i = 1`` and ``sum(x) = budget`` is solved; feasible
    solutions are kept.
    """
    rows, rhs = [], []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows += [e, e]
        rhs += [0.0, 1.0]
    rows.append(np.ones(n))
    rhs.append(float(budget))
    rows, rhs = np.array(rows), np.array(rhs)
    found = set()
    for active in itertools.combinations(range(len(rows)), n):
        A = rows[list(active)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        x = np.linalg.solve(A, rhs[list(active)])
        if np.all(x >= -1e-9) and np.all(x <= 1 + 1e-9) and x.sum() <= budget + 1e-9:
            found.add(tuple(round(float(v), 12) + 0.0 for v in x))
    return sorted(found)


def brute_force_duration(prob, tau_points=2001):
    """Dense scan of the duration interval; returns ``(tau, value)`` or ``None`` if empty."""
    if not prob.feasible:
        return None
    taus = np.linspace(prob.t_min, prob.upper, tau_points)
    values = prob.objective(taus)
    j = int(np.argmin(values))
    return float(taus[j]), float(values[j])


class _Realizations:
    """Lattice realizations in (g, h) lexicographic order, flattened."""

    def __init__(self, inst, grid):
        N = inst.n_customers
        G = lattice(N, grid.g_points, inst.gamma)
        H = lattice(N, grid.h_points, inst.eta_budget)
        self.g = np.repeat(G, len(H), axis=0)
        self.h = np.tile(H, (len(G), 1))
        self.d = inst.nominal_distance + self.g * inst.distance_deviation
        if inst.energy_mode is EnergyMode.PAPER_LITERAL:
            self.q = inst.nominal_energy + self.h * inst.energy_deviation
        else:
            self.q = inst.nominal_energy - self.h * inst.energy_deviation

    def __len__(self):
        return len(self.g)


def _pair_costs(inst, prices, real):
    """Closed-form optimal cost and duration for each (customer, model) over all realizations."""
    costs, taus = {}, {}
    for n, cust in enumerate(inst.customers):
        for model in inst.models:
            d, q = real.d[:, n], real.q[:, n]
            e_bit = transmission_energy_per_bit(d, inst.path_loss_exp, cust.noise_power,
                                                model.compressibility)
            rate = model.encoding_speed * e_bit
            beta = prices.price(model.index)
            marginal = inst.energy_price * rate + beta
            with np.errstate(divide="ignore"):
                cap = np.where(rate > 0, q / rate, np.inf)
            tau, _, feasible = optimal_duration_arrays(
                marginal, inst.utility_coeff, model.encoding_speed, inst.t_min, inst.t_max, cap)
            cost = customer_net_cost(model, beta, tau, d, cust.noise_power, inst)
            costs[n, model.index] = np.where(feasible, cost, np.inf)
            taus[n, model.index] = tau
    return costs, taus


def brute_force_two_stage(inst, prices, grid=OracleGrid(), _realizations=None):
    """Exact min-max of base charges plus net cost over selections and lattice realizations."""
    N, U = inst.n_customers, inst.n_models
    if N > MAX_CUSTOMERS or U ** N > MAX_SELECTIONS:
        raise ValueError(f"oracle limited to N <= {MAX_CUSTOMERS} and U^N <= {MAX_SELECTIONS}")
    real = _realizations or _Realizations(inst, grid)
    costs, taus = _pair_costs(inst, prices, real)
    best = OracleSolution(None, math.inf, None, None)
    for sel in itertools.product(range(1, U + 1), repeat=N):
        total = np.zeros(len(real))
        for n, u in enumerate(sel):
            total = total + costs[n, u]
        j = int(np.argmax(total))
        worst = float(total[j]) + sum(inst.model(u).base_charge for u in sel)
        if worst < best.value:
            realization = Realization(tuple(real.g[j]), tuple(real.h[j]))
            durations = tuple(float(taus[n, u][j]) for n, u in enumerate(sel))
            best = OracleSolution(sel, worst, realization, durations)
    return best


def brute_force_seller(inst, cfg, zeta_points=4001, grid=OracleGrid()):
    """Dense slope scan with brute-force followers; returns ``(zeta, profit)``."""
    check_integer(zeta_points, "zeta_points", minimum=2)
    if zeta_points > MAX_ZETA_POINTS:
        raise ValueError(f"oracle limited to {MAX_ZETA_POINTS} slope points, got {zeta_points}")
    lo, hi = cfg.zeta_bounds
    real = _Realizations(inst, grid)
    best_zeta, best_profit = None, -math.inf
    for z in np.linspace(lo, hi, zeta_points):
        prices = PriceSchedule(float(z), cfg.offset)
        sol = brute_force_two_stage(inst, prices, grid, _realizations=real)
        if sol.selection is None:
            decision = CustomerDecision((), ())
        else:
            decision = CustomerDecision(sol.selection, sol.durations)
        profit = seller_profit(decision, prices, inst).profit
        if profit > best_profit:
            best_zeta, best_profit = float(z), profit
    return best_zeta, best_profit
