"""Budgeted uncertainty sets and the adversary's worst-case search.

Distances and energy budgets deviate from nominal by fractions ``g`` and
``h`` drawn from budget polytopes ``{x in [0,1]^N : sum(x) <= budget}``.
For a fixed model selection the adversary picks the deviation that makes
the customers' best-response cost largest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .market import EnergyMode, Realization
from .scalar import optimal_duration_arrays
from .validation import check_integer, check_interval

MAX_VERTEX_DIM = 20
MAX_GRID_POINTS = 2_000_000
DEFAULT_GRID_DEPTH = 11
GRID_MAX_CUSTOMERS = 4


@dataclass(frozen=True)
class BudgetPolytope:
    n: int
    budget: float

    def __post_init__(self):
        check_integer(self.n, "n", minimum=1)
        check_interval(self.budget, "budget", 0, self.n)

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -tol) and np.all(x <= 1 + tol) and x.sum() <= self.budget + tol)


def realize_distance(cust, g):
    return cust.nominal_distance + g * cust.distance_deviation


def realize_energy(cust, h, mode):
    if EnergyMode(mode) is EnergyMode.PAPER_LITERAL:
        return cust.nominal_energy + h * cust.energy_deviation
    return cust.nominal_energy - h * cust.energy_deviation


def vertex_candidates(poly):
    """All vertices of the budget polytope, sorted lexicographically.

    A vertex sets ``floor(budget)`` or fewer coordinates to one; when the
    budget is fractional, a maximal set may carry one extra coordinate at the
    fractional remainder.
    """
    if poly.n > MAX_VERTEX_DIM:
        raise ValueError(f"vertex enumeration limited to n <= {MAX_VERTEX_DIM}, got {poly.n}")
    n = poly.n
    whole = min(n, int(math.floor(poly.budget + 1e-12)))
    frac = poly.budget - whole
    if frac < 1e-12:
        frac = 0.0
    points = set()
    for size in range(whole + 1):
        for ones in itertools.combinations(range(n), size):
            x = [0.0] * n
            for i in ones:
                x[i] = 1.0
            points.add(tuple(x))
            if frac and size == whole:
                for j in range(n):
                    if j not in ones:
                        y = list(x)
                        y[j] = frac
                        points.add(tuple(y))
    return np.array(sorted(points), dtype=float).reshape(-1, n)


def grid_points(poly, depth):
    """Lattice points ``i / (depth - 1)`` of the polytope, sorted lexicographically."""
    check_integer(depth, "grid_depth", minimum=2)
    steps = depth - 1
    total = math.floor(poly.budget * steps + 1e-9)
    if depth ** poly.n > MAX_GRID_POINTS:
        raise ValueError(f"grid of {depth}^{poly.n} points exceeds {MAX_GRID_POINTS}")
    lattice = np.array(list(itertools.product(range(depth), repeat=poly.n)), dtype=int)
    lattice = lattice[lattice.sum(axis=1) <= total]
    return lattice / steps


def candidate_points(poly, grid_depth=0):
    """Vertices, optionally merged with the lattice of resolution ``grid_depth``."""
    points = vertex_candidates(poly)
    if grid_depth and grid_depth >= 2:
        points = np.unique(np.vstack([points, grid_points(poly, grid_depth)]), axis=0)
    return points


def default_grid_depth(n_customers):
    return DEFAULT_GRID_DEPTH if n_customers <= GRID_MAX_CUSTOMERS else 0


@dataclass(frozen=True)
class WorstCase:
    """Adversary's best response to a fixed selection.

    ``value`` is the total net cost ``sum_n R_n`` (base charges excluded) at
    ``realization``; ``+inf`` when infeasible, in which case ``realization``
    is a witness where some customer cannot meet ``t_min``.
    """

    realization: Realization
    value: float
    feasible: bool
    durations: tuple[float, ...]
    candidates: int


def _customer_tables(selection, inst, prices, G, H, durations=None):
    """Per-customer cost tables over the (g-candidate, h-candidate) grid.

    Returns ``cost[n]`` and ``tau[n]`` of shape ``(len(G), len(H))``.
    """
    N = inst.n_customers
    beta = prices.prices(inst.n_models)
    costs, taus = [], []
    for n in range(N):
        u = selection[n] - 1
        d = inst.nominal_distance[n] + G[:, n] * inst.distance_deviation[n]
        if inst.energy_mode is EnergyMode.PAPER_LITERAL:
            q = inst.nominal_energy[n] + H[:, n] * inst.energy_deviation[n]
        else:
            q = inst.nominal_energy[n] - H[:, n] * inst.energy_deviation[n]
        e_bit = np.power(d, inst.path_loss_exp) * inst.noise_power[n] * inst.compressibility[u]
        rate = inst.speeds[u] * e_bit
        marginal = inst.energy_price * rate + beta[u]
        with np.errstate(divide="ignore"):
            cap = np.where(rate[:, None] > 0, q[None, :] / rate[:, None], np.inf)
        k = inst.speeds[u]
        if durations is None:
            tau, cost, _ = optimal_duration_arrays(
                marginal[:, None], inst.utility_coeff, k, inst.t_min, inst.t_max, cap)
        else:
            # fixed recourse: hold the planned duration, truncated to the energy cap
            tau = np.minimum(durations[n], cap)
            cost = marginal[:, None] * tau - inst.utility_coeff * np.log1p(k * tau)
        costs.append(cost)
        taus.append(tau)
    return costs, taus


def worst_case_search(selection, inst, prices, grid_depth=None, durations=None):
    """Maximize the customers' total best-response cost over the uncertainty sets.

    The search space is the product of ``candidate_points`` for ``g`` and
    ``h``. With ``durations=None`` each customer re-optimizes its duration at
    every realization; otherwise durations are held fixed and truncated to
    the realized energy cap. Ties go to the lexicographically smallest
    ``(g, h)``.
    """
    N = inst.n_customers
    if grid_depth is None:
        grid_depth = default_grid_depth(N)
    G = candidate_points(BudgetPolytope(N, inst.gamma), grid_depth)
    H = candidate_points(BudgetPolytope(N, inst.eta_budget), grid_depth)
    costs, taus = _customer_tables(selection, inst, prices, G, H, durations)
    total = costs[0].copy()
    for cost in costs[1:]:
        total += cost
    flat = total.ravel()
    infeasible = np.isinf(flat)
    if infeasible.any():
        best = int(np.argmax(infeasible))
        feasible = False
        value = math.inf
    else:
        best = int(np.argmax(flat))
        feasible = True
        value = float(flat[best])
    gi, hi = divmod(best, len(H))
    realization = Realization(tuple(G[gi]), tuple(H[hi]))
    tau = tuple(float(t[gi, hi]) for t in taus)
    return WorstCase(realization, value, feasible, tau, len(G) * len(H))
