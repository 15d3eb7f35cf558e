"""Exact rent-duration optimization for a single customer.

For a fixed model and environment the customer minimizes

    f(tau) = m * tau - A * log(1 + k * tau),   t_min <= tau <= min(t_max, cap)

where ``m`` is the per-time transmission-plus-rent cost and ``cap`` is the
longest duration the energy budget allows. ``f`` is convex, so the minimizer
is the stationary point ``A/m - 1/k`` projected onto the feasible interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import InfeasibleDuration, ValidationError
from .market import transmission_energy_per_bit
from .validation import check_nonnegative, check_positive, check_real

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DurationProblem:
    """One customer's duration subproblem.

    ``energy_cap=None`` means the energy constraint never binds. The energy
    constraint is ``energy_rate * (tau - energy_cap) <= 0``; ``energy_rate``
    only scales the matching multiplier.
    """

    marginal_cost: float
    utility_coeff: float
    speed: float
    t_min: float
    t_max: float
    energy_cap: float | None = None
    energy_rate: float = 1.0

    def __post_init__(self):
        check_positive(self.marginal_cost, "marginal_cost")
        check_nonnegative(self.utility_coeff, "utility_coeff")
        check_positive(self.speed, "speed")
        check_real(self.t_min, "t_min")
        if check_real(self.t_max, "t_max") < self.t_min:
            raise ValidationError("t_max", "must be >= t_min")
        if self.energy_cap is not None:
            check_nonnegative(self.energy_cap, "energy_cap")
        check_positive(self.energy_rate, "energy_rate")

    @property
    def upper(self):
        if self.energy_cap is None:
            return self.t_max
        return min(self.t_max, self.energy_cap)

    @property
    def feasible(self):
        return self.t_min <= self.upper

    def objective(self, tau):
        return self.marginal_cost * tau - self.utility_coeff * np.log1p(self.speed * tau)

    def derivative(self, tau):
        return self.marginal_cost - self.utility_coeff * self.speed / (1.0 + self.speed * tau)


class DurationSolution(NamedTuple):
    tau: float
    value: float


class Multipliers(NamedTuple):
    energy: float
    upper: float
    lower: float


def optimal_duration(prob):
    """Minimize ``prob.objective`` over the feasible interval.

    Raises :class:`InfeasibleDuration` when ``t_min`` already exceeds the
    energy cap.
    """
    if not prob.feasible:
        raise InfeasibleDuration(f"t_min={prob.t_min!r} exceeds energy cap {prob.energy_cap!r}")
    stationary = prob.utility_coeff / prob.marginal_cost - 1.0 / prob.speed
    tau = min(max(stationary, prob.t_min), prob.upper)
    return DurationSolution(tau, float(prob.objective(tau)))


def optimal_duration_arrays(marginal, utility, speed, t_min, t_max, cap):
    """Vectorized closed form over broadcast arrays.

    Returns ``(tau, value, feasible)``; entries where ``t_min > min(t_max, cap)``
    have ``feasible=False`` and ``value=+inf``.
    """
    upper = np.minimum(t_max, cap)
    feasible = upper >= t_min
    tau = np.clip(utility / marginal - 1.0 / speed, t_min, np.maximum(upper, t_min))
    value = marginal * tau - utility * np.log1p(speed * tau)
    value = np.where(feasible, value, np.inf)
    return tau, value, feasible


def energy_rates(inst, d):
    """Energy spent per unit rent time, shape ``(N, U)``, for distances ``d``."""
    e_bit = transmission_energy_per_bit(
        np.asarray(d, dtype=float)[:, None], inst.path_loss_exp,
        inst.noise_power[:, None], inst.compressibility[None, :],
    )
    return inst.speeds[None, :] * e_bit


def duration_problem(inst, prices, n, u, d, q):
    """Build the :class:`DurationProblem` of customer ``n`` (0-based) on model ``u``."""
    model = inst.model(u)
    e_bit = transmission_energy_per_bit(d, inst.path_loss_exp,
                                        inst.customers[n].noise_power, model.compressibility)
    rate = model.encoding_speed * e_bit
    marginal = inst.energy_price * rate + prices.price(u)
    cap = None if rate == 0 else q / rate
    return DurationProblem(
        marginal_cost=float(marginal), utility_coeff=inst.utility_coeff,
        speed=model.encoding_speed, t_min=inst.t_min, t_max=inst.t_max,
        energy_cap=None if cap is None else float(cap),
        energy_rate=float(rate) if rate > 0 else 1.0,
    )


def golden_section_min(f, lo, hi, tol=1e-10):
    """Golden-section search for the minimizer of a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x))`` with ``x`` within ``tol`` of the minimizer; the
    endpoints are compared at the end so boundary minima are returned exactly.
    """
    if lo > hi:
        raise ValueError(f"lo={lo!r} exceeds hi={hi!r}")
    a, b = float(lo), float(hi)
    if b - a <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    best = (x, f(x))
    for end in (float(lo), float(hi)):
        value = f(end)
        if value < best[1]:
            best = (end, value)
    return best


def recover_multipliers(prob, tau):
    """KKT multipliers consistent with stationarity at ``tau``, clipped to be >= 0."""
    grad = prob.derivative(tau)
    energy = upper = lower = 0.0
    if grad > 0 and tau <= prob.t_min:
        lower = grad
    elif grad < 0 and tau >= prob.upper:
        if prob.energy_cap is None or prob.t_max <= prob.energy_cap:
            upper = -grad
        else:
            energy = -grad / prob.energy_rate
    return Multipliers(energy, upper, lower)


def kkt_residuals(prob, tau, lam, mu, theta):
    """Stationarity and complementary-slackness residuals at ``tau``.

    Returns ``[stationarity, energy slackness, upper slackness, lower slackness]``
    as absolute values; all near zero certifies optimality of ``tau``.
    """
    stationarity = (prob.marginal_cost + lam * prob.energy_rate + mu - theta
                    - prob.utility_coeff * prob.speed / (1.0 + prob.speed * tau))
    if prob.energy_cap is None:
        energy_cs = 0.0 if lam == 0 else math.inf
    else:
        energy_cs = prob.energy_rate * (tau - prob.energy_cap) * lam
    return np.abs(np.array([
        stationarity,
        energy_cs,
        (tau - prob.t_max) * mu,
        (prob.t_min - tau) * theta,
    ]))


def lagrangian(prob, tau, lam, mu, theta):
    energy_row = 0.0 if prob.energy_cap is None else prob.energy_rate * (tau - prob.energy_cap)
    return (prob.objective(tau) + lam * energy_row + mu * (tau - prob.t_max)
            + theta * (prob.t_min - tau))


def dual_value(prob, lam, mu, theta):
    """Lagrange dual function: infimum of the Lagrangian over ``tau > -1/k``."""
    if prob.energy_cap is None and lam != 0:
        return -math.inf
    cap_term = 0.0 if prob.energy_cap is None else -lam * prob.energy_rate * prob.energy_cap
    constant = cap_term - mu * prob.t_max + theta * prob.t_min
    slope = prob.marginal_cost + lam * prob.energy_rate + mu - theta
    A, k = prob.utility_coeff, prob.speed
    if A == 0:
        return constant if slope == 0 else -math.inf
    if slope <= 0:
        return -math.inf
    tau = A / slope - 1.0 / k
    return slope * tau - A * math.log(A * k / slope) + constant
