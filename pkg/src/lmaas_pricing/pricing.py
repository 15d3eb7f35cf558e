"""Seller-side price optimization over the slope of the linear price schedule.

The seller sets ``beta_u = zeta * u + offset`` and observes the customers'
robust best response. :func:`imp` climbs the profit by central finite
differences from several starting slopes; :func:`near_opt` scans an even
grid of slopes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import IterationLimit, NoFeasibleSelection, ValidationError
from .market import CustomerDecision, PriceSchedule, SellerOutcome, seller_profit
from .rsr import DEFAULT_ENUMERATION_LIMIT, DEFAULT_MAX_ITER, DEFAULT_TOL, rsr
from .validation import check_integer, check_positive, check_real


@dataclass(frozen=True)
class PricingConfig:
    zeta_bounds: tuple[float, float] = (10.0, 1000.0)
    step: float = 100.0
    fd_delta: float = 1.0
    max_num: int = 150
    num_starts: int = 1
    offset: float = 1.0
    rsr_tol: float = DEFAULT_TOL
    rsr_max_iter: int = DEFAULT_MAX_ITER
    enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT
    grid_depth: int | None = None

    def __post_init__(self):
        lo, hi = (check_real(z, f"zeta_bounds[{i}]") for i, z in enumerate(self.zeta_bounds))
        object.__setattr__(self, "zeta_bounds", (lo, hi))
        if lo >= hi:
            raise ValidationError("zeta_bounds", f"lower bound {lo!r} must be below upper {hi!r}")
        check_positive(self.step, "step")
        delta = check_positive(self.fd_delta, "fd_delta")
        if delta >= (hi - lo) / 2:
            raise ValidationError("fd_delta", "must be below half the zeta range")
        check_integer(self.max_num, "max_num", minimum=0)
        check_integer(self.num_starts, "num_starts", minimum=1)
        check_real(self.offset, "offset")
        if lo + self.offset <= 0:
            raise ValidationError("zeta_bounds", "lowest slope must keep every price positive")

    def replace(self, **changes):
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return PricingConfig(**data)


class TracePoint(NamedTuple):
    start_id: int
    iteration: int
    zeta: float
    profit: float


@dataclass(frozen=True)
class PricingResult:
    best_zeta: float
    best_profit: float
    trace: tuple[TracePoint, ...]
    follower_calls: int
    starts: tuple[float, ...] = ()

    def trace_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TracePoint._fields)
        for pt in self.trace:
            writer.writerow([pt.start_id, pt.iteration, repr(pt.zeta), repr(pt.profit)])
        return buf.getvalue()


@dataclass(frozen=True)
class SellerResponse:
    """Seller profit at one slope together with the followers' response."""

    zeta: float
    outcome: SellerOutcome
    decision: CustomerDecision | None
    rsr_result: object = field(default=None, repr=False)

    @property
    def profit(self):
        return self.outcome.profit


def seller_profit_at(zeta, inst, cfg=PricingConfig()):
    """Seller profit when followers answer the schedule ``zeta * u + offset`` via RSR.

    Durations are taken at the worst-case realization of the followers'
    robust selection. Without any feasible selection nobody rents.
    """
    lo, hi = cfg.zeta_bounds
    if not lo - 1e-9 <= zeta <= hi + 1e-9:
        raise ValidationError("zeta", f"{zeta!r} outside bounds {cfg.zeta_bounds}")
    prices = PriceSchedule(float(zeta), cfg.offset)
    try:
        result = rsr(inst, prices, tol=cfg.rsr_tol, max_iter=cfg.rsr_max_iter,
                     enumeration_limit=cfg.enumeration_limit, grid_depth=cfg.grid_depth)
    except IterationLimit as err:
        result = err.result
    except NoFeasibleSelection:
        result = None
    if result is None:
        nobody = CustomerDecision((), ())
        return SellerResponse(float(zeta), seller_profit(nobody, prices, inst), None)
    decision = result.decision
    return SellerResponse(float(zeta), seller_profit(decision, prices, inst), decision, result)


def start_points(cfg, random_state=None):
    """Initial slopes, one per equal-width stratum of the slope range.

    Without a seed each start sits at its stratum's midpoint; with a seed it
    is drawn uniformly within the stratum.
    """
    lo, hi = cfg.zeta_bounds
    width = (hi - lo) / cfg.num_starts
    if random_state is None:
        offsets = np.full(cfg.num_starts, 0.5)
    else:
        offsets = np.random.default_rng(random_state).random(cfg.num_starts)
    return tuple(float(lo + (i + offsets[i]) * width) for i in range(cfg.num_starts))


def iterations_per_start(cfg):
    """Split the total iteration budget evenly; earlier starts absorb the remainder."""
    base, extra = divmod(cfg.max_num, cfg.num_starts)
    return [base + (1 if i < extra else 0) for i in range(cfg.num_starts)]


def finite_difference_ascent(profit, cfg, random_state=None, starts=None):
    """Multi-start central-difference ascent of a scalar ``profit(zeta)``.

    Every evaluated slope is a candidate. The stencil points bracket the
    iterates without hitting them, so one last call evaluates the final
    iterate whose closing stencil averaged highest; in total
    ``follower_calls = num_starts + 2 * max_num + 1``. Near a bound the
    difference stencil is clipped to the bounds. ``starts`` overrides the
    stratified starting slopes.
    """
    lo, hi = cfg.zeta_bounds
    delta = cfg.fd_delta
    calls = 0
    trace = []
    best_zeta, best_profit = None, -math.inf

    def evaluate(z, start_id, iteration):
        nonlocal calls, best_zeta, best_profit
        calls += 1
        value = float(profit(z))
        trace.append(TracePoint(start_id, iteration, z, value))
        if value > best_profit:
            best_zeta, best_profit = z, value
        return value

    if starts is None:
        starts = start_points(cfg, random_state)
    else:
        starts = tuple(float(min(max(z, lo), hi)) for z in starts)
        if len(starts) != cfg.num_starts:
            raise ValidationError("starts", f"expected {cfg.num_starts} values, got {len(starts)}")
    finals = []
    for start_id, (zeta, budget) in enumerate(zip(starts, iterations_per_start(cfg))):
        estimate = evaluate(zeta, start_id, 0)
        for it in range(1, budget + 1):
            z_up, z_down = min(zeta + delta, hi), max(zeta - delta, lo)
            up = evaluate(z_up, start_id, it)
            down = evaluate(z_down, start_id, it)
            estimate = 0.5 * (up + down)
            grad = (up - down) / (z_up - z_down)
            zeta = min(max(zeta + cfg.step * grad, lo), hi)
        finals.append((estimate, -start_id, zeta))
    _, neg_id, zeta = max(finals)
    evaluate(zeta, -neg_id, iterations_per_start(cfg)[-neg_id] + 1)
    return PricingResult(best_zeta, best_profit, tuple(trace), calls, starts)


def grid_search(profit, cfg, intervals):
    """Evaluate ``profit`` on the ``intervals + 1`` evenly spaced slopes."""
    check_integer(intervals, "intervals", minimum=1)
    lo, hi = cfg.zeta_bounds
    zetas = np.linspace(lo, hi, intervals + 1)
    trace = []
    best_zeta, best_profit = None, -math.inf
    for i, z in enumerate(zetas):
        value = float(profit(float(z)))
        trace.append(TracePoint(0, i, float(z), value))
        if value > best_profit:
            best_zeta, best_profit = float(z), value
    return PricingResult(best_zeta, best_profit, tuple(trace), intervals + 1)


def imp(inst, cfg=PricingConfig(), random_state=None):
    """Iterative model pricing against RSR followers."""
    return finite_difference_ascent(lambda z: seller_profit_at(z, inst, cfg).profit,
                                    cfg, random_state)


def near_opt(inst, intervals=1000, cfg=PricingConfig()):
    """Exhaustive scan of the slope range at ``intervals`` even sub-intervals."""
    return grid_search(lambda z: seller_profit_at(z, inst, cfg).profit, cfg, intervals)
