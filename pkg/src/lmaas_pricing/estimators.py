"""scikit-learn style wrappers around the solvers.

Customer-side estimators are fitted on ``(instance, prices)`` and expose the
chosen selection and durations as ``*_`` attributes; ``predict`` returns the
durations they would use at a given realization and ``score`` their
worst-case total profit. Pricers are fitted on an instance alone and
``predict`` the per-model price vector.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .baselines import Recourse, evaluate_worst_case, greedy_select, static_env_opt
from .market import PriceSchedule, Realization
from .pricing import PricingConfig, imp, near_opt
from .rsr import (DEFAULT_ENUMERATION_LIMIT, DEFAULT_MAX_ITER, DEFAULT_TOL, rsr,
                  scenario_tables)
from .validation import check_instance, check_prices


class _CustomerEstimator(BaseEstimator):
    _algorithm = ""
    _default_recourse = Recourse.FIXED

    def _recourse(self):
        return Recourse(getattr(self, "recourse", None) or self._default_recourse)

    def _store(self, inst, prices, decision):
        self.instance_ = inst
        self.prices_ = prices
        self.decision_ = decision
        self.selection_ = decision.model_choice
        self.durations_ = decision.duration

    def predict(self, realization=None):
        """Durations at ``realization`` (nominal when omitted) under the estimator's recourse."""
        check_is_fitted(self, "decision_")
        inst = self.instance_
        if realization is None:
            realization = Realization.nominal(inst.n_customers)
        N = inst.n_customers
        sel = np.array(self.selection_) - 1
        if self._recourse() is Recourse.ADAPTIVE:
            _, tau = scenario_tables(realization, inst, self.prices_)
            return tau[np.arange(N), sel]
        d = realization.distances(inst)
        q = realization.energies(inst)
        rate = inst.speeds[sel] * np.power(d, inst.path_loss_exp) * inst.noise_power * inst.compressibility[sel]
        with np.errstate(divide="ignore"):
            cap = np.where(rate > 0, q / rate, np.inf)
        return np.minimum(np.asarray(self.durations_), cap)

    def evaluate(self, instance=None, prices=None):
        check_is_fitted(self, "decision_")
        inst = self.instance_ if instance is None else check_instance(instance)
        prices = self.prices_ if prices is None else check_prices(prices, inst)
        return evaluate_worst_case(self.decision_, self._recourse(), inst, prices,
                                   self._algorithm, getattr(self, "grid_depth", None))

    def score(self, instance=None, prices=None):
        """Worst-case total customer profit of the fitted decision."""
        return self.evaluate(instance, prices).worst_case_profit


class RobustRenter(_CustomerEstimator):
    """Two-stage robust model selection solved by column-and-constraint generation."""

    _algorithm = "rsr"
    _default_recourse = Recourse.ADAPTIVE

    def __init__(self, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                 enumeration_limit=DEFAULT_ENUMERATION_LIMIT, grid_depth=None,
                 random_state=None):
        self.tol = tol
        self.max_iter = max_iter
        self.enumeration_limit = enumeration_limit
        self.grid_depth = grid_depth
        self.random_state = random_state

    def fit(self, instance, prices):
        inst = check_instance(instance)
        prices = check_prices(prices, inst)
        result = rsr(inst, prices, tol=self.tol, max_iter=self.max_iter,
                     enumeration_limit=self.enumeration_limit, grid_depth=self.grid_depth,
                     random_state=self.random_state)
        self._store(inst, prices, result.decision)
        self.result_ = result
        self.objective_ = result.objective
        self.worst_realization_ = result.worst_realization
        self.state_ = result.state
        self.n_iter_ = result.state.iteration
        return self


class GreedyRenter(_CustomerEstimator):
    """Rent the cheapest model, size the duration for the nominal environment."""

    _algorithm = "greedy"

    def __init__(self, recourse=Recourse.FIXED, grid_depth=None):
        self.recourse = recourse
        self.grid_depth = grid_depth

    def fit(self, instance, prices):
        inst = check_instance(instance)
        self._store(inst, check_prices(prices, inst), greedy_select(inst, prices))
        return self


class StaticEnvRenter(_CustomerEstimator):
    """Deterministic optimum that ignores the environment's fluctuation."""

    _algorithm = "static_env_opt"

    def __init__(self, recourse=Recourse.FIXED, grid_depth=None):
        self.recourse = recourse
        self.grid_depth = grid_depth

    def fit(self, instance, prices):
        inst = check_instance(instance)
        self._store(inst, check_prices(prices, inst), static_env_opt(inst, prices))
        return self


class _Pricer(BaseEstimator):
    def _config(self):
        return PricingConfig(
            zeta_bounds=tuple(self.zeta_bounds), step=self.step, fd_delta=self.fd_delta,
            max_num=self.max_num, num_starts=self.num_starts, offset=self.offset,
            rsr_tol=self.rsr_tol, grid_depth=self.grid_depth,
        )

    def _store(self, inst, result):
        self.instance_ = inst
        self.result_ = result
        self.best_zeta_ = result.best_zeta
        self.best_profit_ = result.best_profit
        self.trace_ = result.trace
        self.follower_calls_ = result.follower_calls
        self.price_schedule_ = PriceSchedule(result.best_zeta, self.offset)

    def predict(self, instance=None):
        """Per-model prices of the fitted schedule."""
        check_is_fitted(self, "price_schedule_")
        inst = self.instance_ if instance is None else check_instance(instance)
        return self.price_schedule_.prices(inst.n_models)

    def score(self, instance=None):
        check_is_fitted(self, "best_profit_")
        return self.best_profit_


class IterativePricer(_Pricer):
    """Finite-difference ascent on the price slope with several starting points."""

    def __init__(self, zeta_bounds=(10.0, 1000.0), step=PricingConfig.step,
                 fd_delta=PricingConfig.fd_delta, max_num=150, num_starts=1, offset=1.0,
                 rsr_tol=DEFAULT_TOL, grid_depth=None, random_state=None):
        self.zeta_bounds = zeta_bounds
        self.step = step
        self.fd_delta = fd_delta
        self.max_num = max_num
        self.num_starts = num_starts
        self.offset = offset
        self.rsr_tol = rsr_tol
        self.grid_depth = grid_depth
        self.random_state = random_state

    def fit(self, instance):
        inst = check_instance(instance)
        self._store(inst, imp(inst, self._config(), random_state=self.random_state))
        return self


class GridPricer(_Pricer):
    """Exhaustive scan of the price slope over ``intervals + 1`` grid points."""

    def __init__(self, intervals=1000, zeta_bounds=(10.0, 1000.0), offset=1.0,
                 rsr_tol=DEFAULT_TOL, grid_depth=None):
        self.intervals = intervals
        self.zeta_bounds = zeta_bounds
        self.offset = offset
        self.rsr_tol = rsr_tol
        self.grid_depth = grid_depth

    def _config(self):
        return PricingConfig(zeta_bounds=tuple(self.zeta_bounds), offset=self.offset,
                             rsr_tol=self.rsr_tol, grid_depth=self.grid_depth)

    def fit(self, instance):
        inst = check_instance(instance)
        self._store(inst, near_opt(inst, self.intervals, self._config()))
        return self
