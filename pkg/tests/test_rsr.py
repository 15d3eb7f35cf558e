import itertools
import json

import numpy as np
import pytest

from conftest import make_instance, random_instance, random_prices
from lmaas_pricing.baselines import greedy_select, static_env_opt
from lmaas_pricing.exceptions import IterationLimit, NoFeasibleSelection
from lmaas_pricing.market import PriceSchedule, Realization
from lmaas_pricing.oracle import brute_force_two_stage
from lmaas_pricing.rsr import (Scenario, ScenarioKind, evaluate_selection, rsr, solve_master,
                               solve_subproblem)
from lmaas_pricing.scalar import duration_problem, optimal_duration

PRICES = PriceSchedule(10.0)


def nominal_cost(inst, prices, selection):
    d, q = inst.nominal_distance, inst.nominal_energy
    return sum(optimal_duration(duration_problem(inst, prices, n, u, d[n], q[n])).value
               for n, u in enumerate(selection))


def test_master_empty_pool_picks_cheapest_charges():
    inst = make_instance(N=3, U=3)
    sol = solve_master([], inst, PRICES)
    assert sol.selection == (1, 1, 1)
    assert sol.alpha == 0.0
    assert sol.lb == 15.0


def test_master_single_model():
    inst = make_instance(N=3, U=1)
    sol = solve_master([Scenario(Realization.nominal(3))], inst, PRICES)
    assert sol.lb == pytest.approx(15.0 + nominal_cost(inst, PRICES, (1, 1, 1)), rel=1e-12)


def test_master_matches_enumeration():
    rng = np.random.default_rng(31)
    for _ in range(20):
        inst = random_instance(rng, max_n=2, allow_t_min=False)
        N, U = inst.n_customers, inst.n_models
        prices = random_prices(rng)
        real = Realization(tuple(rng.uniform(0, 1, N) * 0.5), (0.0,) * N)
        d, q = real.distances(inst), real.energies(inst)
        best = min(
            sum(inst.model(u).base_charge for u in sel)
            + sum(optimal_duration(duration_problem(inst, prices, n, u, d[n], q[n])).value
                  for n, u in enumerate(sel))
            for sel in itertools.product(range(1, U + 1), repeat=N))
        sol = solve_master([Scenario(real)], inst, prices)
        assert sol.lb == pytest.approx(best, rel=1e-12)


def test_master_feasibility_cut_excludes_selection():
    # model 1 drains the budget faster, so only model 2 survives the cut
    inst = make_instance(N=1, U=2, q=0.6, theta=0.1, d=1000.0, t_min=1.0)
    witness = Scenario(Realization((1.0,), (1.0,)), ScenarioKind.FEASIBILITY)
    assert solve_master([witness], inst, PRICES).selection == (2,)
    tighter = make_instance(N=1, U=2, q=0.2, theta=0.1, d=1000.0, t_min=1.0)
    with pytest.raises(NoFeasibleSelection):
        solve_master([Scenario(Realization((1.0,), (1.0,)), ScenarioKind.FEASIBILITY)], tighter, PRICES)


def test_local_search_fallback():
    inst = make_instance(N=5, U=3, d=[600.0, 800.0, 1000.0, 1400.0, 1800.0])
    pool = [Scenario(Realization.nominal(5)), Scenario(Realization((1,) + (0,) * 4, (0,) * 5))]
    exact = solve_master(pool, inst, PRICES)
    approx = solve_master(pool, inst, PRICES, enumeration_limit=1, random_state=0)
    assert approx.lb >= exact.lb - 1e-12
    assert approx.lb == pytest.approx(exact.lb, rel=1e-12)


def test_subproblem_examples():
    inst = make_instance(N=3, gamma=0.0, eta_budget=0.0)
    wc = solve_subproblem((1, 1, 2), inst, PRICES)
    assert wc.value == pytest.approx(nominal_cost(inst, PRICES, (1, 1, 2)), rel=1e-12)
    starved = make_instance(N=2, q=0.05, theta=0.04, t_min=2.0)
    assert solve_subproblem((1, 1), starved, PRICES).value == np.inf


def test_deterministic_world_converges_in_one_iteration():
    inst = make_instance(N=3, gamma=0.0, eta_budget=0.0)
    res = rsr(inst, PRICES)
    assert res.state.iteration == 1
    assert res.state.converged


def test_single_model_matches_greedy():
    inst = make_instance(N=3, U=1)
    res = rsr(inst, PRICES)
    greedy = greedy_select(inst, PRICES)
    assert res.selection == greedy.model_choice
    assert res.objective == pytest.approx(evaluate_selection(greedy.model_choice, inst, PRICES), rel=1e-12)


@pytest.mark.parametrize("d", [750.0, 1250.0, 1750.0])
def test_default_pair_matches_oracle(d):
    inst = make_instance(N=2, U=2, d=d)
    res = rsr(inst, PRICES)
    ref = brute_force_two_stage(inst, PRICES)
    assert res.objective == pytest.approx(ref.value, rel=1e-5)
    assert res.selection == ref.selection


def test_bound_trace_and_jsonl():
    inst = make_instance(N=3, U=2, d=[700.0, 1100.0, 1500.0])
    state = rsr(inst, PRICES).state
    lbs, ubs = zip(*state.trace)
    assert all(a <= b for a, b in zip(lbs, lbs[1:]))
    assert all(a >= b for a, b in zip(ubs, ubs[1:]))
    assert state.gap <= 1e-4
    records = [json.loads(line) for line in state.to_jsonl().splitlines()]
    assert [r["iteration"] for r in records] == list(range(1, state.iteration + 1))


def test_feasibility_scenarios_recorded():
    # nominal selection (model 1) runs dry in the worst case; model 2 is safe
    inst = make_instance(N=1, U=2, q=0.6, theta=0.1, d=1000.0, t_min=1.0)
    res = rsr(inst, PRICES)
    assert ScenarioKind.FEASIBILITY in res.state.kinds
    assert res.selection == (2,)


def test_no_feasible_selection():
    inst = make_instance(N=1, U=2, q=0.05, theta=0.04, d=1500.0, t_min=1.0)
    with pytest.raises(NoFeasibleSelection):
        rsr(inst, PRICES)


def test_iteration_limit_carries_state():
    inst = make_instance(N=3, U=2, d=[700.0, 1100.0, 1500.0])
    with pytest.raises(IterationLimit) as info:
        rsr(inst, PRICES, max_iter=1)
    state = info.value.state
    assert state.iteration == 1 and not state.converged
    assert state.lb <= state.ub


def test_adding_scenarios_never_lowers_master_bound():
    rng = np.random.default_rng(32)
    for _ in range(20):
        inst = random_instance(rng, allow_t_min=False)
        prices = random_prices(rng)
        try:
            state = rsr(inst, prices).state
        except NoFeasibleSelection:
            continue
        bounds = [solve_master(state.scenarios[:i], inst, prices).lb
                  for i in range(1, len(state.scenarios) + 1)]
        assert all(a <= b + 1e-12 * max(1.0, abs(b)) for a, b in zip(bounds, bounds[1:]))


def test_robust_dominance_over_baselines():
    rng = np.random.default_rng(33)
    checked = 0
    while checked < 200:
        inst = random_instance(rng)
        prices = random_prices(rng)
        try:
            res = rsr(inst, prices)
        except NoFeasibleSelection:
            continue
        for baseline in (greedy_select, static_env_opt):
            sel = baseline(inst, prices).model_choice
            assert res.objective <= evaluate_selection(sel, inst, prices) + 1e-9 * max(1.0, abs(res.objective))
        checked += 1
