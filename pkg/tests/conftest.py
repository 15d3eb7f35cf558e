import numpy as np
import pytest

from lmaas_pricing.market import Customer, MarketInstance, ScModel, dbm_to_watts

NOISE = dbm_to_watts(-77.0)


def default_models(U):
    return tuple(ScModel(u, 10.0 - 2.0 * (u - 1), 1.0 / u, 5.0 * u, 2.0 * u)
                 for u in range(1, U + 1))


def make_instance(N=3, U=2, d=750.0, r_dev=500.0, q=5.0, theta=2.0, **kwargs):
    """Homogeneous instance with the default model constants; ``d`` may be a sequence."""
    ds = np.broadcast_to(np.asarray(d, dtype=float), (N,))
    customers = tuple(Customer(n + 1, float(ds[n]), q, r_dev, theta, NOISE) for n in range(N))
    return MarketInstance(customers, default_models(U), **kwargs)


def random_instance(rng, max_n=3, max_u=2, budgets=(0.0, 1.0), allow_t_min=True):
    """Small random market covering both energy modes and tight energy budgets."""
    N = int(rng.integers(1, max_n + 1))
    U = int(rng.integers(1, max_u + 1))
    customers = []
    for n in range(N):
        q = float(rng.uniform(1.0, 8.0))
        customers.append(Customer(
            n + 1, float(rng.uniform(300.0, 1800.0)), q, float(rng.uniform(0.0, 900.0)),
            float(rng.uniform(0.0, 0.9 * q)), NOISE))
    speeds = np.sort(rng.uniform(2.0, 12.0, U))[::-1]
    comp = np.sort(rng.uniform(0.2, 1.0, U))[::-1]
    models = tuple(ScModel(u + 1, float(speeds[u]), float(comp[u]),
                           float(rng.uniform(0.0, 30.0)), float(rng.uniform(0.0, 5.0)))
                   for u in range(U))
    t_min = float(rng.choice([0.0, 0.0, rng.uniform(0.0, 2.0)])) if allow_t_min else 0.0
    return MarketInstance(
        tuple(customers), models,
        utility_coeff=float(rng.uniform(20.0, 200.0)),
        energy_price=float(rng.uniform(20.0, 200.0)),
        t_min=t_min, t_max=float(rng.uniform(5.0, 100.0)),
        gamma=float(min(rng.choice(budgets), N)), eta_budget=float(min(rng.choice(budgets), N)),
        energy_mode=str(rng.choice(["AdversarialReduction", "PaperLiteral"])),
    )


def random_prices(rng):
    from lmaas_pricing.market import PriceSchedule
    return PriceSchedule(float(rng.uniform(1.0, 60.0)), float(rng.uniform(0.5, 5.0)))


@pytest.fixture
def inst():
    return make_instance()


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one labelled pass/fail line for the end-of-run summary."""
    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {label}  {detail}".rstrip())


def random_duration_problem(rng):
    """Draws covering interior optima, both bounds and a binding energy cap."""
    from lmaas_pricing.scalar import DurationProblem
    t_min = float(rng.choice([0.0, rng.uniform(0.0, 5.0)]))
    t_max = t_min + float(rng.uniform(1.0, 100.0))
    cap = None if rng.random() < 0.3 else float(t_min + rng.uniform(0.0, 120.0))
    return DurationProblem(
        marginal_cost=float(rng.uniform(0.1, 50.0)),
        utility_coeff=float(rng.choice([0.0, rng.uniform(1.0, 500.0)], p=[0.05, 0.95])),
        speed=float(rng.uniform(0.1, 12.0)),
        t_min=t_min, t_max=t_max, energy_cap=cap,
        energy_rate=float(rng.uniform(0.01, 5.0)),
    )
