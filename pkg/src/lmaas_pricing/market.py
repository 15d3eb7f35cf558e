"""Domain types and closed-form cost / revenue formulas of the rental market.

Customers rent a semantic-communication (SC) model from a seller. Renting
model ``u`` for ``tau`` time units costs the customer transmission energy
(path loss ``d**eps`` times noise power times the model's compressibility),
the rental price ``beta_u * tau`` and a fixed base charge, and earns a
logarithmic utility ``A * log(1 + k_u * tau)``. The seller earns the rental
revenue minus per-model training costs.

All formulas accept scalars or numpy arrays and broadcast elementwise.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import EnergyBudgetViolation, ValidationError
from .validation import (
    check_integer,
    check_keys,
    check_nonnegative,
    check_positive,
    check_real,
)


class EnergyMode(str, enum.Enum):
    """Sign convention for the energy-budget deviation.

    ``PAPER_LITERAL`` adds the deviation (``q = q_hat + h * theta``), which
    can only relax the energy constraint; ``ADVERSARIAL_REDUCTION`` subtracts
    it, modelling devices that are not fully charged.
    """

    PAPER_LITERAL = "PaperLiteral"
    ADVERSARIAL_REDUCTION = "AdversarialReduction"


@dataclass(frozen=True)
class ScModel:
    index: int
    encoding_speed: float
    compressibility: float
    base_charge: float
    finetune_unit_cost: float

    def __post_init__(self):
        _validate_model(self, "model")


@dataclass(frozen=True)
class Customer:
    index: int
    nominal_distance: float
    nominal_energy: float
    distance_deviation: float
    energy_deviation: float
    noise_power: float

    def __post_init__(self):
        _validate_customer(self, "customer")


def _validate_model(model, path):
    check_integer(model.index, f"{path}.index", minimum=1)
    check_positive(model.encoding_speed, f"{path}.encoding_speed")
    check_positive(model.compressibility, f"{path}.compressibility")
    check_nonnegative(model.base_charge, f"{path}.base_charge")
    check_nonnegative(model.finetune_unit_cost, f"{path}.finetune_unit_cost")


def _validate_customer(cust, path):
    check_integer(cust.index, f"{path}.index", minimum=1)
    check_positive(cust.nominal_distance, f"{path}.nominal_distance")
    check_positive(cust.nominal_energy, f"{path}.nominal_energy")
    check_nonnegative(cust.distance_deviation, f"{path}.distance_deviation")
    check_nonnegative(cust.energy_deviation, f"{path}.energy_deviation")
    check_positive(cust.noise_power, f"{path}.noise_power")


_CUSTOMER_FIELDS = ("index", "nominal_distance", "nominal_energy",
                    "distance_deviation", "energy_deviation", "noise_power")
_MODEL_FIELDS = ("index", "encoding_speed", "compressibility", "base_charge",
                 "finetune_unit_cost")
_INSTANCE_FIELDS = ("customers", "models", "utility_coeff", "energy_price",
                    "ssl_cost", "path_loss_exp", "t_min", "t_max", "gamma",
                    "eta_budget", "energy_mode")


@dataclass(frozen=True)
class MarketInstance:
    """Full parameter set of one market (customers, models, constants)."""

    customers: tuple[Customer, ...]
    models: tuple[ScModel, ...]
    utility_coeff: float = 100.0
    energy_price: float = 100.0
    ssl_cost: float = 10.0
    path_loss_exp: float = 3.0
    t_min: float = 0.0
    t_max: float = 100.0
    gamma: float = 1.0
    eta_budget: float = 1.0
    energy_mode: EnergyMode = EnergyMode.ADVERSARIAL_REDUCTION

    def __post_init__(self):
        object.__setattr__(self, "customers", tuple(self.customers))
        object.__setattr__(self, "models", tuple(self.models))
        try:
            object.__setattr__(self, "energy_mode", EnergyMode(self.energy_mode))
        except ValueError:
            raise ValidationError("energy_mode", f"unknown mode {self.energy_mode!r}") from None
        self._validate()

    def _validate(self):
        if not self.customers:
            raise ValidationError("customers", "at least one customer is required")
        if not self.models:
            raise ValidationError("models", "at least one model is required")
        for pos, cust in enumerate(self.customers):
            path = f"customers[{pos}]"
            if not isinstance(cust, Customer):
                raise ValidationError(path, "expected a Customer")
            if cust.index != pos + 1:
                raise ValidationError(f"{path}.index", f"expected {pos + 1}, got {cust.index}")
            if (self.energy_mode is EnergyMode.ADVERSARIAL_REDUCTION
                    and cust.nominal_energy - cust.energy_deviation <= 0):
                raise ValidationError(
                    f"{path}.energy_deviation",
                    "nominal_energy - energy_deviation must stay > 0 under AdversarialReduction",
                )
        for pos, model in enumerate(self.models):
            path = f"models[{pos}]"
            if not isinstance(model, ScModel):
                raise ValidationError(path, "expected an ScModel")
            if model.index != pos + 1:
                raise ValidationError(f"{path}.index", f"expected {pos + 1}, got {model.index}")
            if pos:
                prev = self.models[pos - 1]
                if model.encoding_speed >= prev.encoding_speed:
                    raise ValidationError(f"{path}.encoding_speed",
                                          "must be strictly decreasing in the model index")
                if model.compressibility >= prev.compressibility:
                    raise ValidationError(f"{path}.compressibility",
                                          "must be strictly decreasing in the model index")
        check_nonnegative(self.utility_coeff, "utility_coeff")
        check_nonnegative(self.energy_price, "energy_price")
        check_nonnegative(self.ssl_cost, "ssl_cost")
        if check_real(self.path_loss_exp, "path_loss_exp") < 1:
            raise ValidationError("path_loss_exp", f"must be >= 1, got {self.path_loss_exp!r}")
        t_min = check_nonnegative(self.t_min, "t_min")
        if check_real(self.t_max, "t_max") <= t_min:
            raise ValidationError("t_max", f"must exceed t_min={t_min!r}, got {self.t_max!r}")
        n = len(self.customers)
        for name in ("gamma", "eta_budget"):
            value = check_nonnegative(getattr(self, name), name)
            if value > n:
                raise ValidationError(name, f"must be <= number of customers ({n}), got {value!r}")

    @property
    def n_customers(self):
        return len(self.customers)

    @property
    def n_models(self):
        return len(self.models)

    def model(self, u):
        return self.models[u - 1]

    # Column views used by the vectorized solvers; index 0 is customer 1 / model 1.
    @cached_property
    def nominal_distance(self):
        return np.array([c.nominal_distance for c in self.customers])

    @cached_property
    def nominal_energy(self):
        return np.array([c.nominal_energy for c in self.customers])

    @cached_property
    def distance_deviation(self):
        return np.array([c.distance_deviation for c in self.customers])

    @cached_property
    def energy_deviation(self):
        return np.array([c.energy_deviation for c in self.customers])

    @cached_property
    def noise_power(self):
        return np.array([c.noise_power for c in self.customers])

    @cached_property
    def speeds(self):
        return np.array([m.encoding_speed for m in self.models])

    @cached_property
    def compressibility(self):
        return np.array([m.compressibility for m in self.models])

    @cached_property
    def base_charges(self):
        return np.array([m.base_charge for m in self.models])

    @cached_property
    def finetune_costs(self):
        return np.array([m.finetune_unit_cost for m in self.models])

    def replace(self, **changes):
        data = {name: getattr(self, name) for name in _INSTANCE_FIELDS}
        data.update(changes)
        return MarketInstance(**data)

    def to_dict(self):
        return {
            "customers": [asdict(c) for c in self.customers],
            "models": [asdict(m) for m in self.models],
            "utility_coeff": self.utility_coeff,
            "energy_price": self.energy_price,
            "ssl_cost": self.ssl_cost,
            "path_loss_exp": self.path_loss_exp,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "gamma": self.gamma,
            "eta_budget": self.eta_budget,
            "energy_mode": self.energy_mode.value,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        check_keys(data, _INSTANCE_FIELDS, required=("customers", "models"))
        for key in ("customers", "models"):
            if not isinstance(data[key], list):
                raise ValidationError(key, "expected a list")
        customers = []
        for pos, raw in enumerate(data["customers"]):
            path = f"customers[{pos}]"
            check_keys(raw, _CUSTOMER_FIELDS, path, required=_CUSTOMER_FIELDS)
            try:
                customers.append(Customer(**raw))
            except ValidationError as err:
                raise ValidationError(err.path.replace("customer", path, 1), err.message) from None
        models = []
        for pos, raw in enumerate(data["models"]):
            path = f"models[{pos}]"
            check_keys(raw, _MODEL_FIELDS, path, required=_MODEL_FIELDS)
            try:
                models.append(ScModel(**raw))
            except ValidationError as err:
                raise ValidationError(err.path.replace("model", path, 1), err.message) from None
        scalars = {k: v for k, v in data.items() if k not in ("customers", "models")}
        return cls(customers=tuple(customers), models=tuple(models), **scalars)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ValidationError("", f"invalid JSON: {err}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class PriceSchedule:
    """Linear price schedule ``beta_u = slope * u + offset``."""

    slope: float
    offset: float = 1.0

    def __post_init__(self):
        check_real(self.slope, "slope")
        check_real(self.offset, "offset")

    def price(self, u):
        return self.slope * u + self.offset

    def prices(self, n_models):
        """Prices of models ``1..n_models`` as an array."""
        return self.slope * np.arange(1, n_models + 1) + self.offset


@dataclass(frozen=True)
class Realization:
    """Deviation fractions ``g`` (distance) and ``h`` (energy) per customer."""

    g: tuple[float, ...]
    h: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in self.g)
        h = tuple(float(x) for x in self.h)
        if len(g) != len(h):
            raise ValidationError("h", f"length {len(h)} differs from g length {len(g)}")
        for name, vec in (("g", g), ("h", h)):
            for n, x in enumerate(vec):
                if not 0.0 <= x <= 1.0:
                    raise ValidationError(f"{name}[{n}]", f"must lie in [0, 1], got {x!r}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)

    @classmethod
    def nominal(cls, n):
        return cls((0.0,) * n, (0.0,) * n)

    def check_budgets(self, gamma, eta, tol=1e-12):
        if sum(self.g) > gamma + tol:
            raise ValidationError("g", f"sum {sum(self.g)!r} exceeds budget {gamma!r}")
        if sum(self.h) > eta + tol:
            raise ValidationError("h", f"sum {sum(self.h)!r} exceeds budget {eta!r}")

    def distances(self, inst):
        return inst.nominal_distance + np.asarray(self.g) * inst.distance_deviation

    def energies(self, inst):
        h = np.asarray(self.h)
        if inst.energy_mode is EnergyMode.PAPER_LITERAL:
            return inst.nominal_energy + h * inst.energy_deviation
        return inst.nominal_energy - h * inst.energy_deviation

    def to_dict(self):
        return {"g": list(self.g), "h": list(self.h)}


@dataclass(frozen=True)
class CustomerDecision:
    model_choice: tuple[int, ...]
    duration: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "model_choice", tuple(int(u) for u in self.model_choice))
        object.__setattr__(self, "duration", tuple(float(t) for t in self.duration))
        if len(self.model_choice) != len(self.duration):
            raise ValidationError("duration", "length differs from model_choice")


@dataclass(frozen=True)
class SellerOutcome:
    revenue: float
    training_cost: float
    profit: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "profit", self.revenue - self.training_cost)


def dbm_to_watts(p_dbm):
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def transmission_energy_per_bit(d, eps, noise, a):
    """Energy per transmitted data unit: ``d**eps * noise * a``."""
    if np.any(np.asarray(d) < 0):
        raise ValueError("distance must be non-negative")
    return np.power(d, eps) * noise * a


def transmission_cost(b1, k, tau, e_bit):
    """Energy bill for ``k * tau`` data units at ``e_bit`` energy per unit."""
    return b1 * (k * tau) * e_bit


def customer_net_cost(model, beta, tau, d, noise, inst):
    """Transmission cost plus rent minus utility for one customer."""
    e_bit = transmission_energy_per_bit(d, inst.path_loss_exp, noise, model.compressibility)
    k = model.encoding_speed
    return (transmission_cost(inst.energy_price, k, tau, e_bit) + tau * beta
            - inst.utility_coeff * np.log1p(k * tau))


def energy_used(model, tau, d, noise, inst):
    e_bit = transmission_energy_per_bit(d, inst.path_loss_exp, noise, model.compressibility)
    return model.encoding_speed * tau * e_bit


def customer_total_profit(decision, d, q, inst, prices, rtol=1e-9):
    """Negated total customer cost ``-sum(H + R)`` at distances ``d``, budgets ``q``.

    Raises :class:`EnergyBudgetViolation` if some customer's transmission
    energy exceeds its budget (beyond a relative ``rtol``).
    """
    d = np.broadcast_to(np.asarray(d, dtype=float), (inst.n_customers,))
    q = np.broadcast_to(np.asarray(q, dtype=float), (inst.n_customers,))
    total = 0.0
    for n, (u, tau) in enumerate(zip(decision.model_choice, decision.duration)):
        model = inst.model(u)
        noise = inst.customers[n].noise_power
        used = energy_used(model, tau, d[n], noise, inst)
        if used > q[n] * (1.0 + rtol):
            raise EnergyBudgetViolation(
                f"customer {n + 1}: energy {used!r} exceeds budget {q[n]!r}"
            )
        total += model.base_charge + customer_net_cost(model, prices.price(u), tau, d[n], noise, inst)
    return -float(total)


def rent_count(decisions, u):
    """Customers renting model ``u``; a zero rent duration is no rental."""
    return sum(1 for choice, tau in zip(decisions.model_choice, decisions.duration)
               if choice == u and tau > 0)


def seller_model_cost(u, decisions, inst):
    """Training cost of model ``u``: fine-tuning per renter plus the SSL cost."""
    return inst.model(u).finetune_unit_cost * rent_count(decisions, u) + inst.ssl_cost


def seller_profit(decisions, prices, inst):
    revenue = sum(tau * prices.price(u)
                  for u, tau in zip(decisions.model_choice, decisions.duration))
    training = sum(seller_model_cost(m.index, decisions, inst) for m in inst.models)
    return SellerOutcome(revenue=float(revenue), training_cost=float(training))
