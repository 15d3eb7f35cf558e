"""Seeded experiment sweeps over market parameters, written as CSV.

An :class:`ExperimentSpec` names one sweep axis and the algorithms to run at
every sweep value. Each sweep cell builds its instance from an independent
random stream derived from ``(seed, experiment name, cell index)``, so a
cell's output does not depend on execution order or parallelism.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import Recourse, evaluate_worst_case, greedy_select, static_env_opt
from .exceptions import IterationLimit, NoFeasibleSelection, ValidationError
from .market import (Customer, EnergyMode, MarketInstance, PriceSchedule, ScModel,
                     dbm_to_watts, seller_profit)
from .oracle import MAX_CUSTOMERS, MAX_SELECTIONS, brute_force_two_stage
from .pricing import PricingConfig, imp, near_opt, seller_profit_at
from .rsr import rsr
from .validation import check_integer, check_keys

CSV_HEADER = ("experiment", "sweep_value", "algorithm", "seed", "customer_profit",
              "seller_profit", "objective", "follower_calls", "wall_time_ms",
              "converged", "gap", "status")
ALGORITHMS = ("rsr", "greedy", "static_env_opt", "imp", "near_opt")
CUSTOMER_ALGORITHMS = ("rsr", "greedy", "static_env_opt")
DEFAULT_RECOURSE = {"rsr": Recourse.ADAPTIVE, "greedy": Recourse.FIXED,
                    "static_env_opt": Recourse.FIXED}


@dataclass(frozen=True)
class InstanceParams:
    """Generator parameters; model constants follow ``k_u = speed_intercept - speed_slope*(u-1)``,
    ``a_u = 1/u``, ``H_u = base_charge_slope*u`` and ``b2_u = finetune_slope*u``."""

    n_customers: int = 5
    n_models: int = 2
    d_avg: float = 750.0
    distance_deviation: float = 500.0
    nominal_energy: float = 5.0
    energy_deviation: float = 2.0
    noise_dbm: float = -77.0
    path_loss_exp: float = 3.0
    utility_coeff: float = 100.0
    energy_price: float = 100.0
    ssl_cost: float = 10.0
    t_min: float = 0.0
    t_max: float = 100.0
    gamma: float = 1.0
    eta_budget: float = 1.0
    energy_mode: str = EnergyMode.ADVERSARIAL_REDUCTION.value
    homogeneous: bool = False
    speed_intercept: float = 10.0
    speed_slope: float = 2.0
    base_charge_slope: float = 5.0
    finetune_slope: float = 2.0
    zeta: float = 10.0
    price_offset: float = 1.0

    def __post_init__(self):
        check_integer(self.n_customers, "n_customers", minimum=1)
        check_integer(self.n_models, "n_models", minimum=1)

    def price_schedule(self):
        return PriceSchedule(self.zeta, self.price_offset)


INSTANCE_PARAM_NAMES = tuple(f.name for f in fields(InstanceParams))
PRICING_PARAM_NAMES = tuple(f.name for f in fields(PricingConfig))
AXIS_ALIASES = {
    "customer_count": "n_customers",
    "model_count": "n_models",
    "distance": "d_avg",
    "energy": "nominal_energy",
    "price": "zeta",
}


def generate_instance(params=InstanceParams(), seed=0):
    """Deterministic instance; distances uniform in ``[0.5, 1.5] * d_avg`` unless homogeneous."""
    N = check_integer(params.n_customers, "n_customers", minimum=1)
    U = check_integer(params.n_models, "n_models", minimum=1)
    rng = np.random.default_rng(seed)
    if params.homogeneous:
        distances = np.full(N, float(params.d_avg))
    else:
        distances = rng.uniform(0.5 * params.d_avg, 1.5 * params.d_avg, size=N)
    noise = dbm_to_watts(params.noise_dbm)
    customers = tuple(
        Customer(n + 1, float(distances[n]), params.nominal_energy, params.distance_deviation,
                 params.energy_deviation, noise)
        for n in range(N)
    )
    models = tuple(
        ScModel(u, params.speed_intercept - params.speed_slope * (u - 1), 1.0 / u,
                params.base_charge_slope * u, params.finetune_slope * u)
        for u in range(1, U + 1)
    )
    return MarketInstance(
        customers=customers, models=models, utility_coeff=params.utility_coeff,
        energy_price=params.energy_price, ssl_cost=params.ssl_cost,
        path_loss_exp=params.path_loss_exp, t_min=params.t_min, t_max=params.t_max,
        gamma=min(params.gamma, N), eta_budget=min(params.eta_budget, N),
        energy_mode=params.energy_mode,
    )


_SPEC_KEYS = ("name", "description", "instance", "sweep", "algorithms", "seed",
              "output_path", "pricing", "near_opt_intervals", "recourse", "grid_depth")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    sweep_axis: str
    sweep_values: tuple
    algorithms: tuple[str, ...]
    seed: int = 0
    instance: dict = field(default_factory=dict)
    pricing: dict = field(default_factory=dict)
    near_opt_intervals: int = 1000
    recourse: dict = field(default_factory=dict)
    grid_depth: int | None = None
    output_path: str | None = None
    description: str = ""

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("name", "must be a non-empty string")
        axis = AXIS_ALIASES.get(self.sweep_axis, self.sweep_axis)
        valid_axes = set(INSTANCE_PARAM_NAMES) | set(PRICING_PARAM_NAMES) | {"seed", "intervals"}
        if axis not in valid_axes:
            raise ValidationError("sweep.axis", f"unknown axis {self.sweep_axis!r}")
        if not self.sweep_values:
            raise ValidationError("sweep.values", "must be non-empty")
        if not self.algorithms:
            raise ValidationError("algorithms", "must be non-empty")
        for i, alg in enumerate(self.algorithms):
            if alg not in ALGORITHMS:
                raise ValidationError(f"algorithms[{i}]", f"unknown algorithm {alg!r}")
        check_integer(self.seed, "seed", minimum=0)
        check_integer(self.near_opt_intervals, "near_opt_intervals", minimum=1)
        check_keys(self.instance, INSTANCE_PARAM_NAMES, "instance")
        check_keys(self.pricing, PRICING_PARAM_NAMES, "pricing")
        check_keys(self.recourse, CUSTOMER_ALGORITHMS, "recourse")
        for alg, mode in self.recourse.items():
            try:
                Recourse(mode)
            except ValueError:
                raise ValidationError(f"recourse.{alg}", f"unknown recourse {mode!r}") from None
        # fail now rather than inside a worker
        for i, value in enumerate(self.sweep_values):
            try:
                self.cell_config(value)
            except (TypeError, ValueError) as err:
                raise ValidationError(f"sweep.values[{i}]", str(err)) from None

    @property
    def axis(self):
        return AXIS_ALIASES.get(self.sweep_axis, self.sweep_axis)

    def cell_config(self, value):
        """Instance params, pricing config, near-opt intervals and seed of one sweep cell."""
        inst_kw = dict(self.instance)
        price_kw = dict(self.pricing)
        intervals, seed = self.near_opt_intervals, self.seed
        axis = self.axis
        if axis == "seed":
            seed = check_integer(value, "seed", minimum=0)
        elif axis == "intervals":
            intervals = check_integer(value, "intervals", minimum=1)
        elif axis in INSTANCE_PARAM_NAMES:
            inst_kw[axis] = value
        else:
            price_kw[axis] = value
        if "zeta_bounds" in price_kw:
            price_kw["zeta_bounds"] = tuple(price_kw["zeta_bounds"])
        if self.grid_depth is not None:
            price_kw.setdefault("grid_depth", self.grid_depth)
        params = InstanceParams(**inst_kw)
        return params, PricingConfig(**price_kw), intervals, seed

    @classmethod
    def from_dict(cls, data):
        check_keys(data, _SPEC_KEYS, required=("name", "sweep", "algorithms"))
        sweep = data["sweep"]
        check_keys(sweep, ("axis", "values"), "sweep", required=("axis", "values"))
        if not isinstance(sweep["values"], list):
            raise ValidationError("sweep.values", "expected a list")
        if not isinstance(data["algorithms"], list):
            raise ValidationError("algorithms", "expected a list")
        return cls(
            name=data["name"], sweep_axis=sweep["axis"], sweep_values=tuple(sweep["values"]),
            algorithms=tuple(data["algorithms"]), seed=data.get("seed", 0),
            instance=dict(data.get("instance", {})), pricing=dict(data.get("pricing", {})),
            near_opt_intervals=data.get("near_opt_intervals", 1000),
            recourse=dict(data.get("recourse", {})), grid_depth=data.get("grid_depth"),
            output_path=data.get("output_path"), description=data.get("description", ""),
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as err:
            raise ValidationError("", f"cannot read spec {path}: {err.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ValidationError("", f"{path}: invalid JSON: {err}") from None
        return cls.from_dict(data)

    def to_dict(self):
        data = {"name": self.name, "description": self.description,
                "sweep": {"axis": self.sweep_axis, "values": list(self.sweep_values)},
                "algorithms": list(self.algorithms), "seed": self.seed,
                "instance": self.instance, "pricing": self.pricing,
                "near_opt_intervals": self.near_opt_intervals, "recourse": self.recourse}
        if self.grid_depth is not None:
            data["grid_depth"] = self.grid_depth
        if self.output_path is not None:
            data["output_path"] = self.output_path
        return data


def cell_streams(seed, experiment, cell_index):
    """Independent (instance, algorithm) seed sequences for one sweep cell."""
    root = np.random.SeedSequence([seed, zlib.crc32(experiment.encode()), cell_index])
    return root.spawn(2)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _customer_row(alg, inst, prices, spec, trace):
    recourse = Recourse(spec.recourse.get(alg, DEFAULT_RECOURSE[alg]))
    grid_depth = spec.grid_depth
    converged, gap, calls = True, 0.0, 0
    if alg == "rsr":
        result = rsr(inst, prices, grid_depth=grid_depth)
        decision = result.decision
        converged, gap, calls = result.state.converged, result.state.gap, 1
        trace.append({"solver": "rsr", "iterations": result.state.trace_records()})
    elif alg == "greedy":
        decision = greedy_select(inst, prices)
    else:
        decision = static_env_opt(inst, prices)
    report = evaluate_worst_case(decision, recourse, inst, prices, alg, grid_depth)
    realized = type(decision)(report.selection, report.durations)
    objective = result.objective if alg == "rsr" else -report.worst_case_profit
    return {
        "customer_profit": report.worst_case_profit,
        "seller_profit": seller_profit(realized, prices, inst).profit,
        "objective": objective, "follower_calls": calls,
        "converged": converged, "gap": gap,
    }


def _seller_row(alg, inst, cfg, intervals, algo_seed, trace):
    if alg == "imp":
        result = imp(inst, cfg, random_state=algo_seed)
    else:
        result = near_opt(inst, intervals, cfg)
    response = seller_profit_at(result.best_zeta, inst, cfg)
    trace.append({"solver": alg, "best_zeta": result.best_zeta,
                  "iterates": [pt._asdict() for pt in result.trace]})
    state = response.rsr_result.state if response.rsr_result is not None else None
    return {
        "customer_profit": (response.rsr_result.profit if response.rsr_result is not None
                            else 0.0),
        "seller_profit": result.best_profit, "objective": result.best_profit,
        "follower_calls": result.follower_calls,
        "converged": state.converged if state is not None else False,
        "gap": state.gap if state is not None else math.inf,
    }


def run_cell(spec, cell_index, oracle=False):
    """All algorithm rows (plus trace and oracle records) for one sweep cell."""
    value = spec.sweep_values[cell_index]
    params, cfg, intervals, seed = spec.cell_config(value)
    inst_stream, algo_stream = cell_streams(seed, spec.name, cell_index)
    inst = generate_instance(params, inst_stream)
    prices = params.price_schedule()
    algo_seed = int(algo_stream.generate_state(1)[0])
    rows, traces, checks = [], [], []
    for alg in spec.algorithms:
        row = {"experiment": spec.name, "sweep_value": value, "algorithm": alg, "seed": seed}
        trace = []
        start = time.perf_counter()
        try:
            if alg in CUSTOMER_ALGORITHMS:
                row.update(_customer_row(alg, inst, prices, spec, trace))
            else:
                row.update(_seller_row(alg, inst, cfg, intervals, algo_seed, trace))
            row["status"] = "ok"
        except (NoFeasibleSelection, IterationLimit, ValidationError, ValueError) as err:
            row["status"] = f"error: {type(err).__name__}: {err}"
        row["wall_time_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
        rows.append(row)
        for rec in trace:
            traces.append({"experiment": spec.name, "sweep_value": value, "algorithm": alg, **rec})
        if (oracle and alg == "rsr" and row["status"] == "ok"
                and inst.n_customers <= MAX_CUSTOMERS
                and inst.n_models ** inst.n_customers <= MAX_SELECTIONS):
            ref = brute_force_two_stage(inst, prices)
            rel = abs(row["objective"] - ref.value) / max(1.0, abs(ref.value))
            checks.append({"experiment": spec.name, "sweep_value": value,
                           "rsr_objective": row["objective"], "oracle_objective": ref.value,
                           "rel_diff": rel, "match": rel <= 1e-5})
    return rows, traces, checks


def run(spec, parallel=1, oracle=False):
    """Run every sweep cell; returns ``(rows, traces, oracle_checks)`` in cell order."""
    cells = range(len(spec.sweep_values))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(run_cell, [spec] * len(cells), cells, [oracle] * len(cells)))
    else:
        results = [run_cell(spec, i, oracle) for i in cells]
    rows = [r for res in results for r in res[0]]
    traces = [t for res in results for t in res[1]]
    checks = [c for res in results for c in res[2]]
    return rows, traces, checks


def rows_to_csv(rows, header=CSV_HEADER):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in header])
    return buf.getvalue()


def write_outputs(spec, rows, traces, checks, out_dir, write_trace=False):
    """Write ``<name>.csv`` (and optionally traces / oracle checks) under ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [out_dir / f"{spec.name}.csv"]
        paths[0].write_text(rows_to_csv(rows))
        if write_trace:
            path = out_dir / f"{spec.name}.trace.jsonl"
            path.write_text("".join(json.dumps(t, default=_json_default) + "\n" for t in traces))
            paths.append(path)
        if checks:
            path = out_dir / f"{spec.name}.oracle.csv"
            header = ("experiment", "sweep_value", "rsr_objective", "oracle_objective",
                      "rel_diff", "match")
            path.write_text(rows_to_csv(checks, header))
            paths.append(path)
    except OSError as err:
        raise OSError(f"cannot write results to {err.filename or out_dir}: {err.strerror}") from err
    return paths


def _json_default(value):
    if isinstance(value, float) and math.isinf(value):
        return None
    raise TypeError(f"not JSON serializable: {value!r}")


_CUSTOMER_BASE = {"homogeneous": True}
_SELLER_BASE = {"homogeneous": True, "n_customers": 3}

BUILTIN_EXPERIMENTS = {
    spec["name"]: spec for spec in [
        {"name": "customers_by_count", "description": "customer profit vs number of customers",
         "instance": _CUSTOMER_BASE, "sweep": {"axis": "customer_count", "values": [3, 5, 7]},
         "algorithms": ["rsr", "greedy", "static_env_opt"]},
        {"name": "customers_by_models", "description": "customer profit vs number of models",
         "instance": _CUSTOMER_BASE, "sweep": {"axis": "model_count", "values": [1, 2, 3]},
         "algorithms": ["rsr", "greedy", "static_env_opt"]},
        {"name": "customers_by_distance", "description": "customer profit vs average distance",
         "instance": _CUSTOMER_BASE, "sweep": {"axis": "distance", "values": [750, 1250, 1750]},
         "algorithms": ["rsr", "greedy", "static_env_opt"]},
        {"name": "customers_by_deviation", "description": "customer profit vs distance deviation",
         "instance": _CUSTOMER_BASE,
         "sweep": {"axis": "distance_deviation", "values": [100, 300, 500, 700]},
         "algorithms": ["rsr", "greedy", "static_env_opt"]},
        {"name": "customers_by_price", "description": "customer profit vs price slope",
         "instance": _CUSTOMER_BASE, "sweep": {"axis": "price", "values": [10, 20, 40, 80]},
         "algorithms": ["rsr", "greedy", "static_env_opt"]},
        {"name": "customers_by_energy", "description": "customer profit vs nominal energy budget",
         "instance": _CUSTOMER_BASE, "sweep": {"axis": "energy", "values": [2.5, 3, 5, 7]},
         "algorithms": ["rsr", "greedy", "static_env_opt"]},
        {"name": "seller_by_count", "description": "seller profit vs number of customers",
         "instance": _SELLER_BASE, "sweep": {"axis": "customer_count", "values": [1, 3, 5]},
         "algorithms": ["imp", "near_opt"]},
        {"name": "seller_by_models", "description": "seller profit vs number of models",
         "instance": _SELLER_BASE, "sweep": {"axis": "model_count", "values": [1, 2, 3]},
         "algorithms": ["imp", "near_opt"]},
        {"name": "seller_by_distance", "description": "seller profit vs average distance",
         "instance": _SELLER_BASE, "sweep": {"axis": "distance", "values": [750, 1250, 1750]},
         "algorithms": ["imp", "near_opt"]},
        {"name": "seller_by_seed", "description": "seller profit vs random seed",
         "instance": _SELLER_BASE, "sweep": {"axis": "seed", "values": [0, 1, 2, 3]},
         "algorithms": ["imp"]},
        {"name": "seller_by_starts", "description": "seller profit vs number of initial prices",
         "instance": _SELLER_BASE, "sweep": {"axis": "num_starts", "values": [1, 3, 5, 7]},
         "algorithms": ["imp"]},
        {"name": "seller_cost_comparison", "description": "IMP against Near-Opt(1000 / 4000)",
         "instance": _SELLER_BASE, "sweep": {"axis": "intervals", "values": [1000, 4000]},
         "algorithms": ["imp", "near_opt"]},
    ]
}


def builtin_spec(name):
    return ExperimentSpec.from_dict(json.loads(json.dumps(BUILTIN_EXPERIMENTS[name])))


def resolve_spec(ref):
    """Load a spec from a JSON path, falling back to a built-in experiment name."""
    if not Path(ref).exists() and ref in BUILTIN_EXPERIMENTS:
        return builtin_spec(ref)
    return ExperimentSpec.load(ref)
