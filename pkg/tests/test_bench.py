import csv
import io
import json

import numpy as np
import pytest

from lmaas_pricing.baselines import Recourse, evaluate_worst_case, greedy_select, static_env_opt
from lmaas_pricing.bench import (BUILTIN_EXPERIMENTS, CSV_HEADER, ExperimentSpec, InstanceParams,
                                 builtin_spec, cell_streams, generate_instance, rows_to_csv, run,
                                 write_outputs)
from lmaas_pricing.exceptions import ValidationError
from lmaas_pricing.rsr import rsr


def by_alg(rows, column="customer_profit"):
    out = {}
    for row in rows:
        out.setdefault(row["algorithm"], []).append(row[column])
    return out


def test_generate_instance_deterministic():
    params = InstanceParams(n_customers=6)
    assert generate_instance(params, 7) == generate_instance(params, 7)
    assert generate_instance(params, 7) != generate_instance(params, 8)
    d = generate_instance(params, 7).nominal_distance
    assert np.all((d >= 375.0) & (d <= 1125.0))


def test_generate_instance_defaults():
    inst = generate_instance(InstanceParams(homogeneous=True))
    assert np.all(inst.nominal_distance == 750.0)
    assert np.all(inst.nominal_energy == 5.0)
    assert np.all(inst.energy_deviation == 2.0)
    assert np.all(inst.distance_deviation == 500.0)
    assert (inst.t_min, inst.t_max) == (0.0, 100.0)
    assert inst.path_loss_exp == 3.0 and inst.utility_coeff == 100.0 and inst.energy_price == 100.0
    assert inst.noise_power[0] == pytest.approx(1.9953e-11, abs=1e-15)


def test_cell_streams_independent_of_order():
    a = cell_streams(5, "x", 2)[0].generate_state(4)
    b = cell_streams(5, "x", 2)[0].generate_state(4)
    c = cell_streams(5, "x", 1)[0].generate_state(4)
    d = cell_streams(5, "y", 2)[0].generate_state(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_spec_validation():
    base = {"name": "t", "sweep": {"axis": "customer_count", "values": [2]}, "algorithms": ["rsr"]}
    ExperimentSpec.from_dict(base)
    with pytest.raises(ValidationError, match="bogus"):
        ExperimentSpec.from_dict({**base, "bogus": 1})
    with pytest.raises(ValidationError, match="values"):
        ExperimentSpec.from_dict({**base, "sweep": {"axis": "customer_count", "values": []}})
    with pytest.raises(ValidationError, match=r"algorithms\[0\]"):
        ExperimentSpec.from_dict({**base, "algorithms": ["simplex"]})
    with pytest.raises(ValidationError, match="axis"):
        ExperimentSpec.from_dict({**base, "sweep": {"axis": "colour", "values": [1]}})
    with pytest.raises(ValidationError, match=r"instance"):
        ExperimentSpec.from_dict({**base, "instance": {"n_customer": 3}})
    with pytest.raises(ValidationError, match=r"sweep.values\[0\]"):
        ExperimentSpec.from_dict({**base, "sweep": {"axis": "customer_count", "values": [0]}})


def test_builtin_specs_valid_and_round_trip():
    for name in BUILTIN_EXPERIMENTS:
        spec = builtin_spec(name)
        assert ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_csv_header_and_formatting():
    spec = builtin_spec("customers_by_count")
    rows, _, _ = run(spec)
    text = rows_to_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_HEADER
    assert len(parsed) == 1 + 3 * 3
    for line in parsed[1:]:
        assert float(line[4]) == next(r["customer_profit"] for r in rows
                                      if str(r["sweep_value"]) == line[1] and r["algorithm"] == line[2])


def test_customer_count_sweep_increasing():
    for series in by_alg(run(builtin_spec("customers_by_count"))[0]).values():
        assert series == sorted(series) and len(set(series)) == len(series)


def test_distance_sweep_decreasing():
    for series in by_alg(run(builtin_spec("customers_by_distance"))[0]).values():
        assert all(a > b for a, b in zip(series, series[1:]))


def test_model_sweep_shapes():
    series = by_alg(run(builtin_spec("customers_by_models"))[0])
    assert all(a <= b for a, b in zip(series["rsr"], series["rsr"][1:]))
    assert len(set(series["greedy"])) == 1


def test_rows_replay_through_evaluation():
    spec = builtin_spec("customers_by_distance")
    rows, _, _ = run(spec)
    for i, value in enumerate(spec.sweep_values):
        params, _, _, seed = spec.cell_config(value)
        inst = generate_instance(params, cell_streams(seed, spec.name, i)[0])
        prices = params.price_schedule()
        decisions = {"rsr": rsr(inst, prices).decision, "greedy": greedy_select(inst, prices),
                     "static_env_opt": static_env_opt(inst, prices)}
        recourse = {"rsr": Recourse.ADAPTIVE, "greedy": Recourse.FIXED,
                    "static_env_opt": Recourse.FIXED}
        for alg, decision in decisions.items():
            row = next(r for r in rows if r["sweep_value"] == value and r["algorithm"] == alg)
            replay = evaluate_worst_case(decision, recourse[alg], inst, prices)
            assert replay.worst_case_profit == row["customer_profit"]


def test_failed_cell_recorded_not_raised():
    spec = ExperimentSpec.from_dict({
        "name": "starved", "sweep": {"axis": "t_min", "values": [0.0, 50.0]},
        "algorithms": ["rsr", "greedy"],
        "instance": {"homogeneous": True, "n_customers": 2, "nominal_energy": 0.3,
                     "energy_deviation": 0.2},
    })
    rows, _, _ = run(spec)
    status = {(r["sweep_value"], r["algorithm"]): r["status"] for r in rows}
    assert status[0.0, "rsr"] == "ok"
    assert status[50.0, "rsr"].startswith("error: NoFeasibleSelection")
    assert status[50.0, "greedy"].startswith("error: NoFeasibleSelection")


def test_parallel_matches_serial():
    spec = builtin_spec("customers_by_deviation")
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time_ms"} for r in rows]
    assert strip(run(spec, parallel=2)[0]) == strip(run(spec)[0])


def test_write_outputs(tmp_path):
    spec = builtin_spec("customers_by_count")
    rows, traces, checks = run(spec, oracle=True)
    paths = write_outputs(spec, rows, traces, checks, tmp_path, write_trace=True)
    names = sorted(p.name for p in paths)
    assert names == ["customers_by_count.csv", "customers_by_count.oracle.csv",
                     "customers_by_count.trace.jsonl"]
    assert all(c["match"] for c in checks) and len(checks) == 1
    first = json.loads((tmp_path / "customers_by_count.trace.jsonl").read_text().splitlines()[0])
    assert first["solver"] == "rsr" and first["iterations"]


def test_seller_sweep_row(tmp_path):
    spec = ExperimentSpec.from_dict({
        "name": "tiny_seller", "sweep": {"axis": "customer_count", "values": [1]},
        "algorithms": ["imp", "near_opt"], "near_opt_intervals": 10,
        "instance": {"homogeneous": True}, "pricing": {"max_num": 5},
    })
    rows, _, _ = run(spec)
    calls = {r["algorithm"]: r["follower_calls"] for r in rows}
    assert calls == {"imp": 2 * 5 + 1 + 1, "near_opt": 11}
    assert all(r["status"] == "ok" for r in rows)
