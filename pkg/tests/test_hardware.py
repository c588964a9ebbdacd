import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlneuron import fixedpoint as fx
from pwlneuron import hardware as hw
from pwlneuron import models as nc
from pwlneuron.errors import ConfigError, Infeasible
from pwlneuron.models import NO_K, KCoeffs, ModelKind, NeuronParams

PWL = (ModelKind.PWL2, ModelKind.PWL3, ModelKind.PWL4)
HW_MODELS = PWL + (ModelKind.ORIGINAL_DISCRETIZED,)


def mixed_neurons(model, n, shift=4):
    keys = list(nc.CANONICAL_TYPES)
    out = []
    for j in range(n):
        t = nc.neuron_type(keys[j % len(keys)])
        a = fx.nearest_dyadic(abs(t.a)) * np.sign(t.a)
        b = fx.nearest_dyadic(t.b) if t.b else 0.0
        k = t.k_for(model) if model.is_pwl else NO_K
        out.append(fx.FixedNeuron.from_params(NeuronParams(model, a, b, t.c, t.d, 30, k), shift))
    return out


@pytest.mark.parametrize("model,v_s", [(ModelKind.PWL2, 5), (ModelKind.PWL3, 6),
                                       (ModelKind.PWL4, 7), (ModelKind.ORIGINAL, 6)])
def test_stage_counts(model, v_s):
    assert hw.V_STAGES[model] == v_s
    if model is not ModelKind.ORIGINAL:
        assert len(fx.V_STAGES[model]) == v_s


def test_hwplan_example():
    spec = hw.plan_pipeline(ModelKind.PWL2, 30, 25)
    assert (spec.v_s, spec.u_s, spec.d_s, spec.v_buffer_size) == (5, 5, 0, 25)


@settings(max_examples=60)
@given(st.sampled_from(HW_MODELS), st.integers(0, 40), st.integers(0, 60))
def test_planned_specs_satisfy_identities(model, i_s, extra):
    n = i_s + hw.V_STAGES[model] + extra
    spec = hw.plan_pipeline(model, n, i_s)
    assert spec.violations() == []
    assert n == spec.v_buffer_size + spec.v_s == spec.u_buffer_size + spec.u_s
    assert spec.i_s + spec.d_s + spec.v_s == n


def test_bad_specs_rejected():
    with pytest.raises(Infeasible):
        hw.plan_pipeline(ModelKind.PWL4, 10, 5)
    with pytest.raises(ConfigError):
        hw.PipelineSpec(ModelKind.PWL2, 30, 5, 5, 20, 4, 25, 25)
    with pytest.raises(ConfigError):
        hw.PipelineSpec(ModelKind.PWL2, 30, 6, 6, 20, 4, 24, 24)


def test_resource_table():
    want = {ModelKind.ORIGINAL: (6, 1, 2, "Multiply"), ModelKind.PWL2: (6, 0, 3, "Add"),
            ModelKind.PWL3: (8, 0, 4, "Add"), ModelKind.PWL4: (11, 0, 5, "Add")}
    for m, (add, mul, mux, crit) in want.items():
        r = hw.resources(m)
        assert (r.adders, r.multipliers, r.multiplexers, r.critical_path) == (add, mul, mux, crit)


@pytest.mark.parametrize("model", HW_MODELS)
def test_schedule_equals_independent_runs(model):
    spec = hw.plan_pipeline(model, 12, 3)
    neurons = mixed_neurons(model, 12)
    rng = np.random.default_rng(5)
    inputs = rng.integers(0, 20 * 4096, size=(300, 12))
    runs = hw.schedule_simulate(spec, neurons, inputs, 300)
    for j, r in enumerate(runs):
        ref = fx.fixed_simulate(neurons[j], [int(x) for x in inputs[:, j]], 300)
        assert r.spike_steps == ref.spike_steps
        assert r.final == ref.final
        assert r.saturated_steps == ref.saturated_steps


def test_schedule_without_input_lag():
    # I_S + D_S = 0 means the neuron count equals the V depth
    spec = hw.plan_pipeline(ModelKind.PWL2, 5, 0)
    neurons = mixed_neurons(ModelKind.PWL2, 5)
    runs = hw.schedule_simulate(spec, neurons, 14 * 4096, 200)
    for n, r in zip(neurons, runs):
        assert r.spike_steps == fx.fixed_simulate(n, 14 * 4096, 200).spike_steps


def test_occupancy_trace(tmp_path):
    spec = hw.plan_pipeline(ModelKind.PWL3, 8, 1)
    neurons = mixed_neurons(ModelKind.PWL3, 8)
    trace = []
    hw.schedule_simulate(spec, neurons, 10 * 4096, 3, trace=trace)
    # one neuron per stage per cycle
    by_cycle = {}
    for cyc, unit, j in trace:
        by_cycle.setdefault(cyc, []).append(unit)
    assert all(len(v) == len(set(v)) for v in by_cycle.values())
    # every neuron passes every stage once per step
    for j in range(8):
        assert sum(1 for _, _, x in trace if x == j) == 3 * spec.v_s
    hw.write_trace_csv(trace, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "cycle,unit,neuron_id"


def test_schedule_rejects_mismatches():
    spec = hw.plan_pipeline(ModelKind.PWL2, 10, 2)
    with pytest.raises(ConfigError):
        hw.schedule_simulate(spec, mixed_neurons(ModelKind.PWL2, 9), 0, 10)
    with pytest.raises(ConfigError):
        hw.schedule_simulate(spec, mixed_neurons(ModelKind.PWL3, 10), 0, 10)


def test_json_round_trip(tmp_path):
    spec = hw.plan_pipeline(ModelKind.PWL4, 30, 20)
    hw.write_json(spec, tmp_path / "p.json")
    d = json.loads((tmp_path / "p.json").read_text())
    d["model"] = ModelKind.parse(d["model"])
    assert hw.PipelineSpec(**d) == spec
