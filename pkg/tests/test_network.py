import json

import numpy as np
import pytest

from pwlneuron import models as nc
from pwlneuron import network as net
from pwlneuron.errors import ConfigError, EmptyReference, TooShort
from pwlneuron.models import ModelKind


def small(**kw):
    base = dict(n_total=20, sim_ms=200.0, seed=3)
    base.update(kw)
    return net.NetworkConfig(**base)


def python_run(nw, cfg, noise):
    """Plain-loop reference for the compiled kernel."""
    k = cfg.resolved_k()
    v = np.full(nw.n, -65.0)
    u = nw.b * v
    fired = np.zeros(nw.n, bool)
    out = []
    for t in range(cfg.n_ticks):
        cur = noise[t] + nw.weights[:, fired].sum(axis=1)
        fired[:] = False
        for s in range(cfg.substeps):
            for i in range(nw.n):
                dv = nc.nullcline_value(cfg.model, k, v[i]) - u[i] + cur[i]
                du = nw.a[i] * (nw.b[i] * v[i] - u[i])
                v[i] += cfg.dt * dv
                u[i] += cfg.dt * du
                if v[i] >= cfg.v_th:
                    v[i], u[i] = nw.c[i], u[i] + nw.d[i]
                    fired[i] = True
                    out.append((i, t * cfg.substeps + s))
    return out


def test_config_validation():
    with pytest.raises(ConfigError):
        net.NetworkConfig(n_total=1)
    with pytest.raises(ConfigError):
        net.NetworkConfig(exc_ratio=1.0)
    with pytest.raises(ConfigError):
        net.NetworkConfig(dt=0.3)
    cfg = net.NetworkConfig()
    assert (cfg.n_exc, cfg.n_inh, cfg.substeps, cfg.n_ticks) == (160, 40, 2, 1000)


def test_structure():
    cfg = small()
    nw = net.build_network(cfg)
    assert nw.weights.shape == (20, 20)
    assert np.all(np.diag(nw.weights) == 0)
    assert np.all(nw.weights[:, :16] >= 0) and np.all(nw.weights[:, 16:] <= 0)
    assert np.all(nw.is_exc[:16]) and not nw.is_exc[16:].any()


@pytest.mark.parametrize("model", [ModelKind.ORIGINAL, ModelKind.PWL3])
def test_kernel_matches_python_loop(model):
    cfg = small(model=model, sim_ms=100.0)
    nw = net.build_network(cfg)
    noise = net.thalamic_noise(cfg)
    r = net.run_network(nw, cfg, noise)
    ref = python_run(nw, cfg, noise)
    got = sorted(zip(r.neuron.tolist(), r.step.tolist()), key=lambda x: (x[1], x[0]))
    assert got == sorted(ref, key=lambda x: (x[1], x[0]))
    assert len(ref) > 0


def test_noise_streams_are_per_neuron():
    # neuron i's noise does not depend on how many neurons follow it
    a = net.thalamic_noise(small(n_total=20))
    b = net.thalamic_noise(small(n_total=30))
    np.testing.assert_array_equal(a[:, :5] / 5.0, b[:, :5] / 5.0)


def test_same_seed_same_raster(tmp_path):
    for name in ("a", "b"):
        net.simulate_network(small()).write_csv(tmp_path / f"{name}.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_different_seeds_differ():
    a, b = net.simulate_network(small()), net.simulate_network(small(seed=4))
    assert a.step.tobytes() != b.step.tobytes()


def test_raster_round_trip(tmp_path):
    cfg = small()
    r = net.simulate_network(cfg)
    r.write_csv(tmp_path / "r.csv")
    back = net.read_raster_csv(tmp_path / "r.csv", cfg)
    np.testing.assert_array_equal(back.neuron, r.neuron)
    np.testing.assert_array_equal(back.step, r.step)
    net.write_config_json(cfg, tmp_path / "c.json")
    d = json.loads((tmp_path / "c.json").read_text())
    assert d["model"] == "original" and d["n_total"] == 20


def raster(trains, sim_ms=1000.0, dt=1.0):
    nid = np.concatenate([[i] * len(t) for i, t in enumerate(trains)]).astype(np.int64)
    st = np.concatenate([np.asarray(t, float) for t in trains]) / dt
    order = np.argsort(st, kind="stable")
    n = len(trains)
    return net.RasterData(nid[order], st[order].astype(np.int64), dt, n,
                          np.ones(n, bool), sim_ms)


def test_mre_identical_is_zero():
    r = raster([[10, 20, 30], [15]])
    assert net.mre(r, r).mre_pct == 0


def test_mre_by_hand():
    ref = raster([[100, 200], [50]])
    cand = raster([[110, 200], [50, 60]])
    res = net.mre(ref, cand)
    # neuron 0: 10% and 0%; neuron 1: 0% plus one surplus spike charged 0%
    assert res.mre_pct == pytest.approx(100 * (0.1 + 0 + 0 + 0) / 4)
    assert (res.matched, res.surplus) == (3, 1)


def test_mre_silent_neuron_charged_fully():
    ref = raster([[100], [50]])
    cand = raster([[100], []])
    assert net.mre(ref, cand).mre_pct == pytest.approx(50.0)


def test_mre_errors():
    with pytest.raises(EmptyReference):
        net.mre(raster([[], []]), raster([[1], []]))
    with pytest.raises(ConfigError):
        net.mre(raster([[1]]), raster([[1], [2]]))


def test_rhythm_of_synthetic_oscillation():
    t = np.arange(0, 1000, 1.0)
    times = t[np.sin(2 * np.pi * 6 * t / 1000) > 0.95]
    r = raster([times])
    assert net.population_rhythm(r) == pytest.approx(6.0)


def test_rhythm_needs_a_second():
    with pytest.raises(TooShort):
        net.population_rhythm(raster([[1, 2, 3]], sim_ms=500))
    with pytest.raises(TooShort):
        net.population_rhythm(raster([[]]))


def test_compare_models_shares_network():
    res = net.compare_models(small(sim_ms=300.0), (ModelKind.ORIGINAL, ModelKind.PWL4))
    assert res[ModelKind.ORIGINAL].mre_pct == 0
    assert res[ModelKind.PWL4].mre_pct > 0
