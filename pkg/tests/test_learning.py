import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlneuron import learning as lr
from pwlneuron import models as nc
from pwlneuron.errors import ConfigError, DimensionMismatch, NoFiring
from pwlneuron.models import ModelKind, NeuronState

I0 = 4.502329370498046   # bisection result for tonic spiking at dt = 2^-4


def cfg(n_in=320, n_out=2, **kw):
    return lr.LearnerConfig(n_in, n_out, i_bias=I0, **kw)


def test_config_rules():
    c = cfg()
    assert c.alpha == 2.0 ** -17
    assert (c.t_high, c.t_low) == (200, 1600)
    with pytest.raises(ConfigError):
        cfg(f_high=5.0)
    with pytest.raises(ConfigError):
        cfg(window_ms=150.0)
    with pytest.raises(ConfigError):
        cfg(backend="gpu")
    with pytest.raises(ConfigError):
        lr.LearnerConfig(320, 2, alpha_shift=-1)


def test_bipolar_coding():
    p = lr.Pattern(np.array([[True, False], [False, True]]), 0)
    np.testing.assert_array_equal(p.bipolar, [1, -1, -1, 1])


def test_input_current_examples():
    white = lr.Pattern(np.zeros((4, 5), bool), 0)
    assert lr.input_current(white, np.full(20, 0.3), 2.0) == pytest.approx(-20 * 0.3 + 2.0)
    assert lr.input_current(white, np.zeros(20), 2.0) == 2.0
    checker = lr.Pattern(np.indices((4, 5)).sum(axis=0) % 2 == 0, 0)
    assert lr.input_current(checker, checker.bipolar / 20, 2.0) == pytest.approx(3.0)
    with pytest.raises(DimensionMismatch):
        lr.input_current(white, np.zeros(19), 0.0)


def test_weight_update_examples():
    assert lr.weight_update(1.0, 200, 200, 0.1) == 0
    assert lr.weight_update(1.0, 8, 0, 1 / 16) == 0.5
    assert lr.weight_update(1.0, 300, 200, 0.0) == 0
    # firing too slowly on a black pixel raises the weight
    assert lr.weight_update(1.0, 300, 200, 2.0 ** -17) > 0


def test_rate_rises_with_current():
    p = nc.neuron_type("tonic_spiking").params()
    periods = [lr.steady_period(p, i, 2.0 ** -4) for i in np.linspace(5, 40, 12)]
    assert all(a >= b for a, b in zip(periods, periods[1:]))


def test_find_bias_reaches_low_target():
    p = nc.neuron_type("tonic_spiking").params()
    i0 = lr.find_bias(p, 10.0, 2.0 ** -4)
    assert i0 == pytest.approx(I0, abs=1e-9)
    assert lr.steady_frequency(p, i0, 2.0 ** -4) >= 10.0
    assert lr.steady_frequency(p, i0 - 1e-3, 2.0 ** -4) < 10.0


def test_counter_matches_spike_train():
    c = cfg(n_out=1)
    st_ = lr.init_state(c)
    pat = lr.synthetic_dataset(1, 1, 0.0)[0]
    st_.weights = 0.01 * pat.bipolar[:, None]   # I = I0 + 3.2, well above rheobase
    pres = lr.present(st_, c, pat, learn=False)
    p = c.neuron()
    cur = lr.input_current(pat, st_.weights[:, 0], I0)
    tr = nc.simulate(p, cur, c.dt, c.window_steps, state=NeuronState(p.c, p.b * p.c))
    assert pres.counts[0] == tr.count
    assert st_.counters[0] == c.window_steps - 1 - tr.spike_steps[-1]


def test_no_learning_without_update():
    c = cfg()
    st_ = lr.init_state(c)
    pat = lr.synthetic_dataset(1, 1, 0.0)[0]
    lr.present(st_, c, pat, learn=False)
    assert not st_.weights.any()


def test_zero_error_leaves_weights():
    # At I0 the first two spikes of a window are 1518 steps apart and the
    # third lands after 200 ms, so a 200 ms window holds one update.
    def run(t_steps):
        f = 1000.0 / (t_steps * 2.0 ** -4)
        c = lr.LearnerConfig(320, 1, alpha_shift=0, i_bias=I0, f_high=2 * f, f_low=f,
                             window_ms=200.0)
        assert c.t_low == t_steps
        st_ = lr.init_state(c)
        lr.present(st_, c, lr.Pattern(np.zeros((20, 16), bool), 1), learn=True)
        return st_.weights

    assert not run(1518).any()
    assert run(1517).any()


def test_silent_output_raises():
    c = lr.LearnerConfig(320, 1, i_bias=0.0)
    st_ = lr.init_state(c)
    with pytest.raises(NoFiring):
        lr.present(st_, c, lr.synthetic_dataset(1, 1)[0], learn=False)


def test_single_pattern_converges():
    c = cfg(n_out=2)
    st_ = lr.init_state(c)
    pat = lr.synthetic_dataset(1, 1, 0.0)[0]
    for _ in range(100):
        pres = lr.present(st_, c, pat, learn=True)
    assert abs(pres.frequency_hz[0] - 80) <= 5
    assert pres.frequency_hz[1] <= 20


def test_two_orthogonal_patterns():
    c = cfg(n_out=2, epochs=60)
    data = lr.synthetic_dataset(2, 1, 0.0)
    st_ = lr.train(data, c)
    ev = lr.evaluate(st_, c, data)
    tab = ev.class_table()
    assert ev.accuracy == 1.0
    assert abs(tab[0][0] - 80) <= 5 and abs(tab[1][1] - 80) <= 5
    assert tab[0][1] <= 20 and tab[1][0] <= 20


def test_untrained_outputs_are_symmetric():
    c = cfg(n_out=3)
    st_ = lr.init_state(c)
    ev = lr.evaluate(st_, c, lr.synthetic_dataset(3, 2))
    assert np.ptp(ev.frequencies, axis=1).max() == 0


def test_fixed_backend_quantises_weights():
    c = cfg(n_out=1, backend="fixed")
    st_ = lr.init_state(c)
    pat = lr.synthetic_dataset(1, 1, 0.0)[0]
    for _ in range(5):
        lr.present(st_, c, pat, learn=True)
    q = st_.weights * 4096
    assert st_.weights.any() and np.all(q == np.round(q))


def test_prototypes_are_orthogonal():
    b = np.where(lr.prototypes(26).reshape(26, -1), 1, -1)
    g = b @ b.T
    assert np.all(g[~np.eye(26, dtype=bool)] == 0)
    with pytest.raises(ConfigError):
        lr.prototypes(64)


def test_gradient_probe_sign_agreement():
    c = cfg(n_out=3)
    data = lr.synthetic_dataset(3, 2, 0.1, seed=2)
    w = np.random.default_rng(3).normal(0, 0.01, size=(320, 3))
    probes = lr.gradient_probes(w, c, I0, data, n_probes=40, delta=0.05, seed=1)
    assert len(probes) == 40
    assert np.mean([p.agrees for p in probes]) >= 0.9


# -- files --------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2 ** 32 - 1))
def test_pbm_round_trip(h, w, seed):
    import tempfile
    from pathlib import Path
    px = np.random.default_rng(seed).random((h, w)) < 0.5
    with tempfile.TemporaryDirectory() as d:
        lr.write_pbm(Path(d) / "x.pbm", px)
        np.testing.assert_array_equal(lr.read_pbm(Path(d) / "x.pbm"), px)


def test_binary_pbm(tmp_path):
    px = np.random.default_rng(1).random((5, 11)) < 0.5
    packed = np.packbits(px, axis=1).tobytes()
    (tmp_path / "b.pbm").write_bytes(b"P4\n# c\n11 5\n" + packed)
    np.testing.assert_array_equal(lr.read_pbm(tmp_path / "b.pbm"), px)
    (tmp_path / "bad.pbm").write_bytes(b"P2\n1 1\n0\n")
    with pytest.raises(ConfigError):
        lr.read_pbm(tmp_path / "bad.pbm")


def test_dataset_and_weight_files(tmp_path):
    data = lr.synthetic_dataset(2, 3, seed=4)
    man = lr.write_dataset(data, tmp_path / "ds")
    back = lr.read_manifest(man)
    assert [p.label for p in back] == [p.label for p in data]
    assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(back, data))

    c = cfg(n_out=2, epochs=1)
    st_ = lr.train(data, c)
    lr.write_weights_csv(st_, c, tmp_path / "w.csv")
    w, i0, fmt = lr.read_weights_csv(tmp_path / "w.csv")
    np.testing.assert_array_equal(w, st_.weights)
    assert (i0, fmt) == (st_.i_bias, "float")
    lr.write_log_csv(st_, tmp_path / "log.csv")
    assert (tmp_path / "log.csv").read_text().startswith("epoch,class,frequency_hz")


def test_training_is_deterministic():
    data = lr.synthetic_dataset(2, 3, seed=4)
    c = cfg(n_out=2, epochs=2, seed=9)
    a, b = lr.train(data, c), lr.train(data, c)
    assert a.weights.tobytes() == b.weights.tobytes()
