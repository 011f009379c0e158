import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmdfault.errors import MissingChannelError, ParameterError
from dmdfault.faults import FAULT_MODES, POST_NOISE_STD, FaultMode, FaultSpec, inject_fault
from dmdfault.timeseries import RecordedSeries


def _series(n=1000, rate=10.0, value=None, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n) if value is None else np.full(n, value)
    return RecordedSeries(("x", "y"), np.vstack([x, rng.normal(size=n)]), rate)


def test_spec_validation_and_dict():
    with pytest.raises(ParameterError):
        FaultSpec(FaultMode.NOISE, 1.0, noise_std=-1)
    spec = FaultSpec("drift", 2.5, drift_rate=0.3)
    assert spec.mode is FaultMode.DRIFT
    assert FaultSpec.from_dict(spec.to_dict()) == spec
    big = spec.scaled(10)
    assert big.drift_rate == pytest.approx(3.0) and big.gain_std == spec.gain_std


def test_onset_after_end():
    s = _series()
    out, labels = inject_fault(s, "x", FaultSpec(FaultMode.DRIFT, 1e6), seed=1)
    assert not labels.any()
    diff = out["x"] - s["x"]
    assert np.std(diff) == pytest.approx(POST_NOISE_STD, rel=0.1)


def test_onset_before_start():
    with pytest.raises(ParameterError):
        inject_fault(_series(), "x", FaultSpec(FaultMode.NOISE, -1.0))


def test_unknown_channel():
    with pytest.raises(MissingChannelError):
        inject_fault(_series(), "nope", FaultSpec(FaultMode.NOISE, 1.0))


@pytest.mark.parametrize("mode", FAULT_MODES)
def test_label_alignment_and_other_channels(mode):
    s = _series(rate=7.0)
    onset = 40.0 / 7.0
    out, labels = inject_fault(s, "x", FaultSpec(mode, onset), seed=3)
    assert labels.dtype == np.int8
    first = int(np.argmax(labels))
    assert first == 40 and labels[:40].sum() == 0 and labels[40:].all()
    assert np.count_nonzero(np.diff(labels)) == 1
    assert out["y"].tobytes() == s["y"].tobytes()


def test_none_mode_labels():
    _, labels = inject_fault(_series(), "x", FaultSpec(FaultMode.NONE, 0.0))
    assert not labels.any()


@settings(max_examples=40, deadline=None)
@given(onset=st.floats(0.0, 120.0), rate=st.sampled_from([1.0, 5.0, 10.0, 20.0]))
def test_label_transition_is_first_sample_at_onset(onset, rate):
    s = _series(n=1000, rate=rate)
    _, labels = inject_fault(s, "x", FaultSpec(FaultMode.DRIFT, onset))
    t = s.times
    idx = np.flatnonzero(labels)
    if idx.size:
        assert t[idx[0]] >= onset - 1e-9 * max(1.0, onset)
        if idx[0] > 0:
            assert t[idx[0] - 1] < onset
        assert np.all(labels[idx[0]:] == 1)
    else:
        assert t[-1] < onset


def test_seed_determinism():
    s = _series()
    spec = FaultSpec(FaultMode.CATASTROPHIC, 20.0)
    a, _ = inject_fault(s, "x", spec, seed=11)
    b, _ = inject_fault(s, "x", spec, seed=11)
    c, _ = inject_fault(s, "x", spec, seed=12)
    assert a["x"].tobytes() == b["x"].tobytes()
    assert not np.array_equal(a["x"], c["x"])


def test_drift_mean():
    s = _series(n=6000)
    spec = FaultSpec(FaultMode.DRIFT, 100.0, drift_rate=0.01)
    out, labels = inject_fault(s, "x", spec, seed=4)
    post = labels.astype(bool)
    diff = (out["x"] - s["x"])[post]
    elapsed = s.times[post] - 100.0
    se = POST_NOISE_STD / np.sqrt(diff.size)
    assert abs(diff.mean() - 0.01 * elapsed.mean()) < 3 * se
    # bias before noise is exactly c * elapsed
    clean = _series(n=6000)
    out0, _ = inject_fault(clean, "x", FaultSpec(FaultMode.DRIFT, 100.0, drift_rate=0.01,
                                                 post_noise_std=0.0))
    np.testing.assert_allclose((out0["x"] - clean["x"])[post], 0.01 * elapsed, atol=1e-12)


def test_noise_variance_monte_carlo():
    s = _series(n=10000, rate=1.0)
    spec = FaultSpec(FaultMode.NOISE, 5000.0, noise_std=0.1)
    out, labels = inject_fault(s, "x", spec, seed=5)
    diff = (out["x"] - s["x"])[labels.astype(bool)]
    assert diff.size == 5000
    expected = 0.1 ** 2 + POST_NOISE_STD ** 2
    assert np.var(diff, ddof=1) == pytest.approx(expected, rel=0.1)


def test_catastrophic_is_multiplicative():
    s = _series(value=0.0)
    spec = FaultSpec(FaultMode.CATASTROPHIC, 10.0, post_noise_std=0.0)
    out, _ = inject_fault(s, "x", spec, seed=6)
    assert not out["x"].any()
    s2 = _series(value=2.0, n=20000)
    out2, labels = inject_fault(s2, "x", spec, seed=6)
    g = out2["x"][labels.astype(bool)] / 2.0
    assert np.std(g) == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("mode", [FaultMode.OSCILLATION, FaultMode.NOISE, FaultMode.DRIFT])
def test_additive_modes_ignore_clean_value(mode):
    spec = FaultSpec(mode, 10.0)
    a, b = _series(value=0.0), _series(value=5.0)
    ca, _ = inject_fault(a, "x", spec, seed=7)
    cb, _ = inject_fault(b, "x", spec, seed=7)
    np.testing.assert_allclose(ca["x"] - a["x"], cb["x"] - b["x"], atol=1e-12)


def test_oscillation_shape():
    s = _series(value=0.0, n=3000)
    spec = FaultSpec(FaultMode.OSCILLATION, 50.0, amplitude=0.2, frequency_hz=0.02,
                     post_noise_std=0.0)
    out, labels = inject_fault(s, "x", spec)
    t = s.times
    expect = np.where(labels == 1, 0.2 * np.sin(2 * np.pi * 0.02 * (t - 50.0)), 0.0)
    np.testing.assert_allclose(out["x"], expect, atol=1e-12)
