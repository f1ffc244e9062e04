import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeg_ensemble.core import relative_l2
from eeg_ensemble.decomposition import vmd_decompose
from eeg_ensemble.errors import InvalidSignal, TooManyModes

from signals import tone


def fft_peak_hz(x, rate=128.0):
    mag = np.abs(np.fft.rfft(x))
    return np.fft.rfftfreq(x.size, 1 / rate)[np.argmax(mag)]


def test_single_tone():
    x = tone(10.0)
    modes, freqs = vmd_decompose(x, 1, sample_rate_hz=128.0)
    assert abs(freqs[0] - fft_peak_hz(x)) < 0.5
    assert relative_l2(modes[0], x) < 0.02


def test_two_tones_sorted():
    x = tone(5.0) + tone(25.0)
    modes, freqs, det = vmd_decompose(x, 2, sample_rate_hz=128.0, return_details=True)
    assert det.converged
    np.testing.assert_allclose(freqs, [5.0, 25.0], atol=0.5)
    assert np.corrcoef(modes[0], tone(5.0))[0, 1] > 0.99
    assert np.corrcoef(modes[1], tone(25.0))[0, 1] > 0.99


def test_zero_signal():
    modes, freqs, det = vmd_decompose(np.zeros(128), 2, return_details=True)
    assert det.converged and det.iterations == 1
    for m in modes:
        assert not np.any(m)


def test_residual_monotone_at_tail():
    rng = np.random.default_rng(3)
    for _ in range(5):
        f1, f2 = rng.uniform(3, 15), rng.uniform(25, 40)
        x = tone(f1, phase=rng.uniform(0, 6)) + 0.7 * tone(f2, phase=rng.uniform(0, 6))
        _, _, det = vmd_decompose(x, 2, sample_rate_hz=128.0, return_details=True)
        tail = np.asarray(det.residuals[-10:])
        assert np.all(np.diff(tail) <= 1e-12)


def test_max_iter_reports_not_converged():
    x = tone(7.0) + tone(30.0)
    _, _, det = vmd_decompose(x, 2, max_iter=2, return_details=True)
    assert not det.converged and det.iterations == 2


def test_tau_positive_reconstructs_better():
    x = tone(6.0) + 0.5 * tone(20.0) + 0.1 * np.random.default_rng(1).standard_normal(384)
    m0, _ = vmd_decompose(x, 2, tau=0.0)
    m1, _ = vmd_decompose(x, 2, tau=0.1, max_iter=1000)
    assert relative_l2(np.sum(m1, axis=0), x) < relative_l2(np.sum(m0, axis=0), x)


def test_mirror_option_keeps_shape():
    modes, _ = vmd_decompose(tone(10.0, n=101), 2, mirror=True)
    assert all(m.shape == (101,) for m in modes)


def test_errors():
    with pytest.raises(TooManyModes):
        vmd_decompose(np.ones(8), 5)
    with pytest.raises(InvalidSignal):
        vmd_decompose(np.array([np.nan, 1.0]), 1)
    with pytest.raises(ValueError):
        vmd_decompose(np.ones(8), 1, alpha=0)


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_sorted_and_deterministic(seed, k):
    x = np.random.default_rng(seed).standard_normal(64)
    m1, f1 = vmd_decompose(x, k, max_iter=50)
    m2, f2 = vmd_decompose(x.copy(), k, max_iter=50)
    assert np.all(np.diff(f1) >= 0)
    assert np.array_equal(f1, f2)
    assert all(np.array_equal(a, b) for a, b in zip(m1, m2))
    assert np.all((f1 >= 0) & (f1 <= 0.5))
