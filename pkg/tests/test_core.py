import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eeg_ensemble.core import (
    ALERT, FATIGUE, UNLABELED, Epoch, EpochSet, cubic_spline, fft, ifft, relative_l2,
)
from eeg_ensemble.errors import (
    DegenerateKnots, InsufficientKnots, InvalidSignal, NonRealResult, ShapeError,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestFFT:
    def test_constant_is_dc_only(self):
        np.testing.assert_allclose(fft([1, 1, 1, 1]).bins, [4, 0, 0, 0], atol=1e-15)

    def test_inverse_of_dc(self):
        np.testing.assert_allclose(ifft(np.array([4, 0, 0, 0], dtype=complex)), [1, 1, 1, 1])

    def test_cosine_energy_at_plus_minus_k0(self):
        t, k0 = 384, 7
        x = np.cos(2 * np.pi * k0 * np.arange(t) / t)
        mag = np.abs(fft(x).bins)
        assert set(np.argsort(mag)[-2:]) == {k0, t - k0}
        np.testing.assert_allclose(mag[[k0, t - k0]], t / 2)
        assert np.sum(np.delete(mag, [k0, t - k0]) ** 2) < 1e-18 * t

    def test_round_trip_384(self, rng):
        x = rng.standard_normal(384)
        assert relative_l2(ifft(fft(x)), x) < 1e-9

    def test_sine_round_trip(self):
        x = np.sin(2 * np.pi * 10 * np.arange(384) / 128)
        assert relative_l2(ifft(fft(x, 128.0)), x) < 1e-9

    def test_zero_spectrum(self):
        np.testing.assert_array_equal(ifft(np.zeros(8, dtype=complex)), np.zeros(8))

    def test_bin_frequencies(self):
        s = fft(np.zeros(384), 128.0)
        assert s.frequency(3) == pytest.approx(1.0)
        assert len(s) == 384
        np.testing.assert_allclose(s.frequencies[:4], [0, 1 / 3, 2 / 3, 1])

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidSignal):
            fft([1.0, np.nan, 2.0])

    def test_rejects_short(self):
        with pytest.raises(InvalidSignal):
            fft([1.0])

    def test_asymmetric_spectrum_is_not_real(self):
        with pytest.raises(NonRealResult):
            ifft(np.array([0, 1, 0, 0], dtype=complex))

    @pytest.mark.parametrize("t", [4, 100, 384])
    def test_parseval(self, rng, t):
        x = rng.standard_normal(t)
        lhs = np.sum(x ** 2)
        rhs = np.sum(np.abs(fft(x).bins) ** 2) / t
        assert abs(lhs - rhs) / lhs < 1e-9

    @given(arrays(np.float64, st.integers(2, 64), elements=finite))
    def test_conjugate_symmetry(self, x):
        b = fft(x).bins
        n = x.size
        np.testing.assert_allclose(b[1:], np.conj(b[1:][::-1]) if n > 1 else b[1:],
                                   atol=1e-9 * (1 + np.abs(b).max()))

    @given(arrays(np.float64, 32, elements=finite), arrays(np.float64, 32, elements=finite),
           finite, finite)
    def test_linearity(self, x, y, a, b):
        lhs = fft(a * x + b * y).bins
        rhs = a * fft(x).bins + b * fft(y).bins
        scale = 1 + np.abs(a * fft(x).bins).max() + np.abs(b * fft(y).bins).max()
        assert np.abs(lhs - rhs).max() <= 1e-9 * scale


class TestSpline:
    def test_reproduces_line(self):
        kx = np.array([0.0, 0.5, 2.0, 3.0, 7.0])
        q = np.linspace(0, 7, 101)
        np.testing.assert_allclose(cubic_spline(kx, 2 * kx, q), 2 * q, atol=1e-12)

    def test_two_knots_linear(self):
        np.testing.assert_allclose(cubic_spline([0, 4], [1, 9], [0, 1, 2, 4]), [1, 3, 5, 9])

    def test_sine_midpoints(self):
        kx = np.linspace(0, 2 * np.pi, 16)
        mid = 0.5 * (kx[1:] + kx[:-1])
        assert np.max(np.abs(cubic_spline(kx, np.sin(kx), mid) - np.sin(mid))) < 1e-3

    def test_interpolates_knots(self, rng):
        kx = np.cumsum(rng.uniform(0.1, 1.0, 12))
        ky = rng.standard_normal(12)
        np.testing.assert_allclose(cubic_spline(kx, ky, kx), ky, atol=1e-12)

    def test_natural_end_conditions(self, rng):
        kx = np.cumsum(rng.uniform(0.5, 1.0, 8))
        ky = rng.standard_normal(8)
        h = 1e-4
        for end in (kx[0] + h, kx[-1] - h):
            q = np.array([end - h, end, end + h])
            y = cubic_spline(kx, ky, q)
            assert abs((y[0] - 2 * y[1] + y[2]) / h ** 2) < 1e-2 * (1 + np.abs(ky).max())

    def test_duplicate_knots(self):
        with pytest.raises(DegenerateKnots):
            cubic_spline([0, 1, 1, 2], [0, 1, 2, 3], [0.5])

    def test_too_few_knots(self):
        with pytest.raises(InsufficientKnots):
            cubic_spline([0.0], [1.0], [0.0])

    @given(st.lists(st.floats(0.01, 10), min_size=2, max_size=15), finite, finite)
    def test_affine_reproduction(self, gaps, a, b):
        kx = np.cumsum(gaps)
        q = np.linspace(kx[0], kx[-1], 37)
        np.testing.assert_allclose(cubic_spline(kx, a * kx + b, q), a * q + b,
                                   atol=1e-8 * (1 + abs(a) * kx[-1] + abs(b)))


class TestContainers:
    def test_epoch_validation(self):
        with pytest.raises(ShapeError):
            Epoch(np.zeros(10), 128.0, 1)
        with pytest.raises(ShapeError):
            Epoch(np.zeros((2, 1)), 128.0, 1)
        with pytest.raises(InvalidSignal):
            Epoch(np.full((2, 4), np.inf), 128.0, 1)
        with pytest.raises(InvalidSignal):
            Epoch(np.zeros((2, 4)), 0.0, 1)
        with pytest.raises(ValueError):
            Epoch(np.zeros((2, 4)), 1.0, 1, label=5)

    def test_epochset_round_trip(self, rng):
        eps = [Epoch(rng.standard_normal((3, 16)), 64.0, s, lab)
               for s, lab in [(2, ALERT), (1, FATIGUE), (2, UNLABELED)]]
        es = EpochSet.from_epochs(eps)
        assert len(es) == 3 and es.shape == (3, 16, 64.0)
        assert es.subject_ids() == [2, 1]
        np.testing.assert_array_equal(es[1].data, eps[1].data)
        assert [e.label for e in es] == [ALERT, FATIGUE, UNLABELED]
        sub = es.subset(es.subjects == 2)
        assert len(sub) == 2

    def test_epochset_rejects_mixed_shapes(self):
        with pytest.raises(ShapeError, match="epoch 1"):
            EpochSet.from_epochs([Epoch(np.zeros((2, 4)), 1.0, 0), Epoch(np.zeros((3, 4)), 1.0, 0)])

    def test_relative_l2_zero_reference(self):
        assert relative_l2([3.0, 4.0], [0.0, 0.0]) == 5.0
