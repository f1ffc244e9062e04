import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeg_ensemble.core import Epoch, EpochSet
from eeg_ensemble.data import SyntheticSpec, generate_synthetic
from eeg_ensemble.errors import BandOutOfRange
from eeg_ensemble.features import (
    BANDS, band_powers, feature_matrix, feature_names, psd_features, write_feature_csv,
)

from signals import tone


def test_alpha_tone():
    v = psd_features(Epoch(tone(10.0)[None], 128.0, 1))
    alpha = v.band("alpha")[0]
    for name in ("delta", "theta", "beta"):
        assert alpha > 100 * v.band(name)[0]


def test_unit_sine_power_is_half():
    # bin-exact 10 Hz over 3 s: all power in one positive bin, mean square 1/2
    v = band_powers(tone(10.0)[None], 128.0)
    assert v[2] == pytest.approx(0.5, rel=1e-12)


def test_zero_epoch():
    assert np.all(psd_features(Epoch(np.zeros((3, 384)), 128.0, 1)).values == 0)


def test_length_120_for_30_channels(rng):
    v = psd_features(Epoch(rng.standard_normal((30, 384)), 128.0, 1))
    assert v.values.shape == (120,)
    assert len(feature_names(30)) == 120 and feature_names(2)[:3] == ["delta_ch0", "delta_ch1", "theta_ch0"]


def test_half_open_edges():
    # a 4 Hz tone belongs to theta, not delta
    v = band_powers(tone(4.0)[None], 128.0)
    assert v[1] > 1e3 * max(v[0], 1e-300)


def test_band_edges():
    assert dict((n, (lo, hi)) for n, lo, hi in BANDS) == psd_features(
        Epoch(np.zeros((1, 8)), 64.0, 1)).band_edges


def test_low_rate_rejected():
    with pytest.raises(BandOutOfRange):
        psd_features(Epoch(np.zeros((1, 64)), 50.0, 1))


@given(st.floats(0.01, 100))
def test_quadratic_scaling(a):
    x = np.random.default_rng(0).standard_normal((2, 128))
    np.testing.assert_allclose(band_powers(a * x, 128.0), a ** 2 * band_powers(x, 128.0), rtol=1e-12)


def test_power_of_two_scaling_exact(rng):
    x = rng.standard_normal((2, 128))
    assert np.array_equal(band_powers(4.0 * x, 128.0), 16.0 * band_powers(x, 128.0))


def test_channel_permutation(rng):
    x = rng.standard_normal((3, 128))
    perm = [2, 0, 1]
    a = band_powers(x, 128.0).reshape(4, 3)
    b = band_powers(x[perm], 128.0).reshape(4, 3)
    np.testing.assert_array_equal(a[:, perm], b)


def test_noiseless_synthetic_threshold_separates():
    ds = generate_synthetic(SyntheticSpec(noise_sigma=0.0, subject_gain_sigma=0.0,
                                          subject_offset_sigma=0.0, channels=4))
    f = feature_matrix(ds).reshape(len(ds), 4, 4)
    slow = f[:, 1:3].sum(axis=(1, 2))
    fast = f[:, 3].sum(axis=1)
    pred = (slow > fast).astype(int)
    assert np.array_equal(pred, ds.labels)


def test_feature_csv(tmp_path, rng):
    ds = EpochSet(rng.standard_normal((3, 2, 128)), [1, 1, 2], [0, 1, 0], 128.0)
    write_feature_csv(tmp_path / "f.csv", ds, meta={"k": 1})
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == '# {"k": 1}'
    rows = list(csv.reader(lines[1:]))
    assert rows[0][:3] == ["subject", "label", "delta_ch0"] and len(rows) == 4
    np.testing.assert_allclose([float(v) for v in rows[1][2:]], feature_matrix(ds)[0])
