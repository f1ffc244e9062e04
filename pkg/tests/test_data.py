import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeg_ensemble.core import ALERT, FATIGUE, EpochSet
from eeg_ensemble.data import (
    EXCLUDED, RtTrialRecord, SyntheticSpec, generate_synthetic, label_trials, load_epochs,
    loso_splits, read_rt_csv, save_epochs, write_labels_csv,
)
from eeg_ensemble.errors import FormatError, NotEnoughSubjects, ShapeError, SubjectTooSparse

import rt_oracle


class TestLabeling:
    def test_constructed_sequence(self):
        res = label_trials(rt_oracle.trials())
        assert np.array_equal(res.labels, rt_oracle.EXPECTED)
        assert res.counts() == {"alert": 60, "fatigue": 33, "excluded": 7}
        assert np.all(res.alert_rt_s == 1.0)

    @pytest.mark.parametrize("scale", [0.25, 0.7, 3.0, 40.0])
    def test_rt_rescaling_invariance(self, scale):
        assert np.array_equal(label_trials(rt_oracle.trials(scale)).labels, rt_oracle.EXPECTED)

    def test_identical_rts_all_alert(self):
        trials = [RtTrialRecord(1, 5.0 * i, 5.0 * i + 0.8) for i in range(30)]
        res = label_trials(trials)
        assert np.all(res.labels == ALERT) and res.alert_rt_s[0] == pytest.approx(0.8)

    def test_gap_case_excluded(self):
        # 29 fast trials far apart, then one at 2x alert-RT whose window holds only itself
        trials = [RtTrialRecord(1, 100.0 * i, 100.0 * i + 1.0) for i in range(29)]
        trials.append(RtTrialRecord(1, 5000.0, 5002.0))
        res = label_trials(trials)
        assert res.global_rt_s[-1] == pytest.approx(2.0)
        assert res.labels[-1] == EXCLUDED

    def test_window_boundary_inclusive(self):
        trials = [RtTrialRecord(1, 10.0 * i, 10.0 * i + 1.0) for i in range(25)]
        res = label_trials(trials)
        assert res.global_rt_s[12] == pytest.approx(1.0)
        # trial 2 sees trials 0..2; trial 12 sees 3..12 (onset 30 = 120 - 90 is inside)
        onset = np.array([t.deviation_onset_s for t in trials])
        assert np.sum((onset >= 120 - 90) & (onset <= 120)) == 10

    def test_subjects_independent(self):
        a = rt_oracle.trials(subject=1)
        b = rt_oracle.trials(scale=2.0, subject=2)
        res = label_trials(a + b)
        assert np.array_equal(res.labels, np.concatenate([rt_oracle.EXPECTED] * 2))
        assert set(res.alert_rt_s[100:]) == {2.0}

    def test_percentile_linear(self):
        rts = np.arange(1, 21, dtype=float)
        trials = [RtTrialRecord(1, 1000.0 * i, 1000.0 * i + r) for i, r in enumerate(rts)]
        # 5th percentile of 1..20 with linear interpolation: 1 + 0.05 * 19
        assert label_trials(trials).alert_rt_s[0] == pytest.approx(1.95)

    def test_sparse_subject(self):
        with pytest.raises(SubjectTooSparse):
            label_trials(rt_oracle.trials()[:19])

    def test_record_validation(self):
        with pytest.raises(ValueError):
            RtTrialRecord(1, 5.0, 5.0)

    def test_csv_round_trip(self, tmp_path):
        rt_oracle.write_csv(tmp_path / "rt.csv")
        trials = read_rt_csv(tmp_path / "rt.csv")
        assert trials == rt_oracle.trials()
        res = label_trials(trials)
        write_labels_csv(tmp_path / "out.csv", trials, res, meta={"window_s": 90})
        lines = (tmp_path / "out.csv").read_text().splitlines()
        assert lines[0].startswith("#") and lines[1].startswith("subject,")
        assert [ln.rsplit(",", 1)[1] for ln in lines[2:]].count("excluded") == 7

    def test_csv_errors(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("subj,a,b\n")
        with pytest.raises(FormatError, match="line 1"):
            read_rt_csv(p)
        p.write_text("subject,deviation_onset_s,response_onset_s\n1,2,3\n1,x,4\n")
        with pytest.raises(FormatError, match="line 3"):
            read_rt_csv(p)


class TestLoso:
    def _set(self, subjects):
        n = len(subjects)
        return EpochSet(np.zeros((n, 1, 4)), subjects, [0] * n, 1.0)

    def test_two_subjects(self):
        folds = loso_splits(self._set([7, 7, 9]))
        assert [(sorted(set(tr.subjects)), sorted(set(te.subjects))) for tr, te in folds] == \
            [([9], [7]), ([7], [9])]

    def test_single_subject(self):
        with pytest.raises(NotEnoughSubjects):
            loso_splits(self._set([1, 1]))

    @given(st.lists(st.integers(1, 11), min_size=2, max_size=60).filter(lambda s: len(set(s)) > 1))
    def test_partition(self, subjects):
        ds = self._set(subjects)
        ds.data[:, 0, 0] = np.arange(len(subjects))
        folds = loso_splits(ds)
        assert len(folds) == len(set(subjects))
        seen = np.concatenate([te.data[:, 0, 0] for _, te in folds])
        assert sorted(seen.tolist()) == list(range(len(subjects)))
        for tr, te in folds:
            assert len(tr) + len(te) == len(subjects)
            assert not set(tr.subjects) & set(te.subjects)


class TestSynthetic:
    def test_counts_and_balance(self):
        ds = generate_synthetic(SyntheticSpec(subjects=3, epochs_per_class=40))
        assert ds.data.shape == (240, 8, 384)
        assert np.sum(ds.labels == ALERT) == np.sum(ds.labels == FATIGUE) == 120
        for s in (1, 2, 3):
            assert np.sum((ds.subjects == s) & (ds.labels == FATIGUE)) == 40

    def test_deterministic(self):
        a = generate_synthetic(SyntheticSpec(seed=7, epochs_per_class=5))
        b = generate_synthetic(SyntheticSpec(seed=7, epochs_per_class=5))
        assert np.array_equal(a.data, b.data) and a.meta == b.meta
        c = generate_synthetic(SyntheticSpec(seed=8, epochs_per_class=5))
        assert not np.array_equal(a.data, c.data)

    def test_subject_shift(self):
        spec = dict(epochs_per_class=10, noise_sigma=0.0, channels=3)
        shifted = generate_synthetic(SyntheticSpec(**spec))
        means = [shifted.data[shifted.subjects == s].mean(axis=(0, 2)) for s in (1, 2)]
        assert not np.allclose(means[0], means[1], atol=1e-2)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SyntheticSpec(subjects=0)


class TestContainer:
    def test_round_trip(self, tmp_path, rng):
        ds = EpochSet(rng.standard_normal((5, 3, 17)), [1, 1, 2, 2, 3], [0, 1, 0, 1, -1], 128.0,
                      {"note": "x"})
        for fmt, path in (("container", tmp_path / "c"), ("npz", tmp_path / "d.npz")):
            save_epochs(path, ds, fmt)
            back = load_epochs(path, fmt)
            assert np.array_equal(back.data, ds.data)
            assert np.array_equal(back.subjects, ds.subjects)
            assert np.array_equal(back.labels, ds.labels)
            assert back.sample_rate_hz == 128.0 and back.meta == {"note": "x"}

    def test_payload_layout(self, tmp_path):
        ds = EpochSet(np.arange(12.0).reshape(2, 2, 3), [1, 2], [0, 1], 4.0)
        save_epochs(tmp_path / "c", ds)
        raw = (tmp_path / "c" / "payload.f64").read_bytes()
        assert np.array_equal(np.frombuffer(raw, "<f8"), np.arange(12.0))

    def test_wrong_channels_names_epoch(self, tmp_path, rng):
        ds = EpochSet(rng.standard_normal((3, 2, 4)), [1, 1, 1], [0, 0, 0], 1.0)
        save_epochs(tmp_path / "c", ds)
        m = tmp_path / "c" / "manifest"
        m.write_text(m.read_text().replace("1 1 0 2 4", "1 1 0 3 4"))
        with pytest.raises(ShapeError, match="epoch 1"):
            load_epochs(tmp_path / "c")

    def test_empty_manifest(self, tmp_path):
        (tmp_path / "c").mkdir()
        (tmp_path / "c" / "manifest").write_text("")
        with pytest.raises(FormatError):
            load_epochs(tmp_path / "c")

    def test_bad_header_line(self, tmp_path, rng):
        save_epochs(tmp_path / "c", EpochSet(rng.standard_normal((1, 1, 4)), [1], [0], 1.0))
        m = tmp_path / "c" / "manifest"
        m.write_text(m.read_text().replace("times 4", "times four"))
        with pytest.raises(FormatError, match="line 3"):
            load_epochs(tmp_path / "c")

    def test_truncated_payload(self, tmp_path, rng):
        save_epochs(tmp_path / "c", EpochSet(rng.standard_normal((2, 1, 4)), [1, 1], [0, 0], 1.0))
        p = tmp_path / "c" / "payload.f64"
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(ShapeError):
            load_epochs(tmp_path / "c")
