"""Reaction-time labeling, LOSO splitting, synthetic EEG and epoch containers."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import ALERT, FATIGUE, EpochSet
from .errors import FormatError, NotEnoughSubjects, ShapeError, SubjectTooSparse

EXCLUDED = -1
LABEL_TEXT = {ALERT: "alert", FATIGUE: "fatigue", EXCLUDED: "excluded"}

ALERT_FACTOR = 1.5
FATIGUE_FACTOR = 2.5
MIN_TRIALS = 20


# ---------------------------------------------------------------------------
# Reaction-time labeling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RtTrialRecord:
    subject_id: int
    deviation_onset_s: float
    response_onset_s: float

    def __post_init__(self):
        if not self.response_onset_s > self.deviation_onset_s:
            raise ValueError(
                f"response onset {self.response_onset_s} must follow deviation onset "
                f"{self.deviation_onset_s}")

    @property
    def local_rt_s(self) -> float:
        return self.response_onset_s - self.deviation_onset_s


@dataclass
class LabelingResult:
    labels: np.ndarray      # ALERT, FATIGUE or EXCLUDED per trial, input order
    local_rt_s: np.ndarray
    global_rt_s: np.ndarray
    alert_rt_s: np.ndarray  # the subject's alert-RT, repeated per trial

    def counts(self) -> dict:
        return {LABEL_TEXT[k]: int(np.sum(self.labels == k)) for k in LABEL_TEXT}


def label_trials(trials, window_s: float = 90.0, min_trials: int = MIN_TRIALS) -> LabelingResult:
    """Label trials as alert / fatigue / excluded from their reaction times.

    Per subject, the alert-RT is the 5th percentile (linear interpolation) of
    the local RTs. A trial's global RT is the mean local RT over trials of the
    same subject whose deviation onset lies in ``[onset - window_s, onset]``.
    Alert needs both RTs below 1.5 x alert-RT, fatigue both above 2.5 x
    alert-RT; everything else is excluded.
    """
    trials = list(trials)
    n = len(trials)
    subj = np.array([t.subject_id for t in trials], dtype=np.int64)
    onset = np.array([t.deviation_onset_s for t in trials], dtype=np.float64)
    local = np.array([t.local_rt_s for t in trials], dtype=np.float64)
    glob = np.empty(n)
    alert = np.empty(n)

    for s in np.unique(subj):
        idx = np.flatnonzero(subj == s)
        if idx.size < min_trials:
            raise SubjectTooSparse(f"subject {s} has {idx.size} trials; need {min_trials}")
        alert[idx] = np.percentile(local[idx], 5)
        for i in idx:
            in_win = idx[(onset[idx] <= onset[i]) & (onset[idx] >= onset[i] - window_s)]
            glob[i] = local[in_win].mean() if in_win.size else local[i]

    labels = np.full(n, EXCLUDED, dtype=np.int64)
    labels[(local < ALERT_FACTOR * alert) & (glob < ALERT_FACTOR * alert)] = ALERT
    labels[(local > FATIGUE_FACTOR * alert) & (glob > FATIGUE_FACTOR * alert)] = FATIGUE
    return LabelingResult(labels, local, glob, alert)


def read_rt_csv(path) -> list[RtTrialRecord]:
    """Read ``subject,deviation_onset_s,response_onset_s`` rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["subject", "deviation_onset_s", "response_onset_s"]
        if header is None or [h.strip() for h in header] != expected:
            raise FormatError(f"{path}: header must be {','.join(expected)}", line=1)
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append(RtTrialRecord(int(row[0]), float(row[1]), float(row[2])))
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}: {exc}", line=lineno) from exc
    return out


def write_labels_csv(path, trials, result: LabelingResult, meta: dict | None = None):
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["subject", "deviation_onset_s", "response_onset_s", "local_rt_s",
                    "global_rt_s", "alert_rt_s", "label"])
        for t, loc, g, a, lab in zip(trials, result.local_rt_s, result.global_rt_s,
                                     result.alert_rt_s, result.labels):
            w.writerow([t.subject_id, repr(t.deviation_onset_s), repr(t.response_onset_s),
                        repr(float(loc)), repr(float(g)), repr(float(a)), LABEL_TEXT[int(lab)]])


# ---------------------------------------------------------------------------
# Leave-one-subject-out
# ---------------------------------------------------------------------------

def loso_splits(dataset: EpochSet) -> list[tuple[EpochSet, EpochSet]]:
    """One (train, test) pair per subject, in order of first appearance."""
    subjects = dataset.subject_ids()
    if len(subjects) < 2:
        raise NotEnoughSubjects(f"LOSO needs at least 2 subjects, got {len(subjects)}")
    folds = []
    for s in subjects:
        test = dataset.subjects == s
        folds.append((dataset.subset(~test), dataset.subset(test)))
    return folds


# ---------------------------------------------------------------------------
# Synthetic EEG
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a labeled synthetic EEG set.

    Fatigue epochs carry strong theta and alpha rhythms and a weak beta
    rhythm; alert epochs the reverse. ``subject_gain_sigma`` (log-normal
    scale) and ``subject_offset_sigma`` (per-channel baseline) model
    between-subject shifts; setting both to 0 disables them.
    """

    subjects: int = 3
    epochs_per_class: int = 40
    channels: int = 8
    n_times: int = 384
    sample_rate_hz: float = 128.0
    theta_hz: float = 6.0
    alpha_hz: float = 10.0
    beta_hz: float = 20.0
    strong_amplitude: float = 1.0
    weak_amplitude: float = 0.3
    freq_jitter_hz: float = 0.5
    subject_gain_sigma: float = 0.3
    subject_offset_sigma: float = 0.5
    noise_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("subjects", "epochs_per_class", "channels", "n_times"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.sample_rate_hz <= 0 or self.noise_sigma < 0:
            raise ValueError("sample rate must be positive and noise_sigma non-negative")


def generate_synthetic(spec: SyntheticSpec) -> EpochSet:
    """Deterministic labeled EpochSet; exactly balanced per subject."""
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.n_times) / spec.sample_rate_hz
    c = spec.channels
    # fixed scalp patterns per rhythm
    patterns = rng.uniform(0.5, 1.0, size=(3, c))
    freqs = np.array([spec.theta_hz, spec.alpha_hz, spec.beta_hz])
    amps = {
        FATIGUE: np.array([spec.strong_amplitude, spec.strong_amplitude, spec.weak_amplitude]),
        ALERT: np.array([spec.weak_amplitude, spec.weak_amplitude, spec.strong_amplitude]),
    }

    data, subjects, labels = [], [], []
    for s in range(spec.subjects):
        gain = np.exp(rng.normal(0.0, spec.subject_gain_sigma)) if spec.subject_gain_sigma else 1.0
        offset = rng.normal(0.0, spec.subject_offset_sigma, size=(c, 1)) \
            if spec.subject_offset_sigma else np.zeros((c, 1))
        for i in range(2 * spec.epochs_per_class):
            label = ALERT if i % 2 == 0 else FATIGUE
            f = freqs + rng.uniform(-spec.freq_jitter_hz, spec.freq_jitter_hz, size=3)
            phase = rng.uniform(0, 2 * np.pi, size=(3, c))
            waves = np.sin(2 * np.pi * f[:, None, None] * t[None, None, :] + phase[:, :, None])
            x = np.einsum("b,bc,bct->ct", amps[label], patterns, waves)
            if spec.noise_sigma:
                x = x + rng.normal(0.0, spec.noise_sigma, size=x.shape)
            data.append(gain * x + offset)
            subjects.append(s + 1)
            labels.append(label)
    meta = {"synthetic": asdict(spec)}
    return EpochSet(np.stack(data), subjects, labels, spec.sample_rate_hz, meta)


# ---------------------------------------------------------------------------
# Epoch container files
# ---------------------------------------------------------------------------

MAGIC = "eeg-ensemble-epochs"
FORMAT_VERSION = 1
PAYLOAD = "payload.f64"
MANIFEST = "manifest"


def save_epochs(path, epochs: EpochSet, format: str = "container"):
    """Write ``epochs`` to disk.

    ``container`` is a directory holding a text ``manifest`` and a flat
    little-endian float64 ``payload.f64`` of shape (N, C, T) in row-major
    order. ``npz`` writes a single numpy archive.
    """
    path = Path(path)
    n, c, t = epochs.data.shape
    if format == "npz":
        with open(path, "wb") as fh:
            np.savez(fh, data=epochs.data, subjects=epochs.subjects, labels=epochs.labels,
                     sample_rate_hz=np.float64(epochs.sample_rate_hz),
                     meta=np.array(json.dumps(epochs.meta, sort_keys=True)))
        return
    if format != "container":
        raise ValueError(f"unknown format {format!r}")
    path.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        f"channels {c}",
        f"times {t}",
        f"rate {float(epochs.sample_rate_hz)!r}",
        f"count {n}",
        f"meta {json.dumps(epochs.meta, sort_keys=True)}",
        "# index subject label channels times",
    ]
    lines += [f"{i} {int(s)} {int(lab)} {c} {t}"
              for i, (s, lab) in enumerate(zip(epochs.subjects, epochs.labels))]
    (path / MANIFEST).write_text("\n".join(lines) + "\n")
    epochs.data.astype("<f8").tofile(path / PAYLOAD)


def _header_value(lines, lineno, key, cast):
    if lineno >= len(lines):
        raise FormatError(f"missing {key!r} header", line=lineno + 1)
    parts = lines[lineno].split(None, 1)
    if len(parts) != 2 or parts[0] != key:
        raise FormatError(f"expected {key!r} header, got {lines[lineno]!r}", line=lineno + 1)
    try:
        return cast(parts[1])
    except ValueError as exc:
        raise FormatError(f"bad {key!r} value {parts[1]!r}", line=lineno + 1) from exc


def load_epochs(path, format: str = "container") -> EpochSet:
    """Read epochs written by :func:`save_epochs`."""
    path = Path(path)
    if format == "npz":
        with np.load(path, allow_pickle=False) as z:
            return EpochSet(z["data"], z["subjects"], z["labels"], float(z["sample_rate_hz"]),
                            json.loads(str(z["meta"])))
    if format != "container":
        raise ValueError(f"unknown format {format!r}")
    manifest = path / MANIFEST if path.is_dir() else path
    lines = manifest.read_text().splitlines()
    if not lines or not lines[0].strip():
        raise FormatError(f"{manifest}: empty manifest", line=1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise FormatError(f"{manifest}: not an epoch container", line=1)
    if head[1] != str(FORMAT_VERSION):
        raise FormatError(f"{manifest}: unsupported version {head[1]}", line=1)
    c = _header_value(lines, 1, "channels", int)
    t = _header_value(lines, 2, "times", int)
    rate = _header_value(lines, 3, "rate", float)
    n = _header_value(lines, 4, "count", int)
    meta = _header_value(lines, 5, "meta", json.loads)

    rows = [(k, ln) for k, ln in enumerate(lines[6:], start=7)
            if ln.strip() and not ln.lstrip().startswith("#")]
    if len(rows) != n:
        raise FormatError(f"{manifest}: header says {n} epochs, found {len(rows)} lines")
    subjects = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    for i, (lineno, ln) in enumerate(rows):
        parts = ln.split()
        if len(parts) != 5:
            raise FormatError(f"{manifest}: expected 5 fields, got {len(parts)}", line=lineno)
        try:
            idx, s, lab, ec, et = (int(p) for p in parts)
        except ValueError as exc:
            raise FormatError(f"{manifest}: non-integer field", line=lineno) from exc
        if idx != i:
            raise FormatError(f"{manifest}: epoch index {idx} out of order", line=lineno)
        if (ec, et) != (c, t):
            raise ShapeError(f"epoch {i} has shape ({ec}, {et}); container shape is ({c}, {t})")
        subjects[i], labels[i] = s, lab

    payload = manifest.parent / PAYLOAD
    raw = np.fromfile(payload, dtype="<f8")
    if raw.size != n * c * t:
        raise ShapeError(f"{payload}: {raw.size} values, expected {n} x {c} x {t}")
    return EpochSet(raw.reshape(n, c, t).astype(np.float64), subjects, labels, rate, meta)
