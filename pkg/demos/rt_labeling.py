"""Turning lane-departure reaction times into alert and fatigue labels.

A simulated driver responds quickly for the first half of a session and then
slows down. Each trial's own reaction time and the 90 s average around it
are compared with the driver's fast baseline; trials that fall between the
two thresholds are dropped.

    python demos/rt_labeling.py
"""
import numpy as np

from eeg_ensemble.data import EXCLUDED, RtTrialRecord, label_trials
from eeg_ensemble.core import ALERT, FATIGUE


def session(rng, n=120, subject=1):
    onsets = np.cumsum(rng.uniform(5, 10, n))
    # drowsiness builds up smoothly after the first third
    drift = np.clip((np.arange(n) - n / 3) / (n / 3), 0, 1)
    rts = 0.6 + 2.0 * drift + rng.gamma(2.0, 0.05, n)
    return [RtTrialRecord(subject, t, t + rt) for t, rt in zip(onsets, rts)]


def main():
    rng = np.random.default_rng(0)
    result = label_trials(session(rng))
    print(f"alert-RT (5th percentile): {result.alert_rt_s[0]:.3f} s")
    print("counts:", result.counts())
    marks = {ALERT: "a", FATIGUE: "F", EXCLUDED: "."}
    print("timeline:", "".join(marks[int(k)] for k in result.labels))


if __name__ == "__main__":
    main()
