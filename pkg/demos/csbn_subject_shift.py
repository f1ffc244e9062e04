"""Why the held-out subject's own batch statistics matter.

A single trunk is trained on two subjects. The third subject is then shown
with a much larger amplitude and a DC offset, a crude stand-in for a
different scalp and amplifier. Evaluating with the running (source)
statistics breaks down; recomputing the normalization from the target batch
restores the accuracy.

    python demos/csbn_subject_shift.py
"""
import numpy as np

from eeg_ensemble import SyntheticSpec, TrainConfig, Trunk, TrunkConfig, generate_synthetic
from eeg_ensemble.ensemble import predict_labels, train_trunk
from eeg_ensemble.network import SOURCE_EVAL, TARGET_EVAL, softmax


def accuracy(trunk, x, y, phase):
    return float(np.mean(predict_labels(softmax(trunk.forward(x, phase))) == y))


def main():
    data = generate_synthetic(SyntheticSpec(subjects=3, epochs_per_class=30, subject_gain_sigma=0,
                                            subject_offset_sigma=0, seed=1))
    train = data.subjects != 3
    test = ~train
    trunk = Trunk(data.data.shape[1], data.data.shape[2], TrunkConfig(), seed=0)
    train_trunk(trunk, data.data[train], data.labels[train], TrainConfig(epochs=20),
                np.random.default_rng(0))

    x, y = data.data[test], data.labels[test]
    shifted = 6.0 * x + 3.0
    print(f"{'held-out input':<22}{'source stats':>14}{'target stats':>14}")
    for name, inp in (("as recorded", x), ("gain x6, offset +3", shifted)):
        print(f"{name:<22}{accuracy(trunk, inp, y, SOURCE_EVAL):>14.1%}"
              f"{accuracy(trunk, inp, y, TARGET_EVAL):>14.1%}")


if __name__ == "__main__":
    main()
