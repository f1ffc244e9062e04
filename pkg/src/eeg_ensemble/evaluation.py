"""LOSO experiments, classification metrics and the paired Wilcoxon test.

Alert (label 0) is the positive class in every metric.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ALERT, FATIGUE, EpochSet
from .decomposition import DecompositionConfig, decompose_epochs
from .ensemble import EnsembleModel, TrainConfig, predict_labels, train_ensemble, trunk_probabilities
from .errors import NotEnoughSubjects, UndefinedTest
from .network import TARGET_EVAL, TrunkConfig


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def confusion_counts(y_true, y_pred) -> dict:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return {
        "tp": int(np.sum((y_pred == ALERT) & (y_true == ALERT))),
        "tn": int(np.sum((y_pred == FATIGUE) & (y_true == FATIGUE))),
        "fp": int(np.sum((y_pred == ALERT) & (y_true == FATIGUE))),
        "fn": int(np.sum((y_pred == FATIGUE) & (y_true == ALERT))),
    }


def _ratio(num, den):
    # undefined ratios (empty denominator) report as 0
    return num / den if den else 0.0


def scores_from_counts(tp, tn, fp, fn) -> dict:
    precision = _ratio(tp, tp + fp)
    sensitivity = _ratio(tp, tp + fn)
    return {
        "accuracy": _ratio(tp + tn, tp + tn + fp + fn),
        "precision": precision,
        "sensitivity": sensitivity,
        "specificity": _ratio(tn, tn + fp),
        "f1": _ratio(2 * precision * sensitivity, precision + sensitivity),
    }


@dataclass
class SubjectResult:
    subject: int
    accuracy: float
    tp: int
    tn: int
    fp: int
    fn: int
    seed: int = 0
    target_fallback: bool = False
    trunk_accuracy: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class MetricsReport:
    subjects: list
    aggregate: dict
    meta: dict
    macro: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict, compare=False)

    @property
    def avg_accuracy(self) -> float:
        return self.aggregate["avg_accuracy"]

    def to_dict(self) -> dict:
        """Everything except wall-clock timing, so reruns serialize identically."""
        return {"subjects": [asdict(s) for s in self.subjects], "aggregate": self.aggregate,
                "macro": self.macro, "meta": self.meta}

    def best_trunk_avg_accuracy(self) -> float | None:
        """Highest LOSO average accuracy reached by any single trunk."""
        if not self.subjects or not self.subjects[0].trunk_accuracy:
            return None
        per_trunk = np.array([s.trunk_accuracy for s in self.subjects])
        return float(per_trunk.mean(axis=0).max())

    def text_table(self) -> str:
        lines = [f"{'subject':>8} {'acc':>7} {'TP':>5} {'TN':>5} {'FP':>5} {'FN':>5}"]
        for s in self.subjects:
            flag = " *" if s.target_fallback else ""
            lines.append(f"{s.subject:>8} {100 * s.accuracy:7.2f} {s.tp:5d} {s.tn:5d} "
                         f"{s.fp:5d} {s.fn:5d}{flag}")
        a = self.aggregate
        lines.append(f"{'avg':>8} {100 * a['avg_accuracy']:7.2f}")
        lines.append("pooled  precision {:.4f}  sensitivity {:.4f}  specificity {:.4f}  f1 {:.4f}"
                     .format(a["precision"], a["sensitivity"], a["specificity"], a["f1"]))
        if any(s.target_fallback for s in self.subjects):
            lines.append("* target batch too small; running statistics used")
        return "\n".join(lines)

    def key_values(self) -> str:
        out = []
        for k, v in sorted(self.aggregate.items()):
            out.append(f"aggregate.{k}={v!r}")
        for k, v in sorted(self.macro.items()):
            out.append(f"macro.{k}={v!r}")
        for s in self.subjects:
            for k in ("accuracy", "tp", "tn", "fp", "fn", "seed"):
                out.append(f"subject.{s.subject}.{k}={getattr(s, k)!r}")
        out.append(f"meta={json.dumps(self.meta, sort_keys=True)}")
        return "\n".join(out) + "\n"


def build_report(subject_results: list, meta: dict) -> MetricsReport:
    """Aggregate per-subject results: pooled counts plus the mean of per-subject accuracy."""
    pooled = {k: sum(getattr(s, k) for s in subject_results) for k in ("tp", "tn", "fp", "fn")}
    agg = scores_from_counts(**pooled)
    agg.update(pooled)
    agg["pooled_accuracy"] = agg.pop("accuracy")
    agg["avg_accuracy"] = float(np.mean([s.accuracy for s in subject_results]))
    per = [scores_from_counts(s.tp, s.tn, s.fp, s.fn) for s in subject_results]
    macro = {k: float(np.mean([p[k] for p in per])) for k in ("precision", "sensitivity",
                                                              "specificity", "f1")}
    return MetricsReport(list(subject_results), agg, meta, macro)


def report_from_predictions(subjects, y_true, y_pred, meta=None) -> MetricsReport:
    """Report for precomputed predictions, one subject per LOSO fold (ascending IDs)."""
    subjects = np.asarray(subjects)
    results = []
    for s in np.unique(subjects):
        m = subjects == s
        c = confusion_counts(np.asarray(y_true)[m], np.asarray(y_pred)[m])
        results.append(SubjectResult(int(s), scores_from_counts(**c)["accuracy"], **c))
    return build_report(results, meta or {})


# ---------------------------------------------------------------------------
# LOSO driver
# ---------------------------------------------------------------------------

def _run_fold(args):
    (fold, subject, stacks, labels, test_mask, mode, train_cfg, trunk_cfg, decomposition,
     checkpoint_dir) = args
    seed = train_cfg.seed + fold
    cfg = TrainConfig(train_cfg.epochs, train_cfg.batch_size, train_cfg.lr, train_cfg.beta1,
                      train_cfg.beta2, seed)
    _, d, c, t = stacks.shape
    model = EnsembleModel.build(d, c, t, mode, trunk_cfg, seed=seed, decomposition=decomposition)
    train_ensemble(model, stacks[~test_mask], labels[~test_mask], cfg)
    test = stacks[test_mask]
    y = labels[test_mask]
    pred = model.predict(test, TARGET_EVAL)
    fallback = any(tr.used_fallback for tr in model.trunks)
    trunk_acc = [float(np.mean(predict_labels(p) == y))
                 for p in trunk_probabilities(model, test, TARGET_EVAL)]
    if checkpoint_dir is not None:
        model.save(f"{checkpoint_dir}/fold_{fold:02d}_subject_{subject}")
    counts = confusion_counts(y, pred)
    return SubjectResult(subject, float(np.mean(pred == y)), seed=seed, target_fallback=fallback,
                         trunk_accuracy=trunk_acc, **counts)


def run_loso(dataset: EpochSet, decomposition: DecompositionConfig, mode: str = "e2",
             train_config: TrainConfig = TrainConfig(), trunk_config: TrunkConfig = TrunkConfig(),
             workers: int = 1, stacks=None, checkpoint_dir=None) -> MetricsReport:
    """Leave-one-subject-out evaluation of one decomposition + ensemble setting.

    Every epoch is decomposed once up front (the decomposition is per epoch
    and label-free, so this leaks nothing across folds). Fold ``i`` trains
    with seed ``train_config.seed + i`` and evaluates its held-out subject in
    target-eval phase, i.e. with CSBN statistics taken from that subject.

    Parameters
    ----------
    stacks : ndarray, optional
        Precomputed ``(N, D, C, T)`` components for ``dataset``.
    """
    subjects = dataset.subject_ids()
    if len(subjects) < 2:
        raise NotEnoughSubjects(f"LOSO needs at least 2 subjects, got {len(subjects)}")
    t0 = time.perf_counter()
    if stacks is None:
        stacks, info = decompose_epochs(dataset, decomposition, workers=workers)
    else:
        info = {"requested": decomposition.n_components, "effective": stacks.shape[1],
                "clamped": stacks.shape[1] < decomposition.n_components}
    t_dec = time.perf_counter() - t0

    jobs = [(i, s, stacks, dataset.labels, dataset.subjects == s, mode, train_config,
             trunk_config, decomposition, checkpoint_dir) for i, s in enumerate(subjects)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_fold, jobs))
    else:
        results = []
        for i, job in enumerate(jobs):
            try:
                results.append(_run_fold(job))
            except Exception as exc:
                raise RuntimeError(f"LOSO fold {i} (subject {subjects[i]}) failed: {exc}") from exc

    meta = {
        "method": decomposition.method,
        "decomposition": decomposition.to_dict(),
        "requested_components": info["requested"],
        "n_components": info["effective"],
        "clamped": info["clamped"],
        "mode": mode,
        "train": asdict(train_config),
        "trunk": asdict(trunk_config),
        "seed": train_config.seed,
    }
    report = build_report(results, meta)
    report.timing = {"decompose_s": t_dec, "total_s": time.perf_counter() - t0}
    return report


# ---------------------------------------------------------------------------
# Component-count sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    requested: int
    effective: int
    clamped: bool
    avg_accuracy: float


def sensitivity_sweep(dataset: EpochSet, method: str, d_range, mode: str = "e2",
                      train_config: TrainConfig = TrainConfig(),
                      trunk_config: TrunkConfig = TrunkConfig(), params=None,
                      workers: int = 1) -> list[SweepRow]:
    """Run LOSO for every requested D; clamped requests reuse the clamped result."""
    rows = []
    done = {}
    for d in d_range:
        cfg = DecompositionConfig(method, d, params or {})
        stacks, info = decompose_epochs(dataset, cfg, workers=workers)
        eff = info["effective"]
        if eff not in done:
            eff_cfg = DecompositionConfig(method, eff, params or {})
            done[eff] = run_loso(dataset, eff_cfg, mode, train_config, trunk_config,
                                 stacks=stacks).avg_accuracy
        rows.append(SweepRow(d, eff, eff < d, done[eff]))
    return rows


def write_sweep_grid(path, results: dict, d_values, meta: dict | None = None):
    """Methods as rows, requested D as columns; clamped cells are left blank."""
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["method"] + [str(d) for d in d_values])
        for method, rows in results.items():
            by_d = {r.requested: r for r in rows}
            cells = []
            for d in d_values:
                r = by_d.get(d)
                cells.append("" if r is None or r.clamped else f"{100 * r.avg_accuracy:.2f}")
            w.writerow([method.upper()] + cells)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test
# ---------------------------------------------------------------------------

def _signed_rank_null(doubled_ranks) -> np.ndarray:
    """Exact null distribution of the (doubled) positive-rank sum."""
    total = int(sum(doubled_ranks))
    dist = np.zeros(total + 1)
    dist[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[:total + 1 - r]
        dist = 0.5 * (dist + shifted)
    return dist


def wilcoxon_signed_rank(a, b, alternative: str = "greater") -> float:
    """Exact p-value of the paired Wilcoxon signed-rank test.

    Zero differences are dropped and tied magnitudes get average ranks; the
    null distribution of the positive-rank sum is built exactly by dynamic
    programming over all 2**n sign assignments. ``alternative='greater'``
    tests whether ``a`` tends to exceed ``b``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-D and equally long")
    if a.size < 5:
        raise ValueError("need at least 5 pairs")
    diff = a - b
    diff = diff[diff != 0]
    if diff.size == 0:
        raise UndefinedTest("all paired differences are zero")
    from scipy.stats import rankdata

    doubled = np.rint(2 * rankdata(np.abs(diff))).astype(np.int64)
    w_plus = int(doubled[diff > 0].sum())
    dist = _signed_rank_null(doubled)
    if alternative == "greater":
        return float(dist[w_plus:].sum())
    if alternative == "less":
        return float(dist[:w_plus + 1].sum())
    if alternative == "two-sided":
        return float(min(1.0, 2 * min(dist[w_plus:].sum(), dist[:w_plus + 1].sum())))
    raise ValueError(f"unknown alternative {alternative!r}")
