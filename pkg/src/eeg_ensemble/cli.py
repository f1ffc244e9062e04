"""Decompose EEG epochs and evaluate component ensembles from the command line.

Subcommands: ``synth``, ``decompose``, ``loso``, ``sweep``, ``label`` and
``psd``. Exit status is 0 on success, 1 on a runtime failure and 2 on a
usage error. Defaults can be supplied through a ``key = value`` config file
(``--config``); flags given on the command line win. The default worker
count comes from ``EEG_ENSEMBLE_WORKERS`` or the number of CPUs.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .core import EpochSet, relative_l2
from .data import SyntheticSpec, generate_synthetic, label_trials, load_epochs, read_rt_csv, save_epochs, write_labels_csv
from .decomposition import METHODS, DecompositionConfig, decompose_epochs
from .ensemble import MODES, TrainConfig
from .errors import EEGEnsembleError
from .evaluation import run_loso, sensitivity_sweep, write_sweep_grid
from .features import write_feature_csv
from .network import TrunkConfig

WORKERS_ENV = "EEG_ENSEMBLE_WORKERS"


class UsageError(Exception):
    pass


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def d_range(text: str) -> list[int]:
    """``3:10`` (inclusive) or a comma list such as ``3,5,7``."""
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use LO:HI or a comma list")
    if not values or min(values) < 1 or max(values) > 16:
        raise argparse.ArgumentTypeError(f"range {text!r} must be non-empty within 1..16")
    return values


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return positive_int(env)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{WORKERS_ENV}: {exc}")
    return os.cpu_count() or 1


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_training(p):
    g = p.add_argument_group("training")
    g.add_argument("--mode", choices=MODES, default="e2",
                   help="e1: joint training, averaged scores; e2: independent trunks, soft vote")
    g.add_argument("--epochs", type=positive_int, default=50, help="training epochs per fold")
    g.add_argument("--batch", type=positive_int, default=50, help="minibatch size")
    g.add_argument("--lr", type=positive_float, default=1e-3, help="Adam learning rate")
    g.add_argument("--seed", type=int, default=0, help="base seed; fold i uses seed + i")
    t = p.add_argument_group("trunk")
    t.add_argument("--spatial", type=positive_int, default=8, help="spatial filters")
    t.add_argument("--temporal", type=positive_int, default=8, help="temporal filters")
    t.add_argument("--kernel", type=positive_int, default=16, help="temporal kernel length")
    t.add_argument("--stride", type=positive_int, default=8, help="temporal stride")
    t.add_argument("--pool", type=positive_int, default=4, help="average-pool width")
    t.add_argument("--activation", choices=("relu", "elu"), default="relu")


def _add_method(p, components=True):
    p.add_argument("--method", choices=METHODS, default="dwt", help="decomposition method")
    if components:
        p.add_argument("--components", type=positive_int, default=None,
                       help="number of components D (default: per-method default)")


def _add_input(p):
    p.add_argument("--input", required=True, help="epoch container directory (or .npz)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eeg-ensemble", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--config", default=argparse.SUPPRESS,
                        help="key = value file supplying flag defaults")
    parser.add_argument("--workers", type=positive_int, default=None,
                        help=f"parallel processes [default: ${WORKERS_ENV} or the CPU count]"
                             "%(default).0s")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("synth", help="generate a labeled synthetic EEG set", formatter_class=fmt)
    p.add_argument("--out", required=True, help="output container directory")
    p.add_argument("--subjects", type=positive_int, default=3)
    p.add_argument("--epochs", type=positive_int, default=40, help="epochs per class per subject")
    p.add_argument("--channels", type=positive_int, default=8)
    p.add_argument("--times", type=positive_int, default=384, help="samples per epoch")
    p.add_argument("--rate", type=positive_float, default=128.0, help="sampling rate in Hz")
    p.add_argument("--noise", type=float, default=0.5, help="white noise standard deviation")
    p.add_argument("--no-shift", action="store_true", help="disable between-subject shifts")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("decompose", help="split every epoch into D component containers",
                       formatter_class=fmt)
    _add_input(p)
    _add_method(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("loso", help="leave-one-subject-out evaluation", formatter_class=fmt)
    _add_input(p)
    _add_method(p)
    _add_training(p)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--checkpoints", action="store_true", help="save each fold's trained ensemble")
    p.add_argument("--macro", action="store_true",
                   help="also print subject-averaged (macro) precision/sensitivity/specificity/F1")

    p = sub.add_parser("sweep", help="LOSO accuracy across component counts", formatter_class=fmt)
    _add_input(p)
    _add_method(p, components=False)
    p.add_argument("--range", dest="d_range", type=d_range, default=d_range("3:10"),
                   help="component counts, LO:HI inclusive or a comma list")
    _add_training(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("label", help="label trials from reaction times", formatter_class=fmt)
    p.add_argument("--rt", required=True, help="CSV with subject,deviation_onset_s,response_onset_s")
    p.add_argument("--window", type=positive_float, default=90.0, help="global-RT window in seconds")
    p.add_argument("--out", required=True, help="labeled CSV")

    p = sub.add_parser("psd", help="band-power features per epoch", formatter_class=fmt)
    _add_input(p)
    p.add_argument("--out", required=True, help="feature CSV")
    return parser


def _apply_config_file(parser, argv):
    """Re-seed subparser defaults from ``--config`` so that explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config_file(known.config)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    valid = {a.dest for sp in sub_action.choices.values() for a in sp._actions} | {"workers"}
    unknown = set(values) - valid
    if unknown:
        raise UsageError(f"{known.config}: unknown keys {sorted(unknown)}")
    if "workers" in values:
        parser.set_defaults(workers=values.pop("workers"))
    for sp in sub_action.choices.values():
        dests = {a.dest: a for a in sp._actions}
        for k, v in values.items():
            a = dests.get(k)
            if a is None:
                continue
            if isinstance(a, argparse._StoreTrueAction):
                v = v.lower() in ("1", "true", "yes", "on")
            sp.set_defaults(**{k: v})
            a.required = False


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def effective_config(args) -> dict:
    # worker count changes speed, never results, so it stays out of artifacts
    cfg = {k: v for k, v in vars(args).items() if k not in ("config", "workers")}
    return json.loads(json.dumps(cfg, default=str))


def overrides(args) -> list[str]:
    """``name=value (default d)`` for every optional flag that differs from its built-in default."""
    parser = build_parser()
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    lines = []
    for a in sub_action.choices[args.command]._actions:
        if a.required or a.default == argparse.SUPPRESS or not hasattr(args, a.dest):
            continue
        value = getattr(args, a.dest)
        if value != a.default:
            lines.append(f"{a.dest}={value!r} (default {a.default!r})")
    return lines


def _load(path) -> EpochSet:
    path = Path(path)
    return load_epochs(path, "npz" if path.suffix == ".npz" else "container")


def _decomposition(args) -> DecompositionConfig:
    from .decomposition import DEFAULT_COMPONENTS

    d = args.components if args.components is not None else DEFAULT_COMPONENTS[args.method]
    args.components = d
    return DecompositionConfig(args.method, d)


def _trainer(args):
    train = TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr, seed=args.seed)
    trunk = TrunkConfig(n_spatial=args.spatial, n_temporal=args.temporal, kernel=args.kernel,
                        stride=args.stride, pool=args.pool, activation=args.activation)
    return train, trunk


def cmd_synth(args, out):
    spec = SyntheticSpec(subjects=args.subjects, epochs_per_class=args.epochs,
                         channels=args.channels, n_times=args.times, sample_rate_hz=args.rate,
                         noise_sigma=args.noise, seed=args.seed,
                         **({"subject_gain_sigma": 0.0, "subject_offset_sigma": 0.0}
                            if args.no_shift else {}))
    ds = generate_synthetic(spec)
    ds.meta["config"] = effective_config(args)
    save_epochs(args.out, ds)
    print(f"wrote {len(ds)} epochs ({ds.data.shape[1]} x {ds.data.shape[2]}) to {args.out}", file=out)


def cmd_decompose(args, out):
    ds = _load(args.input)
    cfg = _decomposition(args)
    stacks, info = decompose_epochs(ds, cfg, workers=args.workers)
    target = Path(args.out)
    target.mkdir(parents=True, exist_ok=True)
    config = effective_config(args)
    for d in range(stacks.shape[1]):
        meta = dict(ds.meta, component=d, decomposition=cfg.to_dict(), config=config)
        save_epochs(target / f"component_{d:02d}",
                    EpochSet(stacks[:, d], ds.subjects, ds.labels, ds.sample_rate_hz, meta))
    errors = np.array([relative_l2(stacks[i].sum(axis=0), ds.data[i]) for i in range(len(ds))])
    lines = [
        f"config {json.dumps(config, sort_keys=True)}",
        f"method {cfg.method}",
        f"requested_components {info['requested']}",
        f"effective_components {info['effective']}",
        f"clamped {str(info['clamped']).lower()}",
        f"epochs {len(ds)}",
        f"reconstruction_error_max {errors.max():.3e}",
        f"reconstruction_error_mean {errors.mean():.3e}",
    ]
    (target / "summary.txt").write_text("\n".join(lines) + "\n")
    if info["clamped"]:
        print(f"note: {cfg.method} yields at most {info['effective']} components here; "
              f"requested {info['requested']}", file=out)
    print("\n".join(lines[1:]), file=out)


def cmd_loso(args, out):
    ds = _load(args.input)
    cfg = _decomposition(args)
    train, trunk = _trainer(args)
    target = Path(args.out)
    target.mkdir(parents=True, exist_ok=True)
    ckpt = None
    if args.checkpoints:
        ckpt = target / "checkpoints"
        ckpt.mkdir(exist_ok=True)
    report = run_loso(ds, cfg, args.mode, train, trunk, workers=args.workers, checkpoint_dir=ckpt)
    report.meta["config"] = effective_config(args)
    table = report.text_table()
    if args.macro:
        m = report.macro
        table += ("\nmacro   precision {:.4f}  sensitivity {:.4f}  specificity {:.4f}  f1 {:.4f}"
                  .format(m["precision"], m["sensitivity"], m["specificity"], m["f1"]))
    (target / "report.txt").write_text(table + "\n")
    (target / "report.kv").write_text(report.key_values())
    (target / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    with open(target / "per_subject.csv", "w", newline="") as fh:
        fh.write("# " + json.dumps(report.meta["config"], sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["subject", "accuracy"] + [f"trunk_{d}" for d in
                                              range(len(report.subjects[0].trunk_accuracy))])
        for s in report.subjects:
            w.writerow([s.subject, f"{s.accuracy:.6f}"] + [f"{a:.6f}" for a in s.trunk_accuracy])
    print(table, file=out)
    print(f"elapsed {report.timing['total_s']:.1f} s", file=out)


def cmd_sweep(args, out):
    ds = _load(args.input)
    train, trunk = _trainer(args)
    rows = sensitivity_sweep(ds, args.method, args.d_range, args.mode, train, trunk,
                             workers=args.workers)
    target = Path(args.out)
    target.mkdir(parents=True, exist_ok=True)
    config = effective_config(args)
    write_sweep_grid(target / "sweep.csv", {args.method: rows}, args.d_range, meta=config)
    series = {"config": config, "method": args.method, "rows": [asdict(r) for r in rows]}
    (target / "accuracy_vs_d.json").write_text(json.dumps(series, indent=2, sort_keys=True))
    print(f"{'D':>3} {'used':>4} {'avg acc':>8}", file=out)
    for r in rows:
        cell = "clamped" if r.clamped else f"{100 * r.avg_accuracy:8.2f}"
        print(f"{r.requested:>3} {r.effective:>4} {cell:>8}", file=out)


def cmd_label(args, out):
    trials = read_rt_csv(args.rt)
    result = label_trials(trials, window_s=args.window)
    write_labels_csv(args.out, trials, result, meta=effective_config(args))
    counts = result.counts()
    print(" ".join(f"{k}={v}" for k, v in counts.items()), file=out)


def cmd_psd(args, out):
    ds = _load(args.input)
    write_feature_csv(args.out, ds, meta=effective_config(args))
    print(f"wrote {len(ds)} x {4 * ds.data.shape[1]} band powers to {args.out}", file=out)


COMMANDS = {"synth": cmd_synth, "decompose": cmd_decompose, "loso": cmd_loso,
            "sweep": cmd_sweep, "label": cmd_label, "psd": cmd_psd}


def main(argv=None, out=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if args.workers is None:
            args.workers = default_workers()
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"eeg-ensemble: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    for line in overrides(args):
        print(f"override {line}", file=out)
    try:
        COMMANDS[args.command](args, out)
    except (EEGEnsembleError, OSError, ValueError) as exc:
        print(f"eeg-ensemble {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
