"""Command-line entry point: ``ccmn <subcommand> ...``.

Commands only read flags (never environment variables), so a run manifest
holding the flag list is enough to repeat a training run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace

from .core import CCMNError, NoiseSpec, ShapeError, SplitSpec, split_dataset
from .correction import compute_bound_constants
from .dataio import generate_synthetic, parse_multilabel_svm, write_multilabel_svm
from .experiment import evaluate_model, run_experiment
from .metrics import METRIC_NAMES, average_precision_detail
from .model import forward, load_checkpoint, save_checkpoint
from .noise import inject_noise, read_noise_file, sample_noise_rates, write_noise_file
from .objective import OBJECTIVES, is_ranking
from .surrogate import KINDS, SurrogateLoss
from .trainer import DEFAULT_LR_GRID, SELECTION_MODES, TrainConfig, grid_select, write_history
from .verify import run_all

REPORT_SCHEMA = "ccmn-report/1"
MANIFEST_SCHEMA = "ccmn-manifest/1"


class UsageError(Exception):
    pass


def _lr_grid(text):
    try:
        grid = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("learning-rate grid must be comma-separated numbers")
    if not grid or any(not v > 0 for v in grid):
        raise argparse.ArgumentTypeError("learning rates must be positive")
    return grid


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _r6(x):
    return round(float(x), 6)


# ---------------------------------------------------------------------------


def cmd_generate(args):
    data = generate_synthetic(args.n, args.d, args.q, args.margin, args.seed)
    write_multilabel_svm(data, args.output)
    print("wrote %s (n=%d d=%d q=%d)" % (args.output, data.n, data.d, data.q))


def cmd_split(args):
    data = parse_multilabel_svm(args.input)
    spec = SplitSpec(args.train_fraction, args.test_fraction, args.validation_fraction, args.seed)
    parts = split_dataset(data, spec)
    for suffix, part in zip(("train", "test", "val"), parts):
        path = "%s.%s" % (args.prefix, suffix)
        write_multilabel_svm(part, path)
        print("wrote %s (n=%d)" % (path, part.n))


def cmd_inject_noise(args):
    data = parse_multilabel_svm(args.input)
    if args.mode == "explicit":
        if not args.rho_file:
            raise UsageError("--mode explicit requires --rho-file")
        spec = read_noise_file(args.rho_file)
    else:
        if args.rho_file:
            raise UsageError("--rho-file is only used with --mode explicit")
        spec = sample_noise_rates(args.mode, data.q, args.seed)
    if spec.q != data.q:
        raise UsageError("noise file covers %d labels but the dataset has %d" % (spec.q, data.q))
    write_multilabel_svm(inject_noise(data, spec, args.seed), args.output)
    write_noise_file(spec, args.output + ".noise")
    print("wrote %s and %s.noise" % (args.output, args.output))


def _train_flags(args):
    flags = [
        "--train", args.train, "--val", args.val,
        "--objective", args.objective, "--loss", args.loss, "--model", args.model,
        "--epochs", str(args.epochs), "--lr-grid", ",".join(repr(v) for v in args.lr_grid),
        "--l2", repr(args.l2), "--batch", str(args.batch), "--seed", str(args.seed),
        "--hidden", str(args.hidden), "--clamp", repr(args.clamp), "--selection", args.selection,
        "--out", args.out,
    ]
    flags += ["--rho-zero"] if args.rho_zero else ["--noise", args.noise]
    if args.dummy_threshold:
        flags.append("--dummy-threshold")
    return flags


def cmd_train(args):
    if args.from_manifest:
        with open(args.from_manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
        flags = list(manifest["flags"])
        if args.out:
            flags[flags.index("--out") + 1] = args.out
        return main(["train"] + flags)
    missing = [f for f, v in (("--train", args.train), ("--val", args.val), ("--out", args.out)) if not v]
    if missing:
        raise UsageError("train requires %s" % ", ".join(missing))
    if args.rho_zero == bool(args.noise):
        raise UsageError("give exactly one of --noise FILE or --rho-zero")
    if args.dummy_threshold and not is_ranking(args.objective):
        raise UsageError("--dummy-threshold only applies to ranking objectives")
    train_data = parse_multilabel_svm(args.train)
    val_data = parse_multilabel_svm(args.val)
    if train_data.q != val_data.q or train_data.d != val_data.d:
        raise UsageError("train and validation files have different shapes")
    spec = NoiseSpec.zeros(train_data.q) if args.rho_zero else read_noise_file(args.noise)
    if spec.q != train_data.q:
        raise UsageError("noise file covers %d labels but the data has %d" % (spec.q, train_data.q))
    config = TrainConfig(
        objective=args.objective, loss=args.loss, architecture=args.model, epochs=args.epochs,
        learning_rate=args.lr_grid[0], lr_grid=args.lr_grid, l2=args.l2, batch_size=args.batch,
        dummy_threshold=args.dummy_threshold, seed=args.seed, hidden_units=args.hidden,
        clamp_bound=args.clamp, selection=args.selection,
    )
    grid = grid_select(train_data, val_data, config, spec)
    best = grid.best
    best.model.meta["learning_rate"] = best.config.learning_rate
    best.model.meta["best_epoch"] = best.best_epoch
    save_checkpoint(best.model, args.out)
    write_history(grid.runs, args.out + ".log.tsv")
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "flags": _train_flags(args),
        "config": config.to_dict(),
        "selected": {
            "learning_rate": best.config.learning_rate,
            "best_epoch": best.best_epoch,
            "best_val": best.best_val,
            "selection": best.selection,
        },
        "inputs": {
            "train": _sha256(args.train),
            "val": _sha256(args.val),
            "noise": None if args.rho_zero else _sha256(args.noise),
        },
        "noise": {"rho_pos": spec.rho_pos.tolist(), "rho_neg": spec.rho_neg.tolist()},
    }
    _dump_json(manifest, args.out + ".manifest.json")
    print(
        "selected lr=%g epoch=%d val=%.6f (%s)"
        % (best.config.learning_rate, best.best_epoch, best.best_val, best.selection)
    )


def build_report(model, data):
    if model.d != data.d:
        raise ShapeError("checkpoint expects %d features, test data has %d" % (model.d, data.d))
    q = model.n_outputs - (1 if model.meta.get("dummy_threshold") else 0)
    if q != data.q:
        raise ShapeError("checkpoint predicts %d labels, test data has %d" % (q, data.q))
    metrics = evaluate_model(model, data)
    spec = NoiseSpec(model.meta.get("rho_pos", [0.0] * q), model.meta.get("rho_neg", [0.0] * q))
    loss = SurrogateLoss(model.meta.get("loss", "square"), model.meta.get("clamp_bound", 10.0))
    bounds = compute_bound_constants(spec)
    F = forward(model, data.features)[:, :q]
    return {
        "schema": REPORT_SCHEMA,
        "metrics": {k: _r6(metrics[k]) for k in METRIC_NAMES},
        "diagnostics": {
            "mu_independent": _r6(bounds.mu_independent),
            "mu_dependent": _r6(bounds.mu_dependent),
            "kappa_max": _r6(bounds.kappa_max),
            "phi_bound": _r6(loss.bound()),
            "phi_lipschitz": _r6(loss.lipschitz()),
        },
        "dataset": {"n": data.n, "d": data.d, "q": data.q},
        "model": {
            "architecture": model.architecture,
            "objective": model.meta.get("objective"),
            "loss": loss.kind,
            "prediction": "dummy-threshold" if model.meta.get("dummy_threshold") else "sign",
        },
        "average_precision_skipped": average_precision_detail(F, data.labels).skipped,
    }


def cmd_evaluate(args):
    model = load_checkpoint(args.model)
    data = parse_multilabel_svm(args.test)
    report = build_report(model, data)
    if args.report:
        _dump_json(report, args.report)
    for name in METRIC_NAMES:
        print("%s\t%.6f" % (name, report["metrics"][name]))
    for name, value in report["diagnostics"].items():
        print("%s\t%.6f" % (name, value))


def cmd_verify(args):
    results = run_all(args.trials, args.max_q, args.seed, sign_error=args.inject_sign_error)
    ok = True
    for r in results:
        ok &= r.passed
        print("%-26s trials=%-5d worst=%.3e tol=%.0e %s"
              % (r.name, r.trials, r.worst, r.tolerance, "PASS" if r.passed else "FAIL"))
    print("verify: %s" % ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def cmd_experiment(args):
    if args.dummy_threshold and not is_ranking(args.objective):
        raise UsageError("--dummy-threshold only applies to ranking objectives")
    data = parse_multilabel_svm(args.input)
    config = TrainConfig(
        objective=args.objective, loss=args.loss, architecture=args.model, epochs=args.epochs,
        learning_rate=args.lr_grid[0], lr_grid=args.lr_grid, l2=args.l2, batch_size=args.batch,
        dummy_threshold=args.dummy_threshold, hidden_units=args.hidden, clamp_bound=args.clamp,
        selection=args.selection,
    )
    if args.mode == "explicit":
        if not args.rho_file:
            raise UsageError("--mode explicit requires --rho-file")
        noise = read_noise_file(args.rho_file)
    else:
        noise = args.mode
    seeds = range(args.first_seed, args.first_seed + args.repeats)
    report = run_experiment(data, config, noise, seeds)
    out = {
        "schema": REPORT_SCHEMA,
        "config": replace(config, seed=args.first_seed).to_dict(),
        "mode": args.mode,
        "summary": {
            k: {"mean": _r6(v["mean"]), "std": _r6(v["std"]), "values": [_r6(x) for x in v["values"]]}
            for k, v in report["summary"].items()
        },
        "runs": [
            {
                "seed": r["seed"],
                "learning_rate": r["learning_rate"],
                "best_epoch": r["best_epoch"],
                "metrics": {k: _r6(v) for k, v in r["metrics"].items()},
                "rho_pos": r["spec"].rho_pos.tolist(),
                "rho_neg": r["spec"].rho_neg.tolist(),
            }
            for r in report["runs"]
        ],
    }
    if args.report:
        _dump_json(out, args.report)
    for name in METRIC_NAMES:
        s = out["summary"][name]
        print("%s\t%.6f\t%.6f" % (name, s["mean"], s["std"]))


# ---------------------------------------------------------------------------


def _add_train_options(p):
    p.add_argument("--objective", choices=OBJECTIVES, default="hamming-corrected")
    p.add_argument("--loss", choices=KINDS, default="square")
    p.add_argument("--model", choices=("linear", "mlp"), default="linear")
    p.add_argument("--dummy-threshold", action="store_true")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr-grid", type=_lr_grid, default=DEFAULT_LR_GRID)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--clamp", type=float, default=10.0)
    p.add_argument("--selection", choices=SELECTION_MODES, default="auto")


def build_parser():
    parser = argparse.ArgumentParser(prog="ccmn", description="Learning under class-conditional multi-label noise.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic separable dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", help="split a dataset into PREFIX.train/.test/.val")
    p.add_argument("--input", required=True)
    p.add_argument("--prefix", required=True)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--validation-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("inject-noise", help="flip labels and record the noise rates")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=("ccmn", "pml", "explicit"), required=True)
    p.add_argument("--rho-file")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_inject_noise)

    p = sub.add_parser("train", help="train with learning-rate grid selection")
    p.add_argument("--train")
    p.add_argument("--val")
    p.add_argument("--noise")
    p.add_argument("--rho-zero", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--from-manifest", help="re-run the flags recorded in a manifest")
    _add_train_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a clean test file")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="run the exact unbiasedness self-checks")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--max-q", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-sign-error", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="repeat split/corrupt/train/evaluate over seeds")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("ccmn", "pml", "explicit", "none"), default="ccmn")
    p.add_argument("--rho-file")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--report")
    _add_train_options(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        code = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (CCMNError, OSError, ValueError) as exc:
        print("ccmn %s: error: %s" % (args.command, exc), file=sys.stderr)
        return 1
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
