"""Command-line entry point: ``coronet <subcommand> ...``."""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import data as D
from .errors import CoronetError, InputError
from .metrics import (confusion_from_predictions, fold_average, metrics_report,
                      parse_cm_csv, render_cm_csv)
from .model import (ArchitectureConfig, build_coronet, count_parameters, head_arity_in_file,
                    load_weights, predict, render_count_table, save_weights)
from .train import TrainConfig, fine_tune, freeze_backbone, fit, read_history_csv, write_history_csv

log = logging.getLogger("coronet")

WEIGHTS_FILE = "weights.bin"
HISTORY_FILE = "history.csv"


@contextlib.contextmanager
def staged_output(out_dir):
    """Yield a scratch directory; its files move into ``out_dir`` only if the
    block finishes without raising."""
    out = Path(out_dir)
    parent = out.parent if out.parent != Path("") else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".coronet-", dir=parent))
    try:
        yield tmp
        out.mkdir(parents=True, exist_ok=True)
        for f in sorted(tmp.iterdir()):
            os.replace(f, out / f.name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _scheme(args):
    return D.SCHEME_BY_ARITY[args.classes]


def _arch(args, num_classes=None):
    return ArchitectureConfig(variant=args.variant, input_height=args.input,
                              input_width=args.input,
                              num_classes=num_classes or args.classes)


def _train_config(args):
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch, epochs=args.epochs,
                       rng_seed=args.seed, freeze_backbone=getattr(args, "freeze_backbone", False))


def _parse_targets(text):
    if text == "min":
        return "min"
    targets = {}
    for part in text.split(","):
        name, _, count = part.partition("=")
        try:
            targets[D.ClassLabel(name.strip())] = int(count)
        except ValueError:
            raise InputError(f"bad --undersample entry {part!r}; use 'min' or Label=count,...")
    return targets


def _manifest(path, args):
    m = D.load_manifest(path)
    if getattr(args, "undersample", None):
        m = D.undersample(m, _parse_targets(args.undersample), args.seed)
    return D.merge_labels(m, _scheme(args))


def _images(manifest, args):
    return D.load_images(manifest, args.input, D.SCHEME_CLASSES[_scheme(args)])


def _write_cm(graph, params, x, y, classes, path):
    _, labels = predict(graph, params, x, batch_size=10)
    names = [c.value for c in classes]
    cm = confusion_from_predictions([names[i] for i in y], [names[i] for i in labels], names)
    Path(path).write_text(render_cm_csv(cm))
    return cm


def cmd_train(args):
    m = _manifest(args.manifest, args)
    x, y = _images(m, args)
    validation = None
    if args.val_manifest:
        validation = _images(D.merge_labels(D.load_manifest(args.val_manifest), _scheme(args)), args)
    graph, params = build_coronet(_arch(args), seed=args.seed)
    if args.weights:
        params = load_weights(graph, args.weights, params)
    if args.freeze_backbone:
        freeze_backbone(graph, params)
    with staged_output(args.out) as tmp:
        result = fit(graph, params, x, y, _train_config(args), validation)
        save_weights(graph, result.params, tmp / WEIGHTS_FILE)
        write_history_csv(result.history, tmp / HISTORY_FILE)
    print(f"trained {args.epochs} epochs on {len(m)} images -> {args.out}")


def cmd_kfold(args):
    m = _manifest(args.manifest, args)
    classes = D.SCHEME_CLASSES[_scheme(args)]
    folds = D.kfold_split(m, args.folds, args.seed)
    reports = []
    with staged_output(args.out) as tmp:
        for i, held_out in enumerate(folds, start=1):
            train_m = D.concat(f for j, f in enumerate(folds, start=1) if j != i)
            x, y = _images(train_m, args)
            xv, yv = _images(held_out, args)
            # every fold starts from the same seed-derived initial weights
            graph, params = build_coronet(_arch(args), seed=args.seed)
            result = fit(graph, params, x, y, _train_config(args), (xv, yv))
            write_history_csv(result.history, tmp / f"fold{i}_history.csv")
            cm = _write_cm(graph, result.params, xv, yv, classes, tmp / f"fold{i}_cm.csv")
            report = metrics_report(cm)
            (tmp / f"fold{i}_report.json").write_text(report.to_json() + "\n")
            reports.append(report)
            log.info("fold %d accuracy %.4f", i, report.accuracy)
        avg = fold_average(reports)
        (tmp / "average_report.json").write_text(avg.to_json() + "\n")
        (tmp / "average_report.txt").write_text(avg.render() + "\n")
    print(avg.render())


def cmd_finetune(args):
    source_classes = head_arity_in_file(args.weights)
    graph, params = build_coronet(_arch(args, source_classes), seed=args.seed)
    params = load_weights(graph, args.weights, params)
    config = _train_config(args)
    graph, params = fine_tune(graph, params, args.classes, config)
    m = _manifest(args.manifest, args)
    x, y = _images(m, args)
    validation = None
    if args.val_manifest:
        validation = _images(D.merge_labels(D.load_manifest(args.val_manifest), _scheme(args)), args)
    with staged_output(args.out) as tmp:
        result = fit(graph, params, x, y, config, validation)
        save_weights(graph, result.params, tmp / WEIGHTS_FILE)
        write_history_csv(result.history, tmp / HISTORY_FILE)
        if validation is not None:
            cm = _write_cm(graph, result.params, *validation,
                           D.SCHEME_CLASSES[_scheme(args)], tmp / "cm.csv")
            (tmp / "report.json").write_text(metrics_report(cm).to_json() + "\n")
    print(f"fine-tuned {source_classes}-class weights to {args.classes} classes -> {args.out}")


def cmd_count_params(args):
    graph, _ = build_coronet(_arch(args), seed=None)
    params = None
    if args.freeze_backbone:
        graph, params = build_coronet(_arch(args), seed=0)
        graph, params = fine_tune(graph, params, args.classes, TrainConfig(freeze_backbone=True))
    report = count_parameters(graph, params)
    print(render_count_table(report))
    if args.out:
        t = report.totals
        with staged_output(args.out) as tmp:
            (tmp / "params.json").write_text(json.dumps({
                "total": t.total, "trainable": t.trainable, "non_trainable": t.non_trainable,
                "layers": [{"name": r.name, "output_shape": list(r.output_shape),
                            "params": r.total} for r in report.summary_rows()],
            }, indent=2) + "\n")


def cmd_metrics(args):
    cm = parse_cm_csv(args.cm)
    report = metrics_report(cm)
    print(report.render())
    if args.out:
        with staged_output(args.out) as tmp:
            (tmp / "report.json").write_text(report.to_json() + "\n")
            (tmp / "report.txt").write_text(report.render() + "\n")


def curve_data(history):
    return {
        "epoch": [r.epoch for r in history],
        "accuracy": {"train": [r.train_acc for r in history],
                     "val": [r.val_acc for r in history]},
        "loss": {"train": [r.train_loss for r in history],
                 "val": [r.val_loss for r in history]},
    }


def _plot_curves(curves, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "coronet"
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, key in zip(axes, ("accuracy", "loss")):
        ax.plot(curves["epoch"], curves[key]["train"], label="train")
        if any(v is not None for v in curves[key]["val"]):
            vals = [np.nan if v is None else v for v in curves[key]["val"]]
            ax.plot(curves["epoch"], vals, label="validation")
        ax.set_xlabel("epoch")
        ax.set_ylabel(key)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_curves(args):
    history = read_history_csv(args.history)
    curves = curve_data(history)
    with staged_output(args.out) as tmp:
        (tmp / "curves.json").write_text(json.dumps(curves, indent=2) + "\n")
        if args.svg:
            _plot_curves(curves, tmp / "curves.svg")
    print(f"{len(history)} epochs -> {args.out}")


def build_parser():
    p = argparse.ArgumentParser(prog="coronet", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def model_flags(sp, classes_default=4):
        sp.add_argument("--variant", choices=("full", "mini"), default="full")
        sp.add_argument("--classes", type=int, choices=(2, 3, 4), default=classes_default)
        sp.add_argument("--input", type=int, default=224, help="square input size in pixels")

    def train_flags(sp):
        sp.add_argument("--manifest", required=True)
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--lr", type=float, default=1e-4)
        sp.add_argument("--batch", type=int, default=10)
        sp.add_argument("--epochs", type=int, default=80)
        sp.add_argument("--out", required=True)
        sp.add_argument("--undersample", help="'min' or Label=count,... before training")

    sp = sub.add_parser("train", help="fit on a manifest; write weights and history")
    model_flags(sp)
    train_flags(sp)
    sp.add_argument("--val-manifest")
    sp.add_argument("--weights", help="initial weights file")
    sp.add_argument("--freeze-backbone", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("kfold", help="stratified k-fold cross-validation")
    model_flags(sp)
    train_flags(sp)
    sp.add_argument("--folds", type=int, default=4)
    sp.set_defaults(func=cmd_kfold)

    sp = sub.add_parser("finetune", help="load weights, swap the head, retrain")
    model_flags(sp, classes_default=3)
    train_flags(sp)
    sp.add_argument("--weights", required=True)
    sp.add_argument("--val-manifest")
    sp.add_argument("--freeze-backbone", action="store_true")
    sp.set_defaults(func=cmd_finetune)

    sp = sub.add_parser("count-params", help="print the layer table and parameter totals")
    model_flags(sp)
    sp.add_argument("--freeze-backbone", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_count_params)

    sp = sub.add_parser("metrics", help="metrics report from a confusion-matrix CSV")
    sp.add_argument("--cm", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("curves", help="per-epoch accuracy/loss curves from a history CSV")
    sp.add_argument("--history", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--svg", action="store_true", help="also draw curves.svg")
    sp.set_defaults(func=cmd_curves)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "epochs", 0) < 0 or getattr(args, "batch", 1) < 1:
            raise InputError("--epochs must be >= 0 and --batch >= 1")
        args.func(args)
    except (CoronetError, OSError) as exc:
        print(f"coronet {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
