"""Command line front end.

Verbs: train, eval, deform, jacobian, inspect, gradcheck. Runs are driven by
a flat key=value config file plus --set overrides, and every output lands
under the run's output directory. Exit codes: 0 success, 1 usage or
configuration problem, 2 data or file-format problem, 3 numerical failure.
"""

import argparse
import csv
import os
import sys

import numpy as np

from . import analysis, data, gradcheck, metrics, train
from .errors import ConfigError, DataError, MdrnnError, TrainingError
from .grid import SequenceND
from .network import (Network, NetworkConfig, field_group, load_checkpoint,
                      parameter_report, save_checkpoint)

# reference configurations with their documented expected weight totals
PRESETS = {
    "digits": (NetworkConfig(num_dims=2, layer_kind="lstm", input_width=1,
                             hidden_width=25, output_width=11), 27511),
    "textures": (NetworkConfig(num_dims=2, layer_kind="lstm", input_width=3,
                               hidden_width=25, output_width=155), 43257),
}


class UsageError(MdrnnError):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- run config

CONFIG_DEFAULTS = {
    "task": "mnist_pixels",
    "seed": "0",
    "layer": "lstm",
    "hidden": "25",
    "cells": "1",
    "classes": "11",
    "multidirectional": "true",
    "threshold": "0.0",
    "learning_rate": "1e-5",
    "momentum": "0.9",
    "max_epochs": "50",
    "patience": "20",
    "shuffle": "true",
    "grad_clip": "",
    "train_count": "",
    "val_count": "",
    "workers": "1",
    "images": "",
    "labels": "",
    "image_dir": "",
    "labelmap_dir": "",
    "palette": "",
    "output_dir": "",
}


def parse_config_file(path):
    if not os.path.exists(path):
        raise DataError(f"missing config file: {path}")
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value
    return values


def parse_bool(value, key):
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"config key {key} expects a boolean, got {value!r}")


def run_settings(config_path, overrides):
    values = dict(CONFIG_DEFAULTS)
    values.update(parse_config_file(config_path))
    for item in overrides or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if key not in CONFIG_DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = value
    if values["task"] not in ("mnist_pixels", "labelmap"):
        raise ConfigError(f"unknown task {values['task']!r}")
    if not values["output_dir"]:
        raise ConfigError("config must set output_dir")
    return values


def load_task_dataset(values):
    """Materialize the task's examples in file order (pre-split)."""
    if values["task"] == "mnist_pixels":
        images = data.load_images(data.require_file(values["images"], "images"))
        labels = data.load_labels(data.require_file(values["labels"], "labels"))
        if images.ndim != 3 or labels.ndim != 1 or len(images) != len(labels):
            raise DataError(
                f"expected (N,H,W) images with N labels, got {images.shape} "
                f"and {labels.shape}")
        threshold = float(values["threshold"])
        return data.digit_dataset(images, labels, threshold), 1
    palette = data.load_palette(data.require_file(values["palette"], "palette"))
    image_dir = data.require_file(values["image_dir"], "image_dir")
    labelmap_dir = data.require_file(values["labelmap_dir"], "labelmap_dir")
    names = sorted(os.listdir(image_dir))
    if not names:
        raise DataError(f"no images in {image_dir}")
    examples = []
    for name in names:
        examples.append(data.load_labelmap_pair(
            os.path.join(image_dir, name),
            data.require_file(os.path.join(labelmap_dir, name), "labelmap"),
            palette))
    return examples, 3


def network_config_from(values, input_width):
    return NetworkConfig(
        num_dims=2,
        layer_kind=values["layer"],
        input_width=input_width,
        hidden_width=int(values["hidden"]),
        output_width=int(values["classes"]),
        cells_per_block=int(values["cells"]),
        multidirectional=parse_bool(values["multidirectional"], "multidirectional"),
    )


def train_config_from(values):
    return train.TrainConfig(
        learning_rate=float(values["learning_rate"]),
        momentum=float(values["momentum"]),
        max_epochs=int(values["max_epochs"]),
        patience=int(values["patience"]),
        rng_seed=int(values["seed"]),
        shuffle=parse_bool(values["shuffle"], "shuffle"),
        grad_clip=float(values["grad_clip"]) if values["grad_clip"] else None,
    )


# ------------------------------------------------------------------ commands

def cmd_train(args):
    values = run_settings(args.config, args.set)
    examples, input_width = load_task_dataset(values)
    seed = int(values["seed"])
    train_count = int(values["train_count"]) if values["train_count"] else None
    val_count = int(values["val_count"]) if values["val_count"] else None
    if train_count is None or val_count is None:
        raise ConfigError("config must set train_count and val_count")
    train_set, val_set = data.split(examples, (train_count, val_count), seed)
    net = Network.initialized(network_config_from(values, input_width),
                              np.random.default_rng(seed))
    out_dir = values["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    cfg = train_config_from(values)
    with open(os.path.join(out_dir, "train.log"), "w") as log:
        result = train.fit(net, train_set, val_set, cfg, log_stream=log)
    with open(os.path.join(out_dir, "best.ckpt"), "wb") as f:
        f.write(result.best_checkpoint)
    save_checkpoint(os.path.join(out_dir, "final.ckpt"), net,
                    {"seed": seed, "bit_generator": "PCG64"})
    best_net, _ = load_checkpoint(os.path.join(out_dir, "best.ckpt"))
    report = metrics.evaluate(best_net, val_set, workers=int(values["workers"]))
    with open(os.path.join(out_dir, "report.txt"), "w") as f:
        f.write(report.to_text() + "\n")
    with open(os.path.join(out_dir, "confusion.csv"), "w") as f:
        f.write(report.confusion_csv())
    print(f"best epoch {result.best_epoch} "
          f"validation pixel error {result.best_val_error:.6f}")
    print(f"artifacts in {out_dir}")
    return 0


def cmd_eval(args):
    net, _ = load_checkpoint(data.require_file(args.checkpoint, "checkpoint"))
    images = data.load_images(data.require_file(args.images, "images"))
    labels = data.load_labels(data.require_file(args.labels, "labels"))
    examples = data.digit_dataset(images, labels, args.threshold)
    report = metrics.evaluate(net, examples, workers=args.workers)
    print(report.to_text())
    if args.confusion:
        with open(args.confusion, "w") as f:
            f.write(report.confusion_csv())
    if args.predictions:
        from .network import network_forward
        with open(args.predictions, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["index", "digit", "predicted"])
            for i, example in enumerate(examples):
                fwd = network_forward(net, example.input)
                writer.writerow([i, example.digit,
                                 metrics.cumulative_classify(fwd.probs)])
    return 0


def cmd_deform(args):
    images = data.read_idx(data.require_file(args.input, "input"))
    if images.ndim != 3:
        raise DataError(f"expected an (N,H,W) image file, got rank {images.ndim}")
    warped = data.deform_image_stack(images, args.sigma, args.alpha, args.seed)
    data.write_idx(args.output, warped)
    print(f"wrote {warped.shape[0]} deformed images to {args.output}")
    return 0


def cmd_jacobian(args):
    net, _ = load_checkpoint(data.require_file(args.checkpoint, "checkpoint"))
    images = data.load_images(data.require_file(args.images, "images"))
    if not 0 <= args.index < len(images):
        raise DataError(f"image index {args.index} out of range for {len(images)}")
    seq = SequenceND(images[args.index][..., np.newaxis])
    point = tuple(int(c) for c in args.point.split(","))
    jmap = analysis.jacobian(net, seq, point, args.class_index)
    os.makedirs(args.out, exist_ok=True)
    analysis.save_jacobian(jmap,
                           os.path.join(args.out, "jacobian.png"),
                           os.path.join(args.out, "jacobian.txt"))
    print(f"wrote jacobian raster for point {point} class {args.class_index} "
          f"to {args.out}")
    return 0


def cmd_inspect(args):
    if args.preset:
        config, reference = PRESETS[args.preset]
        net = Network.zeros(config)
    else:
        if not args.checkpoint:
            raise UsageError("inspect needs a checkpoint path or --preset")
        net, _ = load_checkpoint(data.require_file(args.checkpoint, "checkpoint"))
        reference = args.reference
    print(f"config: {net.config.to_dict()}")
    print(parameter_report(net, reference_total=reference))
    return 0


def cmd_gradcheck(args):
    results, ok = gradcheck.run_suite(seed=args.seed, step=args.step,
                                      tolerance=args.tolerance,
                                      corrupt=args.corrupt)
    overall = 0.0
    for result in results:
        by_group = {}
        for name, err in result.group_errors.items():
            group = field_group(name)
            by_group[group] = max(by_group.get(group, 0.0), err)
        groups_text = "  ".join(f"{g}={e:.3e}" for g, e in sorted(by_group.items()))
        print(f"{result.label}: {groups_text}")
        overall = max(overall, result.max_error)
    print(f"max relative error: {overall:.3e} (tolerance {args.tolerance:g})")
    if not ok:
        raise TrainingError(
            f"gradient check failed: {overall:.3e} exceeds {args.tolerance:g}")
    print("gradient check passed")
    return 0


# -------------------------------------------------------------------- parser

def build_parser():
    parser = Parser(prog="mdrnn", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", parents=[], description="Train from a config file.")
    p.add_argument("config", help="flat key=value run config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config value")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", description="Evaluate a checkpoint on an IDX test set.")
    p.add_argument("checkpoint")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--confusion", help="write the confusion matrix CSV here")
    p.add_argument("--predictions", help="write per-image digit predictions CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("deform", description="Write an elastically deformed copy "
                       "of an IDX image file, one fresh field per image.")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--sigma", type=float, default=4.0)
    p.add_argument("--alpha", type=float, default=34.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("jacobian", description="Input-sensitivity raster for one "
                       "output unit at one point.")
    p.add_argument("checkpoint")
    p.add_argument("--images", required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--point", required=True, metavar="ROW,COL")
    p.add_argument("--class-index", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("inspect", description="Report a network's parameter "
                       "counts by group.")
    p.add_argument("checkpoint", nargs="?")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="use a bundled reference configuration instead")
    p.add_argument("--reference", type=int,
                   help="reference total to compare against")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("gradcheck", description="Finite-difference verification "
                       "of all analytic gradients.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--corrupt", action="store_true",
                   help="negative control: bias one gradient and expect failure")
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help and --version exit via argparse
        return 0 if not exc.code else 1
    if not getattr(args, "func", None):
        parser.print_help()
        return 1
    try:
        return args.func(args) or 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:  # includes FormatError
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
