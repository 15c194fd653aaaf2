"""Command-line frontend: generate, split, train, evaluate, filter, inspect.

Human-readable progress goes to stderr; machine-readable results (metric
lines, reports, written paths) go to stdout. Exit codes: 0 on success,
1 on domain errors such as a bad image or manifest, 2 on usage errors.
"""

import argparse
import csv
import os
import sys

from . import classifier, dataset, inspection, synthgear
from .features import ExtractorConfig
from .filters import KERNEL_NAMES, GaussianSpec, apply_filter_bank, gaussian_blur
from .imagecore import GrayImage, gray_to_rgb, load_pnm, rgb_to_gray, save_pnm


def _ratios(text: str) -> dataset.SplitRatios:
    try:
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("expected three comma-separated numbers")
        return dataset.SplitRatios(*parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load_image(path: str):
    with open(path, "rb") as fh:
        return load_pnm(fh.read())


def _load_rgb(path: str):
    image = _load_image(path)
    return gray_to_rgb(image) if isinstance(image, GrayImage) else image


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _cmd_synth(args) -> int:
    summary = synthgear.generate_dataset(args.count, args.seed, args.out, image_size=args.size)
    print(f"generated {len(summary.files)} files under {summary.root}", file=sys.stderr)
    print(
        f"normal={summary.normal_count} broken={summary.broken_count} "
        f"normal_dir={summary.normal_dir} broken_dir={summary.broken_dir}"
    )
    return 0


def _cmd_split(args) -> int:
    items = dataset.ingest_directory(args.data)
    split = dataset.split_dataset(items, args.ratios, args.seed)
    dataset.write_manifest(split, args.manifest)
    print(f"wrote manifest {args.manifest}", file=sys.stderr)
    print(f"train={len(split.train)} validation={len(split.validation)} test={len(split.test)}")
    return 0


def _cmd_train(args) -> int:
    items = dataset.ingest_directory(args.data)
    cfg = classifier.TrainConfig(
        steps=args.steps,
        learning_rate=args.lr,
        seed=args.seed,
        eval_interval=args.eval_interval,
        ratios=args.ratios,
    )
    extractor = ExtractorConfig()
    print(f"training on {len(items)} images for {cfg.steps} steps", file=sys.stderr)
    head, trace, test_acc = classifier.train(items, cfg, extractor)

    by_step = {record.step: record for record in trace.step_records}
    for val in trace.validation_records:
        step = by_step[val.step]
        print(
            f"step={val.step} train_acc={step.train_acc:.6f} train_ce={step.train_ce:.6f} "
            f"val_acc={val.val_acc:.6f} val_ce={val.val_ce:.6f}"
        )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "train_acc", "train_ce", "val_acc", "val_ce"])
            for val in trace.validation_records:
                step = by_step[val.step]
                writer.writerow([val.step, step.train_acc, step.train_ce, val.val_acc, val.val_ce])

    classifier.save_model(head, args.model)
    print(f"saved model to {args.model}", file=sys.stderr)

    split = dataset.split_dataset(items, cfg.ratios, cfg.seed)
    _, test_ce = classifier.evaluate(head, split.test)
    final_step = trace.step_records[-1]
    final_val = trace.validation_records[-1]
    print(f"final train_acc={final_step.train_acc:.6f} train_ce={final_step.train_ce:.6f}")
    print(f"final val_acc={final_val.val_acc:.6f} val_ce={final_val.val_ce:.6f}")
    print(f"final test_acc={test_acc:.6f} test_ce={test_ce:.6f}")
    return 0


def _cmd_evaluate(args) -> int:
    head = classifier.load_model(args.model)
    if args.manifest:
        split = dataset.read_manifest(args.manifest, args.data)
        items = dict(split.parts())[args.part]
    else:
        items = dataset.ingest_directory(args.data)
    accuracy, ce = classifier.evaluate(head, items)
    print(f"accuracy={accuracy:.6f} cross_entropy={ce:.6f} count={len(items)}")
    return 0


def _cmd_filter(args) -> int:
    image = _load_image(args.infile)
    gray = rgb_to_gray(image) if not isinstance(image, GrayImage) else image
    bank = apply_filter_bank(gray, GaussianSpec(args.sigma, args.sigma))
    os.makedirs(args.out, exist_ok=True)
    names = KERNEL_NAMES if args.kernel == "all" else (args.kernel,)
    for name in names:
        path = os.path.join(args.out, f"{_stem(args.infile)}_{name}.pgm")
        with open(path, "wb") as fh:
            fh.write(save_pnm(bank[name]))
        print(path)
    return 0


def _cmd_blur(args) -> int:
    image = _load_image(args.infile)
    blurred = gaussian_blur(image, GaussianSpec(args.sigma_x, args.sigma_y))
    with open(args.out, "wb") as fh:
        fh.write(save_pnm(blurred))
    print(args.out)
    return 0


def _cmd_inspect(args) -> int:
    head = classifier.load_model(args.model)
    image = _load_rgb(args.infile)
    report = inspection.inspect(
        image, head, GaussianSpec(1.0, 1.0), args.out, stem=_stem(args.infile)
    )
    print(
        f"decision={report.decision.value} filtered={','.join(report.filtered_paths)}",
        file=sys.stderr,
    )
    sys.stdout.write(inspection.format_report(report.probabilities))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gearlens", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic gear dataset")
    p.add_argument("--count", type=int, required=True, help="images per class")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="destination directory")
    p.add_argument("--size", type=int, default=128, help="image side length in pixels")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("split", help="split a dataset and write a manifest")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ratios", type=_ratios, default=dataset.SplitRatios())
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train the softmax head")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--eval-interval", type=int, default=10)
    p.add_argument("--ratios", type=_ratios, default=dataset.SplitRatios())
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--csv", help="optional metrics CSV path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--manifest", help="restrict to one part of a saved split")
    p.add_argument("--part", choices=["train", "validation", "test"], default="test")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("filter", help="write edge-filtered images")
    p.add_argument("--kernel", choices=list(KERNEL_NAMES) + ["all"], required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("blur", help="gaussian-blur an image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="output file")
    p.add_argument("--sigma-x", type=float, required=True)
    p.add_argument("--sigma-y", type=float, required=True)
    p.set_defaults(func=_cmd_blur)

    p = sub.add_parser("inspect", help="filter, classify, and report one image")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="directory for filtered images")
    p.set_defaults(func=_cmd_inspect)

    return parser


def run(argv: list[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
