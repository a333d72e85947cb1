"""femur-seg command line: train, predict, evaluate, augment-preview, phantoms."""

import argparse
import sys
from pathlib import Path

from common.constants import (
    EXIT_CONFIG_ERROR,
    EXIT_INGESTION_ERROR,
    EXIT_OK,
    EXIT_PROCESSING_ERROR,
)
from common.errors import ConfigurationError, FemurSegError
from common.logger import error, get_logger, setup_logging
from volume_io import VolumeIOError

from . import runner
from .config import (
    RunConfig,
    load_run_config,
    validate_for_evaluate,
    validate_for_predict,
    validate_for_preview,
    validate_for_train,
)
from .errors import IngestionError, PairingError

logger = get_logger(__name__)


def exit_code(exc: FemurSegError) -> int:
    """Map an error kind onto the documented exit status."""
    if isinstance(exc, ConfigurationError | PairingError):
        return EXIT_CONFIG_ERROR
    if isinstance(exc, IngestionError | VolumeIOError):
        return EXIT_INGESTION_ERROR
    return EXIT_PROCESSING_ERROR


def _run_config(args) -> RunConfig:
    run = load_run_config(args.config)
    return run.with_overrides(
        seed=getattr(args, "seed", None),
        workers=args.workers,
        output_dir=args.output_dir,
    )


def cmd_train(args):
    """Train a network on the configured dataset."""
    run = _run_config(args)
    validate_for_train(run)
    runner.run_training(run)


def cmd_predict(args):
    """Segment the configured input scans with a trained checkpoint."""
    run = _run_config(args)
    validate_for_predict(run, Path(args.checkpoint))
    runner.run_prediction(run, Path(args.checkpoint))


def cmd_evaluate(args):
    """Score predicted masks against ground truth."""
    run = _run_config(args)
    validate_for_evaluate(run)
    runner.run_evaluation(run)


def cmd_augment_preview(args):
    """Write before/after slices of one augmented case."""
    run = _run_config(args)
    validate_for_preview(run)
    runner.run_preview(run)


def cmd_phantoms(args):
    """Generate a synthetic dataset and a run configuration for it."""
    if args.count < 1 or args.size < 8:
        raise ConfigurationError("--count must be >= 1 and --size >= 8")
    if args.bilateral and args.size % 2:
        raise ConfigurationError("--bilateral needs an even --size")
    runner.write_phantoms(
        Path(args.output_dir), args.count, args.size, args.seed, bilateral=args.bilateral
    )


def _add_run_options(parser: argparse.ArgumentParser, *, seed: bool = True) -> None:
    parser.add_argument("--config", required=True, help="YAML run configuration")
    if seed:
        parser.add_argument("--seed", type=int, default=None, help="Override the run seed")
    parser.add_argument("--workers", type=int, default=None, help="Override the worker count")
    parser.add_argument("--output-dir", default=None, help="Override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="femur-seg",
        description="Proximal femur segmentation in CT with a patch-based 3D u-net",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-file", default=None, help="Also log to this file")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    train_parser = subparsers.add_parser(
        "train",
        help="Train a network",
        description=(
            "Train on the dataset.training cases, validating on dataset.validation.\n\n"
            "Writes <output_dir>/train/{final,best}.ckpt and history.tsv.\n\n"
            "Examples:\n"
            "  femur-seg train --config runs/phantoms/run.yaml\n"
            "  femur-seg train --config run.yaml --seed 3 --output-dir runs/seed3\n"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_options(train_parser)

    predict_parser = subparsers.add_parser(
        "predict",
        help="Segment scans with a trained checkpoint",
        description=(
            "Normalize, split, predict, restore and keep the largest component of every\n"
            "scan listed in predict.inputs. Writes one mask per scan and timing.tsv.\n\n"
            "Example:\n"
            "  femur-seg predict --config run.yaml --checkpoint runs/train/best.ckpt\n"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_options(predict_parser)
    predict_parser.add_argument("--checkpoint", required=True, help="Trained checkpoint file")

    evaluate_parser = subparsers.add_parser(
        "evaluate",
        help="Compute DSC, HD and HD95 against ground truth",
        description=(
            "Pair predictions with evaluate.ground_truth_dir by file name and write a\n"
            "per-femur metrics table with a cohort summary, plus overlay slices.\n"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_options(evaluate_parser)

    preview_parser = subparsers.add_parser(
        "augment-preview",
        help="Write slices of a case before and after augmentation",
    )
    _add_run_options(preview_parser)

    phantoms_parser = subparsers.add_parser(
        "phantoms",
        help="Generate a synthetic ellipsoid dataset",
        description=(
            "Write phantom images, masks and a desk-scale run.yaml.\n\n"
            "Example:\n"
            "  femur-seg phantoms --output-dir runs/phantoms --count 8 --size 64\n"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    phantoms_parser.add_argument("--output-dir", required=True, help="Dataset directory")
    phantoms_parser.add_argument("--count", type=int, default=8, help="Number of scans")
    phantoms_parser.add_argument("--size", type=int, default=64, help="Cube edge in voxels")
    phantoms_parser.add_argument("--seed", type=int, default=0, help="Random seed")
    phantoms_parser.add_argument(
        "--bilateral", action="store_true", help="One ellipsoid per x-half, like both hips"
    )
    return parser


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "augment-preview": cmd_augment_preview,
    "phantoms": cmd_phantoms,
}


def main(argv: list[str] | None = None) -> int:
    """Main entry point; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG_ERROR

    setup_logging(args.log_level, args.log_file)
    try:
        COMMANDS[args.command](args)
    except FemurSegError as e:
        error(str(e))
        logger.debug("Command failed", exc_info=True)
        return exit_code(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
