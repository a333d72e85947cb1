"""The work behind each command: training, prediction, evaluation, previews, phantoms."""

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from augment import augment_pair, case_rng, draw_plan
from common.constants import CHECKPOINT_SUFFIX
from common.errors import DegenerateInputError
from common.logger import get_logger, print_table, success
from metrics import MetricsReport, evaluate_case, print_summary, summarize_reports, write_report
from postprocess import largest_component, merge_masks, restore_geometry
from preprocess import prepare_case
from synthetic import make_phantom_dataset
from unet3d import EpochRecord, UNetModel, load_checkpoint, predict_volume, save_checkpoint, train
from volume_io import LabelMask, write_volume_file

from . import overlays
from .config import RunConfig, case_id_from_path, dump_run_config
from .ingest import collect_inputs, load_cases, pair_masks, read_mask, read_scan

logger = get_logger(__name__)

HISTORY_COLUMNS = ("epoch", "train_loss", "validation_dsc")
TIMING_COLUMNS = ("case_id", "seconds", "foreground_voxels")


# Training


def write_history(records: list[EpochRecord], path: Path) -> Path:
    """Per-epoch loss and validation DSC; wall-clock times stay in the log."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, delimiter="\t")
        writer.writerow(HISTORY_COLUMNS)
        for r in records:
            val = "" if r.validation_dsc is None else f"{r.validation_dsc:.6f}"
            writer.writerow([r.epoch, f"{r.train_loss:.8f}", val])
    return path


def run_training(run: RunConfig) -> dict[str, Path]:
    """Train on the manifest's training split and write checkpoints and history."""
    training = load_cases(run.dataset.training, run.split_halves)
    validation = load_cases(run.dataset.validation, run.split_halves)

    out = run.output_dir / "train"
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "final": out / f"final{CHECKPOINT_SUFFIX}",
        "best": out / f"best{CHECKPOINT_SUFFIX}",
        "history": out / "history.tsv",
    }
    best_dsc = -1.0
    records: list[EpochRecord] = []

    def on_epoch_end(model: UNetModel, record: EpochRecord) -> None:
        nonlocal best_dsc
        records.append(record)
        write_history(records, paths["history"])
        if record.validation_dsc is not None and record.validation_dsc > best_dsc:
            best_dsc = record.validation_dsc
            save_checkpoint(model, paths["best"])
            logger.info(f"New best validation DSC {best_dsc:.4f} at epoch {record.epoch}")

    model, _ = train(
        training,
        run.train,
        run.augment,
        unet_config=run.unet,
        validation_cases=validation,
        on_epoch_end=on_epoch_end,
    )
    save_checkpoint(model, paths["final"])
    if best_dsc < 0:
        paths.pop("best")
    success(f"Training finished, checkpoints in {out}")
    return paths


# Prediction


@dataclass(frozen=True)
class FemurTiming:
    case_id: str
    seconds: float
    foreground_voxels: int


def predict_scan(
    model: UNetModel, path: Path, run: RunConfig
) -> tuple[LabelMask, list[FemurTiming]]:
    """Normalize, split, predict, restore and clean one scan; one timing row per femur."""
    case_id = case_id_from_path(path)
    volume = read_scan(path, case_id)
    restored = []
    timings = []
    for case in prepare_case(volume, None, case_id=case_id, split=run.split_halves):
        started = time.perf_counter()
        mask = restore_geometry(
            predict_volume(
                model,
                case,
                patch_size=run.patching.patch_size,
                overlap=run.patching.overlap,
            ),
            case.geometry,
        )
        try:
            mask = largest_component(mask)
        except DegenerateInputError:
            logger.warning(f"{case.case_id}: empty prediction, nothing to keep")
        seconds = time.perf_counter() - started
        restored.append(mask)
        timings.append(FemurTiming(case.case_id, seconds, mask.foreground_count))
        logger.info(f"{case.case_id}: {mask.foreground_count} voxels in {seconds:.2f}s")

    combined = merge_masks(restored)
    # Written with the source scan's spacing and origin
    return LabelMask(combined.data, spacing=volume.spacing, origin=volume.origin), timings


def write_timings(timings: list[FemurTiming], path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, delimiter="\t")
        writer.writerow(TIMING_COLUMNS)
        for t in timings:
            writer.writerow([t.case_id, f"{t.seconds:.3f}", t.foreground_voxels])
    return path


def read_timings(path: Path) -> dict[str, float]:
    if not path.exists():
        return {}
    with open(path, newline="", encoding="utf-8") as f:
        return {row["case_id"]: float(row["seconds"]) for row in csv.DictReader(f, delimiter="\t")}


def run_prediction(run: RunConfig, checkpoint: Path) -> list[FemurTiming]:
    """Predict every input scan, writing one mask per scan plus timing.tsv."""
    model = load_checkpoint(checkpoint, expected=run.unet)
    inputs = collect_inputs(run.predict.inputs)
    out = run.predictions_dir
    out.mkdir(parents=True, exist_ok=True)

    def work(path: Path) -> list[FemurTiming]:
        mask, timings = predict_scan(model, path, run)
        write_volume_file(mask, out / path.name)
        return timings

    if run.workers > 1 and len(inputs) > 1:
        with ThreadPoolExecutor(max_workers=run.workers) as pool:
            results = list(pool.map(work, inputs))
    else:
        results = [work(path) for path in inputs]

    timings = [t for scan in results for t in scan]
    write_timings(timings, out / "timing.tsv")
    print_table(
        "Prediction time per femur",
        list(TIMING_COLUMNS),
        [[t.case_id, f"{t.seconds:.2f}", str(t.foreground_voxels)] for t in timings],
    )
    success(f"Wrote {len(inputs)} masks to {out}")
    return timings


# Evaluation


def femur_masks(mask: LabelMask, case_id: str, split: bool) -> list[tuple[str, LabelMask]]:
    """Per-femur views of a whole-scan mask, named like the prediction cases."""
    if not split:
        return [(case_id, mask)]
    half = mask.dims[2] // 2
    return [
        (f"{case_id}_right", mask.with_data(mask.data[:, :, :half])),
        (f"{case_id}_left", mask.with_data(mask.data[:, :, half:])),
    ]


def evaluate_femur(
    prediction: LabelMask, truth: LabelMask, seconds: float, femur_id: str
) -> MetricsReport:
    """Score one femur; two empty masks give a row with every metric undefined."""
    try:
        return evaluate_case(prediction, truth, seconds, case_id=femur_id)
    except DegenerateInputError:
        logger.warning(f"{femur_id}: prediction and ground truth are both empty, no metrics")
        return MetricsReport(femur_id, None, None, None, seconds)


def evaluate_scan(
    run: RunConfig, case_id: str, pred_path: Path, truth_path: Path, timings: dict[str, float]
) -> list[MetricsReport]:
    prediction = read_mask(pred_path, case_id)
    truth = read_mask(truth_path, case_id)
    image = None
    if run.evaluate.images_dir is not None:
        image_path = run.evaluate.images_dir / pred_path.name
        if image_path.exists():
            image = read_scan(image_path, case_id).data

    split = run.split_halves and prediction.dims[2] % 2 == 0
    reports = [
        evaluate_femur(pred, gt, timings.get(femur_id, 0.0), femur_id)
        for (femur_id, pred), (_, gt) in zip(
            femur_masks(prediction, case_id, split),
            femur_masks(truth, case_id, split),
            strict=True,
        )
    ]

    if run.evaluate.overlays:
        picture = overlays.overlay(
            overlays.central_axial(image) if image is not None else None,
            overlays.central_axial(truth.data),
            overlays.central_axial(prediction.data),
        )
        overlays.write_ppm(run.output_dir / "overlays" / f"{case_id}.ppm", picture)
    return reports


def run_evaluation(run: RunConfig) -> list[MetricsReport]:
    """Score every prediction against its ground truth and write the report table."""
    predictions_dir = run.evaluate.predictions_dir or run.predictions_dir
    pairs = pair_masks(predictions_dir, run.evaluate.ground_truth_dir)
    timings = read_timings(predictions_dir / "timing.tsv")

    def work(pair) -> list[MetricsReport]:
        case_id, pred_path, truth_path = pair
        return evaluate_scan(run, case_id, pred_path, truth_path, timings)

    if run.workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=run.workers) as pool:
            results = list(pool.map(work, pairs))
    else:
        results = [work(pair) for pair in pairs]

    reports = [r for scan in results for r in scan]
    report_path = write_report(reports, run.output_dir / run.evaluate.report)
    print_summary(summarize_reports(reports))
    success(f"Evaluated {len(reports)} femurs, report at {report_path}")
    return reports


# Augmentation preview


def run_preview(run: RunConfig) -> dict[str, Path]:
    """Central axial slices of one case before and after augmentation."""
    case_id = case_id_from_path(run.preview.image)
    volume = read_scan(run.preview.image, case_id)
    mask = read_mask(run.preview.mask, case_id)
    case = prepare_case(volume, mask, case_id=case_id, split=run.split_halves)[0]

    plan = draw_plan(run.augment, case_rng(run.seed, 0, 0))
    logger.info(f"Augmentation plan for seed {run.seed}: {plan}")
    augmented = augment_pair(case, run.augment, case_rng(run.seed, 0, 0))

    out = run.output_dir / "preview"
    slices = {
        "image_before": overlays.to_gray8(overlays.central_axial(case.input.data)),
        "image_after": overlays.to_gray8(overlays.central_axial(augmented.input.data)),
        "mask_before": overlays.central_axial(case.mask.data) * 255,
        "mask_after": overlays.central_axial(augmented.mask.data) * 255,
    }
    paths = {name: overlays.write_pgm(out / f"{name}.pgm", image) for name, image in slices.items()}
    success(f"Wrote augmentation preview to {out}")
    return paths


# Synthetic data


def write_phantoms(
    output_dir: Path, count: int, size: int, seed: int, *, bilateral: bool = False
) -> Path:
    """Write phantom image/mask pairs and a desk-scale run configuration; returns its path."""
    output_dir = Path(output_dir)
    phantoms = make_phantom_dataset(count, (size, size, size), seed, bilateral=bilateral)
    for phantom in phantoms:
        write_volume_file(phantom.volume, output_dir / "images" / f"{phantom.case_id}.nii")
        write_volume_file(phantom.mask, output_dir / "masks" / f"{phantom.case_id}.nii")

    # Hold out roughly one case in ten, at least one when there are two or more
    held_out = max(1, count // 10) if count > 1 else 0
    entries = [
        {
            "id": p.case_id,
            "image": f"images/{p.case_id}.nii",
            "mask": f"masks/{p.case_id}.nii",
        }
        for p in phantoms
    ]
    training, validation = entries[: count - held_out], entries[count - held_out :]
    patch = min(32, size - size % 8)
    config = {
        "seed": seed,
        "output_dir": "runs",
        "split_halves": bilateral,
        "unet": {"profile": "desk"},
        "train": {"profile": "desk", "patch_size": [patch] * 3},
        "patching": {"patch_size": [patch] * 3, "overlap": [patch // 2] * 3},
        "dataset": {"training": training, "validation": validation},
        "predict": {"inputs": ["images"]},
        "evaluate": {"ground_truth_dir": "masks", "images_dir": "images"},
        "preview": {"image": entries[0]["image"], "mask": entries[0]["mask"]},
    }
    path = dump_run_config(config, output_dir / "run.yaml")
    success(f"Wrote {count} phantoms and {path}")
    return path

