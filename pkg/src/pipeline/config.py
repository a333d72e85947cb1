"""Run configuration: one YAML file per run, overridable from the command line.

Example:
    seed: 7
    workers: 2
    output_dir: runs/phantoms
    split_halves: false
    unet: {profile: desk}
    train: {profile: desk, epochs: 5, iterations_per_epoch: 4}
    augment: {apply_probability: 0.35}
    patching: {patch_size: [32, 32, 32], overlap: [16, 16, 16]}
    dataset:
      training:
        - {id: phantom_000, image: images/phantom_000.nii, mask: masks/phantom_000.nii}
      validation:
        - {id: phantom_005, image: images/phantom_005.nii, mask: masks/phantom_005.nii}
    predict: {inputs: [images]}
    evaluate: {ground_truth_dir: masks, images_dir: images}
    preview: {image: images/phantom_000.nii, mask: masks/phantom_000.nii}

Relative paths are resolved against the directory holding the YAML file.
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from augment import AugmentConfig
from common.env import env
from common.errors import ConfigurationError
from unet3d import TrainConfig, UNetConfig

Dims = tuple[int, int, int]
NIFTI_SUFFIX = ".nii"


def case_id_from_path(path: Path) -> str:
    name = Path(path).name
    return name[: -len(NIFTI_SUFFIX)] if name.endswith(NIFTI_SUFFIX) else Path(path).stem


@dataclass(frozen=True)
class CaseEntry:
    case_id: str
    image: Path
    mask: Path | None = None


@dataclass(frozen=True)
class DatasetManifest:
    training: list[CaseEntry] = field(default_factory=list)
    validation: list[CaseEntry] = field(default_factory=list)

    def check_disjoint(self) -> None:
        train_ids = {c.case_id for c in self.training}
        train_images = {c.image for c in self.training}
        shared = sorted(
            c.case_id
            for c in self.validation
            if c.case_id in train_ids or c.image in train_images
        )
        if shared:
            raise ConfigurationError(f"cases in both training and validation splits: {shared}")
        for split in (self.training, self.validation):
            ids = [c.case_id for c in split]
            duplicates = sorted({i for i in ids if ids.count(i) > 1})
            if duplicates:
                raise ConfigurationError(f"duplicate case ids in dataset: {duplicates}")


@dataclass(frozen=True)
class PatchConfig:
    """Inference tiling; None falls back to the trained patch size and half-patch overlap."""

    patch_size: Dims | None = None
    overlap: Dims | None = None

    def __post_init__(self):
        for name in ("patch_size", "overlap"):
            value = getattr(self, name)
            if value is not None:
                value = tuple(int(v) for v in value)
                if len(value) != 3:
                    raise ConfigurationError(f"patching.{name} must have three values")
                object.__setattr__(self, name, value)


@dataclass(frozen=True)
class PredictConfig:
    inputs: list[Path] = field(default_factory=list)
    output_dir: Path | None = None


@dataclass(frozen=True)
class EvaluateConfig:
    ground_truth_dir: Path | None = None
    predictions_dir: Path | None = None
    images_dir: Path | None = None
    overlays: bool = True
    report: str = "metrics.tsv"


@dataclass(frozen=True)
class PreviewConfig:
    image: Path | None = None
    mask: Path | None = None


@dataclass(frozen=True)
class RunConfig:
    """Everything one command needs. All randomness derives from `seed`."""

    seed: int = 0
    workers: int = field(default_factory=env.default_workers)
    output_dir: Path = field(default_factory=env.output_dir)
    split_halves: bool = True
    unet: UNetConfig = field(default_factory=UNetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    patching: PatchConfig = field(default_factory=PatchConfig)
    dataset: DatasetManifest = field(default_factory=DatasetManifest)
    predict: PredictConfig = field(default_factory=PredictConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    preview: PreviewConfig = field(default_factory=PreviewConfig)

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.train.seed != self.seed:
            object.__setattr__(self, "train", replace(self.train, seed=self.seed))

    @property
    def predictions_dir(self) -> Path:
        return self.predict.output_dir or self.output_dir / "predictions"

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with command-line values applied; None means "not given"."""
        given = {k: v for k, v in overrides.items() if v is not None}
        if "output_dir" in given:
            given["output_dir"] = Path(given["output_dir"])
        return replace(self, **given) if given else self


# Parsing


def _mapping(value: Any, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _check_keys(values: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigurationError(f"unknown keys in {where}: {unknown}")


def _flag(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigurationError(f"{where} must be true or false, got {value!r}")
    return value


def _path(value: Any, base: Path, where: str) -> Path:
    if not isinstance(value, str | Path):
        raise ConfigurationError(f"{where} must be a path, got {value!r}")
    path = Path(value).expanduser()
    return path if path.is_absolute() else base / path


def _profiled(cls, values: dict, where: str, exclude: tuple[str, ...] = ()):
    """Build a config dataclass, starting from its full or desk profile if named."""
    values = dict(_mapping(values, where))
    allowed = {f.name for f in fields(cls)} - set(exclude)
    profile = values.pop("profile", None)
    _check_keys(values, allowed, where)
    if profile not in (None, "full", "desk"):
        raise ConfigurationError(f"{where}.profile must be 'full' or 'desk', got {profile!r}")
    try:
        base = getattr(cls, profile)() if profile else cls()
        return replace(base, **values)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid {where}: {e}") from e


def _plain(cls, values: dict, where: str):
    values = _mapping(values, where)
    _check_keys(values, {f.name for f in fields(cls)}, where)
    try:
        return cls(**values)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid {where}: {e}") from e


def _entries(values: Any, base: Path, where: str) -> list[CaseEntry]:
    if values is None:
        return []
    if not isinstance(values, list):
        raise ConfigurationError(f"{where} must be a list of cases")
    entries = []
    for i, item in enumerate(values):
        item_where = f"{where}[{i}]"
        item = _mapping(item, item_where)
        _check_keys(item, {"id", "image", "mask"}, item_where)
        if "image" not in item:
            raise ConfigurationError(f"{item_where} needs an image path")
        image = _path(item["image"], base, f"{item_where}.image")
        mask = _path(item["mask"], base, f"{item_where}.mask") if item.get("mask") else None
        entries.append(CaseEntry(str(item.get("id") or case_id_from_path(image)), image, mask))
    return entries


def parse_run_config(data: Any, base_dir: Path) -> RunConfig:
    """Turn a parsed YAML document into a RunConfig.

    Raises:
        ConfigurationError: unknown keys, wrong types or out-of-range values
    """
    data = _mapping(data, "run configuration")
    _check_keys(data, {f.name for f in fields(RunConfig)}, "run configuration")
    base_dir = Path(base_dir)
    kwargs: dict[str, Any] = {}

    for key in ("seed", "workers"):
        if key in data:
            if not isinstance(data[key], int) or isinstance(data[key], bool):
                raise ConfigurationError(f"{key} must be an integer, got {data[key]!r}")
            kwargs[key] = data[key]
    if "split_halves" in data:
        kwargs["split_halves"] = _flag(data["split_halves"], "split_halves")
    if "output_dir" in data:
        kwargs["output_dir"] = _path(data["output_dir"], base_dir, "output_dir")

    if "unet" in data:
        kwargs["unet"] = _profiled(UNetConfig, data["unet"], "unet")
    if "train" in data:
        kwargs["train"] = _profiled(TrainConfig, data["train"], "train", exclude=("seed",))
    if "augment" in data:
        kwargs["augment"] = _plain(AugmentConfig, data["augment"], "augment")
    if "patching" in data:
        kwargs["patching"] = _plain(PatchConfig, data["patching"], "patching")

    if "dataset" in data:
        dataset = _mapping(data["dataset"], "dataset")
        _check_keys(dataset, {"training", "validation"}, "dataset")
        kwargs["dataset"] = DatasetManifest(
            training=_entries(dataset.get("training"), base_dir, "dataset.training"),
            validation=_entries(dataset.get("validation"), base_dir, "dataset.validation"),
        )

    if "predict" in data:
        predict = _mapping(data["predict"], "predict")
        _check_keys(predict, {"inputs", "output_dir"}, "predict")
        inputs = predict.get("inputs") or []
        if not isinstance(inputs, list):
            raise ConfigurationError("predict.inputs must be a list of files or directories")
        kwargs["predict"] = PredictConfig(
            inputs=[_path(p, base_dir, "predict.inputs") for p in inputs],
            output_dir=_path(predict["output_dir"], base_dir, "predict.output_dir")
            if predict.get("output_dir")
            else None,
        )

    if "evaluate" in data:
        evaluate = _mapping(data["evaluate"], "evaluate")
        _check_keys(evaluate, {f.name for f in fields(EvaluateConfig)}, "evaluate")
        paths = {
            key: _path(evaluate[key], base_dir, f"evaluate.{key}")
            for key in ("ground_truth_dir", "predictions_dir", "images_dir")
            if evaluate.get(key)
        }
        extra: dict[str, Any] = {}
        if "overlays" in evaluate:
            extra["overlays"] = _flag(evaluate["overlays"], "evaluate.overlays")
        if "report" in evaluate:
            if not isinstance(evaluate["report"], str) or not evaluate["report"]:
                raise ConfigurationError(
                    f"evaluate.report must be a file name, got {evaluate['report']!r}"
                )
            extra["report"] = evaluate["report"]
        kwargs["evaluate"] = EvaluateConfig(**paths, **extra)

    if "preview" in data:
        preview = _mapping(data["preview"], "preview")
        _check_keys(preview, {"image", "mask"}, "preview")
        kwargs["preview"] = PreviewConfig(
            **{
                key: _path(preview[key], base_dir, f"preview.{key}")
                for key in ("image", "mask")
                if preview.get(key)
            }
        )

    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid run configuration: {e}") from e


def load_run_config(path: str | Path) -> RunConfig:
    """Read and parse a YAML run configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"config {path} is not valid YAML: {e}") from e
    return parse_run_config(data, path.parent)


def dump_run_config(data: dict, path: str | Path) -> Path:
    """Write a plain mapping as a YAML run configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    return path


# Per-command validation, run before any output is written


def _require(path: Path | None, what: str, *, directory: bool = False) -> Path:
    if path is None:
        raise ConfigurationError(f"{what} is not configured")
    exists = path.is_dir() if directory else path.exists()
    if not exists:
        raise ConfigurationError(f"{what} does not exist: {path}")
    return path


def validate_for_train(run: RunConfig) -> None:
    dataset = run.dataset
    if not dataset.training:
        raise ConfigurationError("dataset.training lists no cases")
    dataset.check_disjoint()
    run.train.check_patch(run.unet)
    for entry in dataset.training + dataset.validation:
        _require(entry.image, f"image of case {entry.case_id}")
        _require(entry.mask, f"mask of case {entry.case_id}")


def validate_for_predict(run: RunConfig, checkpoint: Path) -> None:
    _require(checkpoint, "checkpoint")
    if not run.predict.inputs:
        raise ConfigurationError("predict.inputs lists no volumes")
    for path in run.predict.inputs:
        _require(path, "prediction input")
    if run.patching.patch_size and any(p % run.unet.divisor for p in run.patching.patch_size):
        raise ConfigurationError(
            f"patching.patch_size {run.patching.patch_size} must be divisible by {run.unet.divisor}"
        )


def validate_for_evaluate(run: RunConfig) -> None:
    _require(run.evaluate.ground_truth_dir, "evaluate.ground_truth_dir", directory=True)
    _require(
        run.evaluate.predictions_dir or run.predictions_dir,
        "predictions directory",
        directory=True,
    )
    if run.evaluate.images_dir is not None:
        _require(run.evaluate.images_dir, "evaluate.images_dir", directory=True)


def validate_for_preview(run: RunConfig) -> None:
    _require(run.preview.image, "preview.image")
    _require(run.preview.mask, "preview.mask")
