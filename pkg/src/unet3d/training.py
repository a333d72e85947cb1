"""Training loop: random augmented crops, Dice loss, Adam, per-epoch validation."""

import queue
import threading
import time
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from augment import AugmentConfig, augment_pair
from common.errors import ConfigurationError, DegenerateInputError
from common.logger import get_logger
from metrics import dsc
from patching import random_crop
from preprocess.case import PreprocessedCase

from .config import TrainConfig, UNetConfig
from .inference import predict_volume
from .loss import segmentation_loss
from .model import UNetModel
from .optim import adam_step

logger = get_logger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    validation_dsc: float | None
    seconds: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [r.train_loss for r in self.records]

    @property
    def best(self) -> EpochRecord | None:
        """Epoch with the highest validation DSC (first on ties)."""
        scored = [r for r in self.records if r.validation_dsc is not None]
        return max(scored, key=lambda r: r.validation_dsc) if scored else None

    def __len__(self) -> int:
        return len(self.records)


def batch_rng(seed: int, epoch: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, iteration]))


def sample_batch(
    cases: Sequence[PreprocessedCase],
    cfg: TrainConfig,
    aug: AugmentConfig,
    epoch: int,
    iteration: int,
) -> tuple[np.ndarray, np.ndarray]:
    """batch_size random augmented crops, stacked to (B, 1, *patch) and (B, 2, *patch)."""
    rng = batch_rng(cfg.seed, epoch, iteration)
    inputs, targets = [], []
    for _ in range(cfg.batch_size):
        case = cases[int(rng.integers(len(cases)))]
        x, y = random_crop(augment_pair(case, aug, rng), cfg.patch_size, rng)
        inputs.append(x)
        targets.append(y)
    return np.concatenate(inputs), np.concatenate(targets)


def _batches(cases, cfg, aug) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    for epoch in range(cfg.epochs):
        for iteration in range(cfg.iterations_per_epoch):
            yield sample_batch(cases, cfg, aug, epoch, iteration)


class _Prefetcher:
    """Background thread filling a bounded queue with batches in schedule order."""

    _DONE = object()

    def __init__(self, batches: Iterator, depth: int):
        self._queue: queue.Queue = queue.Queue(maxsize=depth)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._fill, args=(batches,), daemon=True)
        self._thread.start()

    def _put(self, item) -> bool:
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _fill(self, batches):
        try:
            for batch in batches:
                if not self._put(batch):
                    return
        except Exception as e:
            self._put(e)
            return
        self._put(self._DONE)

    def __iter__(self):
        while True:
            item = self._queue.get()
            if item is self._DONE:
                return
            if isinstance(item, Exception):
                raise item
            yield item

    def close(self):
        self._stop.set()
        self._thread.join(timeout=5)


def validation_dsc(model: UNetModel, cases: Sequence[PreprocessedCase]) -> float | None:
    """Mean volume-level DSC of thresholded predictions over labelled cases."""
    scores = []
    for case in cases:
        if case.mask is None:
            continue
        prediction = predict_volume(model, case)
        try:
            scores.append(dsc(prediction, case.mask))
        except DegenerateInputError:
            # Empty prediction of an empty target is a perfect answer
            scores.append(1.0)
    return float(np.mean(scores)) if scores else None


def train_step(model: UNetModel, x: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> float:
    """Forward, Dice loss, backward and one Adam update; returns the batch loss."""
    logits = model.forward(x, training=True)
    loss, grad_logits = segmentation_loss(logits, y)
    grads = model.backward(grad_logits)
    adam_step(model, grads, model.adam_state.step + 1, cfg)
    return loss


def train(
    cases: Sequence[PreprocessedCase],
    cfg: TrainConfig,
    aug: AugmentConfig,
    *,
    unet_config: UNetConfig | None = None,
    validation_cases: Sequence[PreprocessedCase] = (),
    on_epoch_end: Callable[[UNetModel, EpochRecord], None] | None = None,
) -> tuple[UNetModel, TrainingHistory]:
    """Train a fresh u-net.

    Each epoch runs iterations_per_epoch optimizer steps on batches of random
    augmented crops, records the mean batch loss and, when validation cases
    are given, the mean volume-level validation DSC.

    Args:
        cases: Labelled training cases
        cfg: Optimisation schedule
        aug: Augmentation ranges
        unet_config: Architecture; full-scale by default
        validation_cases: Held-out labelled cases
        on_epoch_end: Called after each epoch (e.g. to checkpoint the best model)

    Raises:
        ConfigurationError: no training cases, unlabelled cases or a patch
            size the network cannot pool
    """
    if not cases:
        raise ConfigurationError("training needs at least one case")
    unlabelled = [c.case_id for c in cases if c.mask is None]
    if unlabelled:
        raise ConfigurationError(f"training cases without masks: {unlabelled}")

    unet_config = unet_config or UNetConfig()
    cfg.check_patch(unet_config)
    model = UNetModel(unet_config, seed=cfg.seed)
    model.patch_size = cfg.patch_size
    history = TrainingHistory()

    logger.info(
        f"Training on {len(cases)} cases ({model.parameter_count:,} parameters, "
        f"patch {cfg.patch_size}, {cfg.epochs}x{cfg.iterations_per_epoch} steps)"
    )

    prefetcher = None
    if cfg.prefetch_batches:
        prefetcher = _Prefetcher(_batches(cases, cfg, aug), cfg.prefetch_batches)
        batches = iter(prefetcher)
    else:
        batches = _batches(cases, cfg, aug)
    try:
        for epoch in range(cfg.epochs):
            started = time.perf_counter()
            losses = [
                train_step(model, *next(batches), cfg) for _ in range(cfg.iterations_per_epoch)
            ]
            val = validation_dsc(model, validation_cases) if validation_cases else None
            record = EpochRecord(
                epoch=epoch + 1,
                train_loss=float(np.mean(losses)),
                validation_dsc=val,
                seconds=time.perf_counter() - started,
            )
            history.records.append(record)

            val_text = f" val_dsc={val:.4f}" if val is not None else ""
            logger.info(
                f"Epoch {record.epoch}/{cfg.epochs} loss={record.train_loss:.4f}"
                f"{val_text} ({record.seconds:.1f}s)"
            )
            if on_epoch_end:
                on_epoch_end(model, record)
    finally:
        if prefetcher:
            prefetcher.close()

    return model, history
