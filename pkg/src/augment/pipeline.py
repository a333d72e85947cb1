"""On-the-fly augmentation of training cases."""

from dataclasses import dataclass, replace

import numpy as np

from common.logger import get_logger
from preprocess.case import PreprocessedCase

from .config import AugmentConfig
from .transforms import apply_affine, apply_brightness, elastic_deform

logger = get_logger(__name__)

TRANSFORM_NAMES = ("rotation", "scaling", "elastic", "brightness")


@dataclass(frozen=True)
class AugmentationPlan:
    """Which transforms fire for one case and with which parameters (None = skipped)."""

    rotation_deg: tuple[float, float, float] | None = None
    scale: float | None = None
    elastic: tuple[float, float] | None = None  # (alpha, sigma)
    brightness: float | None = None

    @property
    def fired(self) -> dict[str, bool]:
        return {
            "rotation": self.rotation_deg is not None,
            "scaling": self.scale is not None,
            "elastic": self.elastic is not None,
            "brightness": self.brightness is not None,
        }


def case_rng(base_seed: int, case_index: int, epoch: int) -> np.random.Generator:
    """Independent generator for one case in one epoch, derived from the run seed."""
    return np.random.default_rng(np.random.SeedSequence([base_seed, case_index, epoch]))


def draw_plan(cfg: AugmentConfig, rng: np.random.Generator) -> AugmentationPlan:
    """Decide independently for each transform whether it fires, and draw its parameters.

    Parameters are drawn whether or not the transform fires so the generator
    advances identically for every plan.
    """
    fires = rng.random(len(TRANSFORM_NAMES)) < cfg.apply_probability
    rotation = tuple(float(a) for a in rng.uniform(*cfg.rotation_range_deg, size=3))
    scale = float(rng.uniform(*cfg.scaling_range))
    alpha = float(rng.uniform(*cfg.elastic_alpha_range))
    sigma = float(rng.uniform(*cfg.elastic_sigma_range))
    brightness = float(rng.uniform(*cfg.brightness_range))

    return AugmentationPlan(
        rotation_deg=rotation if fires[0] else None,
        scale=scale if fires[1] else None,
        elastic=(alpha, sigma) if fires[2] else None,
        brightness=brightness if fires[3] else None,
    )


def apply_plan(
    case: PreprocessedCase, plan: AugmentationPlan, rng: np.random.Generator
) -> PreprocessedCase:
    """Apply a drawn plan in the fixed order affine → elastic → brightness."""
    if case.mask is None:
        raise ValueError(f"case {case.case_id!r} has no mask to augment alongside")

    volume, mask = case.input, case.mask

    if plan.rotation_deg is not None or plan.scale is not None:
        rotation = plan.rotation_deg or (0.0, 0.0, 0.0)
        scale = plan.scale if plan.scale is not None else 1.0
        volume, mask = apply_affine(volume, mask, rotation, scale)

    if plan.elastic is not None:
        alpha, sigma = plan.elastic
        volume, mask = elastic_deform(volume, mask, alpha, sigma, rng)

    if plan.brightness is not None:
        volume = apply_brightness(volume, plan.brightness)

    return replace(case, input=volume, mask=mask)


def augment_pair(
    case: PreprocessedCase, cfg: AugmentConfig, rng: np.random.Generator
) -> PreprocessedCase:
    """Randomly augment a (volume, mask) case; identical seed and config give identical output."""
    plan = draw_plan(cfg, rng)
    logger.debug(f"Augmenting {case.case_id or 'case'}: {plan}")
    return apply_plan(case, plan, rng)
