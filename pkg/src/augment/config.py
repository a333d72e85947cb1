"""Augmentation parameter ranges."""

from dataclasses import dataclass

from common.errors import ConfigurationError

Range = tuple[float, float]


@dataclass(frozen=True)
class AugmentConfig:
    """Ranges each random transform draws from, and how often transforms fire.

    Attributes:
        brightness_range: Multiplicative intensity factor
        rotation_range_deg: Rotation about each of the X, Y and Z axes (degrees)
        scaling_range: Isotropic zoom factor
        elastic_alpha_range: Deformation intensity (displacement scale)
        elastic_sigma_range: Gaussian smoothing of the displacement noise (voxels)
        apply_probability: Chance that each transform is applied to a case
    """

    brightness_range: Range = (0.75, 1.25)
    rotation_range_deg: Range = (-3.0, 3.0)
    scaling_range: Range = (0.95, 1.05)
    elastic_alpha_range: Range = (0.0, 100.0)
    elastic_sigma_range: Range = (9.0, 13.0)
    apply_probability: float = 0.35

    def __post_init__(self):
        for name in (
            "brightness_range",
            "rotation_range_deg",
            "scaling_range",
            "elastic_alpha_range",
            "elastic_sigma_range",
        ):
            value = getattr(self, name)
            if len(value) != 2:
                raise ConfigurationError(f"{name} must be a (low, high) pair, got {value!r}")
            low, high = float(value[0]), float(value[1])
            if low > high:
                raise ConfigurationError(f"{name}: lower bound {low} exceeds upper bound {high}")
            object.__setattr__(self, name, (low, high))

        if not 0.0 <= self.apply_probability <= 1.0:
            raise ConfigurationError(
                f"apply_probability must lie in [0, 1], got {self.apply_probability}"
            )
        if self.scaling_range[0] <= 0:
            raise ConfigurationError("scaling_range must be positive")
        if self.elastic_sigma_range[0] <= 0:
            raise ConfigurationError("elastic_sigma_range must be positive")
        if self.brightness_range[0] < 0 or self.elastic_alpha_range[0] < 0:
            raise ConfigurationError("brightness and elastic alpha ranges must be non-negative")

    @classmethod
    def disabled(cls) -> "AugmentConfig":
        """Config under which augmentation never fires."""
        return cls(apply_probability=0.0)
