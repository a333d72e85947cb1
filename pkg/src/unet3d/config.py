"""Network and training configuration with full-scale and desk-scale profiles."""

from dataclasses import asdict, dataclass

from common.constants import DESK_PATCH_SIZE, FULL_PATCH_SIZE
from common.errors import ConfigurationError

Dims = tuple[int, int, int]


@dataclass(frozen=True)
class UNetConfig:
    """Architecture of the 3D u-net.

    Attributes:
        levels: Resolution levels (levels - 1 poolings)
        base_features: Feature maps at the highest resolution; doubled per level
        in_channels: Input channels (one CT intensity channel)
        out_classes: Output classes (background, femur)
        kernel: Convolution kernel extent
        pool: Pooling window and stride
    """

    levels: int = 4
    base_features: int = 32
    in_channels: int = 1
    out_classes: int = 2
    kernel: int = 3
    pool: int = 2

    def __post_init__(self):
        for name in ("levels", "base_features", "in_channels", "out_classes"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.kernel != 3:
            raise ConfigurationError(f"only 3x3x3 convolutions are supported, got {self.kernel}")
        if self.pool != 2:
            raise ConfigurationError(f"only 2x2x2 pooling is supported, got {self.pool}")

    def features(self, level: int) -> int:
        return self.base_features * 2**level

    @property
    def divisor(self) -> int:
        """Spatial dims must be multiples of this."""
        return self.pool ** (self.levels - 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def full(cls) -> "UNetConfig":
        return cls(levels=4, base_features=32)

    @classmethod
    def desk(cls) -> "UNetConfig":
        return cls(levels=4, base_features=8)


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation schedule.

    Attributes:
        batch_size: Random crops per optimizer step
        patch_size: Crop extent; each axis divisible by the network's divisor
        epochs: Training epochs
        iterations_per_epoch: Optimizer steps per epoch
        learning_rate: Adam step size
        adam_beta1: First-moment decay
        adam_beta2: Second-moment decay
        adam_eps: Adam denominator guard
        seed: Seeds initialisation, cropping and augmentation
        prefetch_batches: Batches prepared ahead by a background thread; 0 runs
            everything on the calling thread
    """

    batch_size: int = 2
    patch_size: Dims = FULL_PATCH_SIZE
    epochs: int = 300
    iterations_per_epoch: int = 80
    learning_rate: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    prefetch_batches: int = 2

    def __post_init__(self):
        object.__setattr__(self, "patch_size", tuple(int(p) for p in self.patch_size))
        if len(self.patch_size) != 3 or min(self.patch_size) < 1:
            raise ConfigurationError(f"patch_size must be 3 positive ints, got {self.patch_size}")
        for name in ("batch_size", "epochs", "iterations_per_epoch"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.learning_rate <= 0 or self.adam_eps <= 0:
            raise ConfigurationError("learning_rate and adam_eps must be positive")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if self.prefetch_batches < 0:
            raise ConfigurationError("prefetch_batches must be >= 0")

    def check_patch(self, unet: UNetConfig) -> None:
        if any(p % unet.divisor for p in self.patch_size):
            raise ConfigurationError(
                f"patch_size {self.patch_size} must be divisible by {unet.divisor} "
                f"for a {unet.levels}-level network"
            )

    @classmethod
    def full(cls, seed: int = 0) -> "TrainConfig":
        return cls(seed=seed)

    @classmethod
    def desk(cls, seed: int = 0) -> "TrainConfig":
        # 25 x 80 = 2000 optimizer steps
        return cls(patch_size=DESK_PATCH_SIZE, epochs=25, iterations_per_epoch=80, seed=seed)
