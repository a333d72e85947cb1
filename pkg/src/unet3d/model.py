"""The 3D u-net: contracting path, expanding path with skip connections, 1x1x1 head."""

from dataclasses import dataclass, field

import numpy as np

from common.errors import ShapeError

from .config import UNetConfig
from .functional import BatchNormState, softmax_voxelwise
from .layers import Conv3d, ConvBlock, ConvTranspose3d, Layer, MaxPool3d


@dataclass
class AdamState:
    """First/second moment buffers keyed by parameter name, plus the step count."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


class UNetModel:
    """Encoder levels [conv-BN-ReLU]x2 then pool; decoder levels up-conv,
    concatenate the matching encoder output, [conv-BN-ReLU]x2.

    Parameters are named "<block>.<stage>.<tensor>", e.g. "enc0.conv1.weight",
    "up2.weight", "dec1.bn2.gain", "head.bias".
    """

    def __init__(self, config: UNetConfig | None = None, seed: int = 0):
        self.config = config or UNetConfig()
        self.patch_size: tuple[int, int, int] | None = None
        self.adam_state = AdamState()

        rng = np.random.default_rng(seed)
        cfg = self.config
        self.encoders: list[ConvBlock] = []
        self.pools: list[MaxPool3d] = []
        for level in range(cfg.levels):
            in_ch = cfg.in_channels if level == 0 else cfg.features(level - 1)
            self.encoders.append(ConvBlock(in_ch, cfg.features(level), cfg.kernel, rng))
            if level < cfg.levels - 1:
                self.pools.append(MaxPool3d())

        self.ups: list[ConvTranspose3d] = []
        self.decoders: list[ConvBlock] = []
        for level in range(cfg.levels - 1):
            self.ups.append(ConvTranspose3d(cfg.features(level + 1), cfg.features(level), rng))
            self.decoders.append(
                ConvBlock(2 * cfg.features(level), cfg.features(level), cfg.kernel, rng)
            )
        self.head = Conv3d(cfg.features(0), cfg.out_classes, 1, rng)

    def _named_layers(self) -> list[tuple[str, Layer]]:
        layers: list[tuple[str, Layer]] = [(f"enc{i}", b) for i, b in enumerate(self.encoders)]
        layers += [(f"up{i}", u) for i, u in enumerate(self.ups)]
        layers += [(f"dec{i}", b) for i, b in enumerate(self.decoders)]
        layers.append(("head", self.head))
        return layers

    def parameters(self) -> dict[str, np.ndarray]:
        """Live parameter arrays; updating them in place updates the model."""
        params = {}
        for prefix, layer in self._named_layers():
            params.update(layer.named_parameters(prefix))
        return params

    def gradients(self) -> dict[str, np.ndarray]:
        grads = {}
        for prefix, layer in self._named_layers():
            grads.update(layer.named_gradients(prefix))
        return grads

    def batchnorm_states(self) -> dict[str, BatchNormState]:
        states = {}
        for prefix, layer in self._named_layers():
            if isinstance(layer, ConvBlock):
                states.update(layer.batchnorm_states(prefix))
        return states

    def check_input(self, x: np.ndarray) -> None:
        cfg = self.config
        if x.ndim != 5 or x.shape[1] != cfg.in_channels:
            raise ShapeError(f"input must be shaped (N, {cfg.in_channels}, D, H, W), got {x.shape}")
        if any(n % cfg.divisor for n in x.shape[2:]):
            raise ShapeError(
                f"spatial dims {x.shape[2:]} must be divisible by {cfg.divisor} "
                f"for a {cfg.levels}-level network"
            )

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Logits (N, out_classes, D, H, W) for input (N, in_channels, D, H, W).

        Raises:
            ShapeError: wrong channel count or dims not divisible by 2^(levels-1)
            UninitializedStatsError: eval mode on a never-trained model
        """
        self.check_input(x)
        h = np.asarray(x, dtype=np.float64)
        skips = []
        for level, encoder in enumerate(self.encoders):
            h = encoder.forward(h, training)
            if level < len(self.pools):
                skips.append(h)
                h = self.pools[level].forward(h, training)

        for level in reversed(range(len(self.decoders))):
            h = self.ups[level].forward(h, training)
            h = np.concatenate([skips[level], h], axis=1)
            h = self.decoders[level].forward(h, training)
        return self.head.forward(h, training)

    def backward(self, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        """Backpropagate through the last training-mode forward; returns named gradients."""
        g = self.head.backward(grad_logits)
        skip_grads = []
        for level, decoder in enumerate(self.decoders):
            g = decoder.backward(g)
            width = self.config.features(level)
            skip_grads.append(g[:, :width])
            g = self.ups[level].backward(g[:, width:])

        for level in reversed(range(len(self.encoders))):
            if level < len(self.pools):
                g = self.pools[level].backward(g) + skip_grads[level]
            g = self.encoders[level].backward(g)
        return self.gradients()

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Eval-mode class probabilities; does not modify the model."""
        return softmax_voxelwise(self.forward(x, training=False))

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())


def unet_forward(model: UNetModel, x: np.ndarray, training: bool = False) -> np.ndarray:
    return model.forward(x, training=training)
