"""Forward and backward passes of the network's building blocks.

All tensors are float64 arrays shaped (N, C, D, H, W). Each backward function
takes the upstream gradient plus whatever its forward returned or saw and
returns exact gradients of the forward map.
"""

import itertools

import numpy as np

from common.errors import DegenerateInputError, ShapeError

from .errors import UninitializedStatsError

SPATIAL_AXES = (2, 3, 4)
BATCH_AXES = (0, 2, 3, 4)


def _check_5d(name: str, x: np.ndarray) -> None:
    if x.ndim != 5:
        raise ShapeError(f"{name} must be shaped (N, C, D, H, W), got {x.shape}")


def _channel(v: np.ndarray) -> np.ndarray:
    return v.reshape(1, -1, 1, 1, 1)


# Convolution


def _check_conv(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None, padding: int):
    _check_5d("x", x)
    if weight.ndim != 5 or len(set(weight.shape[2:])) != 1:
        raise ShapeError(f"kernel must be shaped (Cout, Cin, k, k, k), got {weight.shape}")
    if x.shape[1] != weight.shape[1]:
        raise ShapeError(f"input has {x.shape[1]} channels, kernel expects {weight.shape[1]}")
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeError(f"bias must have shape ({weight.shape[0]},), got {bias.shape}")
    k = weight.shape[2]
    if any(n + 2 * padding < k for n in x.shape[2:]):
        raise ShapeError(f"spatial dims {x.shape[2:]} too small for a {k}^3 kernel")


def conv3d_forward(
    x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None, padding: int = 1
) -> np.ndarray:
    """Stride-1 cross-correlation with zero padding.

    Args:
        x: (N, Cin, D, H, W)
        weight: (Cout, Cin, k, k, k)
        bias: (Cout,)
        padding: Zero voxels added on every side; 1 preserves dims for 3^3 kernels

    Raises:
        ShapeError: channel or rank mismatch
    """
    _check_conv(x, weight, bias, padding)
    k = weight.shape[2]
    pad = ((0, 0), (0, 0)) + ((padding, padding),) * 3
    xp = np.pad(x, pad) if padding else x
    out_dims = tuple(n + 2 * padding - k + 1 for n in x.shape[2:])
    d, h, w = out_dims

    # Accumulated channels-last, one kernel tap at a time
    out = np.zeros((x.shape[0], d, h, w, weight.shape[0]), dtype=np.float64)
    for a, b, c in itertools.product(range(k), repeat=3):
        window = xp[:, :, a : a + d, b : b + h, c : c + w]
        out += np.tensordot(window, weight[:, :, a, b, c], axes=([1], [1]))
    out = np.moveaxis(out, -1, 1)
    if bias is not None:
        out += _channel(bias)
    return np.ascontiguousarray(out)


def conv3d_backward(
    grad_out: np.ndarray, x: np.ndarray, weight: np.ndarray, padding: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv3d_forward with respect to input, kernel and bias."""
    k = weight.shape[2]
    pad = ((0, 0), (0, 0)) + ((padding, padding),) * 3
    xp = np.pad(x, pad) if padding else x
    d, h, w = grad_out.shape[2:]

    grad_xp = np.zeros_like(xp, dtype=np.float64)
    grad_w = np.zeros_like(weight, dtype=np.float64)
    for a, b, c in itertools.product(range(k), repeat=3):
        window = xp[:, :, a : a + d, b : b + h, c : c + w]
        grad_w[:, :, a, b, c] = np.tensordot(grad_out, window, axes=(BATCH_AXES, BATCH_AXES))
        contribution = np.tensordot(grad_out, weight[:, :, a, b, c], axes=([1], [0]))
        grad_xp[:, :, a : a + d, b : b + h, c : c + w] += np.moveaxis(contribution, -1, 1)

    if padding:
        grad_x = grad_xp[:, :, padding:-padding, padding:-padding, padding:-padding]
    else:
        grad_x = grad_xp
    return np.ascontiguousarray(grad_x), grad_w, grad_out.sum(axis=BATCH_AXES)


# Transposed convolution (2^3 kernel, stride 2)


def _check_up(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None):
    _check_5d("x", x)
    if weight.ndim != 5 or weight.shape[2:] != (2, 2, 2):
        raise ShapeError(f"kernel must be shaped (Cin, Cout, 2, 2, 2), got {weight.shape}")
    if x.shape[1] != weight.shape[0]:
        raise ShapeError(f"input has {x.shape[1]} channels, kernel expects {weight.shape[0]}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError(f"bias must have shape ({weight.shape[1]},), got {bias.shape}")


def convtranspose3d_forward(
    x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None
) -> np.ndarray:
    """Upsample by 2 on every spatial axis.

    Each input voxel paints a 2^3 block: out[n, o, 2d+a, 2h+b, 2w+e] =
    sum_c x[n, c, d, h, w] * weight[c, o, a, b, e] + bias[o].
    """
    _check_up(x, weight, bias)
    n, _, d, h, w = x.shape
    cout = weight.shape[1]
    # (N, D, H, W, Cout, 2, 2, 2) -> (N, Cout, D, 2, H, 2, W, 2)
    blocks = np.tensordot(x, weight, axes=([1], [0])).transpose(0, 4, 1, 5, 2, 6, 3, 7)
    out = blocks.reshape(n, cout, 2 * d, 2 * h, 2 * w)
    if bias is not None:
        out = out + _channel(bias)
    return np.ascontiguousarray(out)


def _blocks(y: np.ndarray) -> np.ndarray:
    n, c, d2, h2, w2 = y.shape
    if d2 % 2 or h2 % 2 or w2 % 2:
        raise ShapeError(f"spatial dims must be even, got {y.shape[2:]}")
    return y.reshape(n, c, d2 // 2, 2, h2 // 2, 2, w2 // 2, 2)


def strided_conv3d(y: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Stride-2 2^3 convolution; the adjoint of convtranspose3d_forward without bias.

    Args:
        y: (N, Cout, 2D, 2H, 2W)
        weight: (Cin, Cout, 2, 2, 2), the transposed convolution's kernel

    Returns:
        (N, Cin, D, H, W)
    """
    _check_5d("y", y)
    if y.shape[1] != weight.shape[1]:
        raise ShapeError(f"input has {y.shape[1]} channels, kernel expects {weight.shape[1]}")
    out = np.tensordot(_blocks(y), weight, axes=([1, 3, 5, 7], [1, 2, 3, 4]))
    return np.ascontiguousarray(np.moveaxis(out, -1, 1))


def convtranspose3d_backward(
    grad_out: np.ndarray, x: np.ndarray, weight: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of convtranspose3d_forward with respect to input, kernel and bias."""
    grad_x = strided_conv3d(grad_out, weight)
    grad_w = np.tensordot(x, _blocks(grad_out), axes=([0, 2, 3, 4], [0, 2, 4, 6]))
    return grad_x, grad_w, grad_out.sum(axis=BATCH_AXES)


# Max pooling (2^3 window, stride 2)


def maxpool3d_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Window maximum and the flat in-window index it came from.

    Windows are flattened in (z, y, x) scan order so ties go to the first voxel.

    Raises:
        ShapeError: odd spatial dim
    """
    _check_5d("x", x)
    if any(n % 2 for n in x.shape[2:]):
        raise ShapeError(f"max pooling needs even spatial dims, got {x.shape[2:]}")
    n, c, d, h, w = x.shape
    windows = (
        x.reshape(n, c, d // 2, 2, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 6, 3, 5, 7)
        .reshape(n, c, d // 2, h // 2, w // 2, 8)
    )
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    return out, argmax


def maxpool3d_backward(
    grad_out: np.ndarray, argmax: np.ndarray, input_shape: tuple[int, ...]
) -> np.ndarray:
    """Route each window's gradient to the voxel that won the forward max."""
    n, c, d, h, w = input_shape
    routed = np.zeros((*grad_out.shape, 8), dtype=np.float64)
    np.put_along_axis(routed, argmax[..., None], grad_out[..., None], axis=-1)
    return (
        routed.reshape(n, c, d // 2, h // 2, w // 2, 2, 2, 2)
        .transpose(0, 1, 2, 5, 3, 6, 4, 7)
        .reshape(input_shape)
    )


# Batch normalization


class BatchNormState:
    """Running statistics of one batch-norm layer."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        self.running_mean = np.zeros(channels, dtype=np.float64)
        self.running_var = np.ones(channels, dtype=np.float64)
        self.momentum = momentum
        self.eps = eps
        self.initialized = False

    def update(self, mean: np.ndarray, var: np.ndarray, count: int) -> None:
        unbiased = var * count / (count - 1) if count > 1 else var
        m = self.momentum
        self.running_mean = (1 - m) * self.running_mean + m * mean
        self.running_var = (1 - m) * self.running_var + m * unbiased
        self.initialized = True


def batchnorm_forward(
    x: np.ndarray,
    gain: np.ndarray,
    bias: np.ndarray,
    state: BatchNormState,
    training: bool,
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray] | None]:
    """Per-channel standardisation followed by a learned scale and shift.

    Training mode normalises with batch statistics over (N, D, H, W) and
    updates the running statistics; eval mode reads the running statistics
    only.

    Returns:
        (output, cache) where cache = (x_hat, inv_std) in training mode, else None

    Raises:
        UninitializedStatsError: eval mode before any training step
    """
    _check_5d("x", x)
    if gain.shape != (x.shape[1],) or bias.shape != (x.shape[1],):
        raise ShapeError(f"gain and bias must have shape ({x.shape[1]},)")

    if not training:
        if not state.initialized:
            raise UninitializedStatsError("batch-norm running statistics are uninitialized")
        inv_std = 1.0 / np.sqrt(state.running_var + state.eps)
        x_hat = (x - _channel(state.running_mean)) * _channel(inv_std)
        return _channel(gain) * x_hat + _channel(bias), None

    mean = x.mean(axis=BATCH_AXES)
    var = x.var(axis=BATCH_AXES)
    inv_std = 1.0 / np.sqrt(var + state.eps)
    x_hat = (x - _channel(mean)) * _channel(inv_std)
    state.update(mean, var, x.size // x.shape[1])
    return _channel(gain) * x_hat + _channel(bias), (x_hat, inv_std)


def batchnorm_backward(
    grad_out: np.ndarray, cache: tuple[np.ndarray, np.ndarray], gain: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of training-mode batchnorm_forward for input, gain and bias."""
    x_hat, inv_std = cache
    count = x_hat.size // x_hat.shape[1]
    grad_gain = (grad_out * x_hat).sum(axis=BATCH_AXES)
    grad_bias = grad_out.sum(axis=BATCH_AXES)
    grad_x_hat = grad_out * _channel(gain)
    grad_x = (
        _channel(inv_std / count)
        * (
            count * grad_x_hat
            - _channel(grad_x_hat.sum(axis=BATCH_AXES))
            - x_hat * _channel((grad_x_hat * x_hat).sum(axis=BATCH_AXES))
        )
    )
    return grad_x, grad_gain, grad_bias


# Activations


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def softmax_voxelwise(logits: np.ndarray, axis: int = 1) -> np.ndarray:
    """Class probabilities per voxel, stabilised by subtracting the channel max."""
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def softmax_backward(grad_probs: np.ndarray, probs: np.ndarray, axis: int = 1) -> np.ndarray:
    """Gradient with respect to the logits given the gradient w.r.t. probabilities."""
    return probs * (grad_probs - (grad_probs * probs).sum(axis=axis, keepdims=True))


# Loss


def dice_loss(p: np.ndarray, g: np.ndarray) -> tuple[float, np.ndarray]:
    """Soft Dice loss 1 - 2*sum(p*g) / (sum(p^2) + sum(g^2)) and its gradient.

    Computed over the whole array (all voxels of all patches in a batch).

    Args:
        p: Foreground probabilities in [0, 1]
        g: Binary target of the same shape

    Raises:
        ShapeError: p and g shapes differ
        DegenerateInputError: sum(p^2) + sum(g^2) == 0
    """
    if p.shape != g.shape:
        raise ShapeError(f"prediction shape {p.shape} != target shape {g.shape}")
    p = np.asarray(p, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    intersection = float((p * g).sum())
    denominator = float((p * p).sum() + (g * g).sum())
    if denominator == 0.0:
        raise DegenerateInputError("Dice denominator is zero (empty prediction and target)")

    loss = 1.0 - 2.0 * intersection / denominator
    grad = -2.0 * (g * denominator - 2.0 * p * intersection) / denominator**2
    return loss, grad
