"""Softmax + soft Dice loss on the foreground channel."""

import numpy as np

from common.errors import ShapeError

from .functional import dice_loss, softmax_backward, softmax_voxelwise

FOREGROUND = 1


def segmentation_loss(logits: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Dice loss of the softmax foreground channel against a one-hot target.

    Args:
        logits: (N, 2, D, H, W) network output
        target: (N, 2, D, H, W) one-hot ground truth

    Returns:
        (loss, gradient with respect to the logits)
    """
    if logits.shape != target.shape:
        raise ShapeError(f"logits shape {logits.shape} != target shape {target.shape}")
    probs = softmax_voxelwise(logits)
    loss, grad_p = dice_loss(probs[:, FOREGROUND], target[:, FOREGROUND])
    grad_probs = np.zeros_like(probs)
    grad_probs[:, FOREGROUND] = grad_p
    return loss, softmax_backward(grad_probs, probs)
