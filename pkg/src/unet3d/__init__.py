"""Patch-based 3D u-net with hand-written forward/backward passes, Dice loss and Adam."""

from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .config import TrainConfig, UNetConfig
from .errors import CheckpointError, CompatibilityError, UninitializedStatsError
from .functional import (
    BatchNormState,
    batchnorm_backward,
    batchnorm_forward,
    conv3d_backward,
    conv3d_forward,
    convtranspose3d_backward,
    convtranspose3d_forward,
    dice_loss,
    maxpool3d_backward,
    maxpool3d_forward,
    softmax_backward,
    softmax_voxelwise,
    strided_conv3d,
)
from .inference import Segmenter, predict_probabilities, predict_volume
from .loss import segmentation_loss
from .model import AdamState, UNetModel, unet_forward
from .optim import adam_step
from .training import EpochRecord, TrainingHistory, sample_batch, train, train_step

__all__ = [
    "AdamState",
    "BatchNormState",
    "CheckpointError",
    "CompatibilityError",
    "EpochRecord",
    "Segmenter",
    "TrainConfig",
    "TrainingHistory",
    "UNetConfig",
    "UNetModel",
    "UninitializedStatsError",
    "adam_step",
    "batchnorm_backward",
    "batchnorm_forward",
    "conv3d_backward",
    "conv3d_forward",
    "convtranspose3d_backward",
    "convtranspose3d_forward",
    "decode_checkpoint",
    "dice_loss",
    "encode_checkpoint",
    "load_checkpoint",
    "maxpool3d_backward",
    "maxpool3d_forward",
    "predict_probabilities",
    "predict_volume",
    "sample_batch",
    "save_checkpoint",
    "segmentation_loss",
    "softmax_backward",
    "softmax_voxelwise",
    "strided_conv3d",
    "train",
    "train_step",
    "unet_forward",
]
