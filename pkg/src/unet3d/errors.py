"""Errors raised by the network, its training loop and checkpoints."""

from common.errors import FemurSegError


class UninitializedStatsError(FemurSegError):
    """Batch-norm running statistics used before any training step."""

    pass


class CheckpointError(FemurSegError):
    """Checkpoint file is truncated, corrupted or not a checkpoint at all."""

    pass


class CompatibilityError(CheckpointError):
    """Checkpoint parameters do not match the expected network configuration."""

    pass
