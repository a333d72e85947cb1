"""Common utilities shared across the segmentation toolkit."""

from common.env import Environment, env

__all__ = ["Environment", "env"]
