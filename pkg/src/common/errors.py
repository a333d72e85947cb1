"""Exception hierarchy shared by all femur-seg packages."""


class FemurSegError(Exception):
    """Base exception for toolkit failures."""

    pass


class ConfigurationError(FemurSegError):
    """Invalid run, training, tiling or augmentation configuration."""

    pass


class DegenerateInputError(FemurSegError):
    """Input has no usable content (constant volume, empty mask, zero denominator)."""

    pass


class GeometryError(FemurSegError):
    """Grid dimensions or geometry records are inconsistent."""

    pass


class ShapeError(FemurSegError):
    """Array shapes do not match what an operation requires."""

    pass
