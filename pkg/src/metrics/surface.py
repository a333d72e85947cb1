"""Surface extraction and Hausdorff distances in millimetres."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from common.errors import DegenerateInputError
from volume_io.types import LabelMask

# Face neighbours only; a voxel is on the surface if any face touches background
_FACE_NEIGHBOURS = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True, eq=False)
class SurfacePointSet:
    """Boundary voxel centres as an (n, 3) array of (z, y, x) positions in mm."""

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)


PointsLike = SurfacePointSet | np.ndarray


def surface_voxels(mask: np.ndarray) -> np.ndarray:
    """Foreground voxels with a background (or out-of-bounds) face neighbour."""
    foreground = np.asarray(mask, dtype=bool)
    interior = ndimage.binary_erosion(foreground, structure=_FACE_NEIGHBOURS, border_value=0)
    return foreground & ~interior


def extract_surface(mask: LabelMask) -> SurfacePointSet:
    """Raises DegenerateInputError for an empty mask."""
    if mask.foreground_count == 0:
        raise DegenerateInputError("cannot extract the surface of an empty mask")
    indices = np.argwhere(surface_voxels(mask.data))
    return SurfacePointSet(indices * np.asarray(mask.spacing))


def _points(x: PointsLike) -> np.ndarray:
    points = x.points if isinstance(x, SurfacePointSet) else np.asarray(x, dtype=np.float64)
    points = points.reshape(-1, 3)
    if len(points) == 0:
        raise DegenerateInputError("Hausdorff distance needs two non-empty point sets")
    return points


def nearest_distances(x: PointsLike, y: PointsLike) -> np.ndarray:
    """Distance from each point of x to its nearest point of y."""
    xs, ys = _points(x), _points(y)
    _, nearest = cKDTree(ys).query(xs, k=1)
    # The tree only picks the neighbour; distances come from the coordinates
    return np.sqrt(((xs - ys[nearest]) ** 2).sum(axis=1))


def directed_hd(x: PointsLike, y: PointsLike) -> float:
    """One-sided Hausdorff distance: max over x of the distance to the nearest y."""
    return float(nearest_distances(x, y).max())


def hd(x: PointsLike, y: PointsLike) -> float:
    """Bidirectional Hausdorff distance."""
    return max(directed_hd(x, y), directed_hd(y, x))


def hd95(x: PointsLike, y: PointsLike) -> float:
    """Larger of the two directed 95th-percentile nearest distances (linear interpolation)."""
    return max(
        float(np.percentile(nearest_distances(x, y), 95)),
        float(np.percentile(nearest_distances(y, x), 95)),
    )
