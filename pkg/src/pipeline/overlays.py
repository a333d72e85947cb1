"""Plain-text PGM/PPM slice images for visual audit of masks and augmentation."""

from pathlib import Path

import numpy as np
from scipy import ndimage

GREEN = (0, 255, 0)
RED = (255, 0, 0)
YELLOW = (255, 255, 0)

_EDGE_NEIGHBOURS = ndimage.generate_binary_structure(2, 1)


def central_axial(data: np.ndarray) -> np.ndarray:
    """The z = D // 2 slice of a (D, H, W) grid."""
    return np.asarray(data)[data.shape[0] // 2]


def to_gray8(image: np.ndarray) -> np.ndarray:
    """Min-max scale a 2D slice to 0..255; a constant slice becomes black."""
    image = np.asarray(image, dtype=np.float64)
    low, high = image.min(), image.max()
    if high == low:
        return np.zeros(image.shape, dtype=np.uint8)
    return np.rint((image - low) / (high - low) * 255).astype(np.uint8)


def contour(mask: np.ndarray) -> np.ndarray:
    """In-plane boundary pixels of a 2D mask."""
    mask = np.asarray(mask, dtype=bool)
    return mask & ~ndimage.binary_erosion(mask, structure=_EDGE_NEIGHBOURS, border_value=0)


def overlay(
    image: np.ndarray | None, truth: np.ndarray, prediction: np.ndarray
) -> np.ndarray:
    """RGB slice: ground-truth contour green, prediction contour red, shared contour yellow."""
    if image is None:
        gray = np.zeros(truth.shape, dtype=np.uint8)
    else:
        gray = to_gray8(image)
    rgb = np.repeat(gray[..., None], 3, axis=-1)
    truth_edge, pred_edge = contour(truth), contour(prediction)
    rgb[truth_edge & ~pred_edge] = GREEN
    rgb[pred_edge & ~truth_edge] = RED
    rgb[truth_edge & pred_edge] = YELLOW
    return rgb


def _rows(values: np.ndarray) -> str:
    return "\n".join(" ".join(str(int(v)) for v in row) for row in values) + "\n"


def write_pgm(path: str | Path, image: np.ndarray) -> Path:
    """Write a 2D uint8 array as an ASCII (P2) graymap."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise ValueError(f"PGM needs a 2D image, got shape {image.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = image.shape
    path.write_text(f"P2\n{width} {height}\n255\n" + _rows(image), encoding="ascii")
    return path


def write_ppm(path: str | Path, image: np.ndarray) -> Path:
    """Write an (H, W, 3) uint8 array as an ASCII (P3) pixmap."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"PPM needs an (H, W, 3) image, got shape {image.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width, _ = image.shape
    path.write_text(
        f"P3\n{width} {height}\n255\n" + _rows(image.reshape(height, width * 3)),
        encoding="ascii",
    )
    return path


def read_pnm(path: str | Path) -> np.ndarray:
    """Read a P2 or P3 file written by this module."""
    tokens = Path(path).read_text(encoding="ascii").split()
    magic, width, height, _ = tokens[:4]
    values = np.array([int(t) for t in tokens[4:]], dtype=np.uint8)
    if magic == "P2":
        return values.reshape(int(height), int(width))
    if magic == "P3":
        return values.reshape(int(height), int(width), 3)
    raise ValueError(f"{path}: unsupported image type {magic}")
