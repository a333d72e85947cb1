import numpy as np
import pytest

FD_STEP = 1e-4


def numerical_gradient(f, array: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central differences of scalar f() with respect to every entry of `array` (mutated in place)."""
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = f()
        flat[i] = original - step
        minus = f()
        flat[i] = original
        grad.reshape(-1)[i] = (plus - minus) / (2 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


@pytest.fixture
def gradcheck():
    """Return a function comparing an analytic gradient with central differences."""

    def check(f, array, analytic, tolerance=1e-3, step=FD_STEP):
        numeric = numerical_gradient(f, array, step)
        error = relative_error(analytic, numeric)
        assert error < tolerance, f"relative error {error:.2e} >= {tolerance:.0e}"

    return check


@pytest.fixture
def rng():
    return np.random.default_rng(42)
