import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_prox(pen, x, half_width=20.0, points=400001):
    """Grid minimizer of ``(y - x)^2 / 2 + s(y)``; independent of the library's prox."""
    y = np.linspace(x - half_width, x + half_width, points)
    with np.errstate(invalid="ignore", over="ignore"):
        f = 0.5 * (y - x) ** 2 + np.asarray(pen(y), dtype=float)
    f = np.where(np.isnan(f), np.inf, f)
    return float(y[np.argmin(f)])
