from __future__ import annotations

import time
import typing as t

import numpy as np

if t.TYPE_CHECKING:
    from collections.abc import Sequence


class ExponentialFit(t.NamedTuple):
    rate: float
    intercept: float
    r_squared: float
    rms: float


def now() -> int:
    return int(time.time() * 1000)


def format_float(value: float) -> str:
    """Fixed 17 significant digits, enough to round trip any double."""
    return f"{value:.17g}"


def spawn_generators(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators, one per task, derived from a single seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def fit_exponential(times: Sequence[float], values: Sequence[float]) -> ExponentialFit:
    """
    Least-squares fit of log(values) = intercept + rate * times.

    Values must be positive. rms is the root mean square residual in log space.
    """
    x = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError(f"Need at least two points to fit, got {x.size}")
    if np.any(y <= 0):
        raise ValueError("Exponential fit requires positive values")
    log_y = np.log(y)
    rate, intercept = np.polyfit(x, log_y, 1)
    residuals = log_y - (intercept + rate * x)
    total = float(np.sum((log_y - log_y.mean()) ** 2))
    r_squared = 1.0 if total == 0 else 1.0 - float(np.sum(residuals**2)) / total
    rms = float(np.sqrt(np.mean(residuals**2)))
    return ExponentialFit(float(rate), float(intercept), r_squared, rms)
