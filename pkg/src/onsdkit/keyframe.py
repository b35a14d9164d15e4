"""Information-entropy keyframe extraction and series preprocessing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import GrayFrame
from .signals import moving_average, peak_runs

PROBABILITY_TOL = 1e-9


def entropy(probabilities) -> float:
    """Shannon entropy in bits, with the 0*log(0) terms dropped."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probabilities must be a non-empty 1-D array")
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > PROBABILITY_TOL:
        raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def frame_entropy(frame: GrayFrame) -> float:
    """Entropy in bits of the normalized 256-bin intensity histogram."""
    counts = np.bincount(frame.pixels.ravel(), minlength=256)
    return entropy(counts / counts.sum())


def smooth(series, window: int) -> np.ndarray:
    """Centered moving average; edges use shrinking symmetric windows."""
    return moving_average(series, window)


def difference(series, order: int) -> np.ndarray:
    """First- or second-order forward difference of a series."""
    series = np.asarray(series, dtype=float)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if series.size <= order:
        raise ValueError(f"series of length {series.size} too short for order {order}")
    return np.diff(series, n=order)


@dataclass(frozen=True)
class KeyframeResult:
    """Selected keyframe indices; ``shortfall`` marks too few peaks found."""

    indices: tuple[int, ...]
    shortfall: bool


def extract_keyframes(
    entropy_series,
    count: int = 2,
    min_separation: int = 5,
    smoothing_window: int = 1,
) -> KeyframeResult:
    """Pick the highest entropy peaks, keeping them ``min_separation`` apart.

    Peaks are interior local maxima of the (optionally smoothed) series,
    ranked by height with ties broken toward the lower index, then
    admitted greedily subject to the pairwise separation constraint. When
    fewer than ``count`` peaks qualify, all found are returned with the
    shortfall flag set.
    """
    series = np.asarray(entropy_series, dtype=float)
    if count < 1:
        raise ValueError("count must be >= 1")
    if series.size < count:
        raise ValueError("series shorter than requested keyframe count")
    smoothed = moving_average(series, smoothing_window)

    candidates = []
    for start, end in peak_runs(smoothed):
        idx = start  # plateau resolves to its first index
        candidates.append((-smoothed[idx], idx))
    candidates.sort()

    chosen: list[int] = []
    for _, idx in candidates:
        if len(chosen) == count:
            break
        if all(abs(idx - c) >= min_separation for c in chosen):
            chosen.append(idx)
    return KeyframeResult(tuple(chosen), shortfall=len(chosen) < count)
