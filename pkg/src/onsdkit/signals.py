"""Shared 1-D signal helpers: moving averages and plateau-aware peaks."""

from __future__ import annotations

import numpy as np


def moving_average(series: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with shrinking symmetric windows at the edges.

    ``window`` must be odd and no longer than the series. Position ``i``
    averages over ``i ± h`` where ``h`` shrinks near the edges so the
    window stays symmetric (the first and last samples pass through).
    """
    series = np.asarray(series, dtype=float)
    n = series.size
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    if window > n:
        raise ValueError(f"window {window} exceeds series length {n}")
    if window == 1:
        return series.copy()
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = series[i - h : i + h + 1].mean()
    return out


def peak_runs(series: np.ndarray) -> list[tuple[int, int]]:
    """Interior local-maximum plateaus of a series.

    Returns ``(start, end)`` index pairs (inclusive) of maximal runs of
    equal values that are strictly higher than both neighbouring values.
    Runs touching either end of the series are excluded, so endpoints
    never qualify as peaks.
    """
    series = np.asarray(series, dtype=float)
    n = series.size
    runs = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and series[j + 1] == series[i]:
            j += 1
        if i > 0 and j < n - 1 and series[i - 1] < series[i] and series[j + 1] < series[j]:
            runs.append((i, j))
        i = j + 1
    return runs
