"""Coarse sheath localization from column-sum signals and a GMM foreground.

The frame reduces to a per-column intensity sum v(n). A two-component
intensity mixture separates bright fat from dark tissue; the cumulative
column mass of the fat mask supplies a starting column, from which a
single-step descent walk finds the interior trough of v(n) and a
plateau-aware scan finds the first flank peak on each side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .frames import BinaryMask, GrayFrame
from .signals import moving_average, peak_runs

VARIANCE_FLOOR = 1e-3


def column_sum_signal(frame: GrayFrame) -> np.ndarray:
    """v(n): the sum of each column's pixel intensities."""
    return frame.pixels.sum(axis=0, dtype=np.int64).astype(float)


@dataclass(frozen=True)
class GmmModel:
    """1-D Gaussian mixture fitted by EM."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    iterations: int
    log_likelihood: float
    log_likelihood_history: tuple[float, ...]

    @property
    def components(self) -> int:
        return self.means.size


def _log_densities(data: np.ndarray, weights, means, variances) -> np.ndarray:
    """Per-sample, per-component log of weight * normal pdf."""
    x = data[:, np.newaxis]
    return (
        np.log(weights)[np.newaxis, :]
        - 0.5 * np.log(2.0 * np.pi * variances)[np.newaxis, :]
        - 0.5 * (x - means[np.newaxis, :]) ** 2 / variances[np.newaxis, :]
    )


def gmm_fit(
    intensities,
    components: int = 2,
    max_iters: int = 100,
    tol: float = 1e-6,
    seed: int | None = None,
) -> GmmModel:
    """Fit a 1-D Gaussian mixture by EM with quantile initialization.

    Initialization is deterministic (means at the (i+0.5)/C intensity
    quantiles), so the fit depends only on the data; ``seed`` is accepted
    for interface stability but unused. Variances are floored at
    ``VARIANCE_FLOOR`` to prevent component collapse.
    """
    del seed
    data = np.asarray(intensities, dtype=float).ravel()
    if data.size == 0:
        raise ValueError("no intensity samples")
    if np.unique(data).size < components:
        raise ValueError(
            f"need at least {components} distinct intensity values; "
            "fit a single component instead"
        )

    weights = np.full(components, 1.0 / components)
    means = np.quantile(data, (np.arange(components) + 0.5) / components)
    variances = np.maximum(np.var(data), VARIANCE_FLOOR) * np.ones(components)

    history = []
    previous = -np.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        log_joint = _log_densities(data, weights, means, variances)
        log_norm = logsumexp(log_joint, axis=1)
        log_likelihood = float(log_norm.sum())
        history.append(log_likelihood)

        resp = np.exp(log_joint - log_norm[:, np.newaxis])
        mass = resp.sum(axis=0)
        mass = np.maximum(mass, np.finfo(float).tiny)
        weights = mass / data.size
        means = (resp * data[:, np.newaxis]).sum(axis=0) / mass
        variances = (resp * (data[:, np.newaxis] - means[np.newaxis, :]) ** 2).sum(
            axis=0
        ) / mass
        variances = np.maximum(variances, VARIANCE_FLOOR)

        if log_likelihood - previous < tol and iterations > 1:
            break
        previous = log_likelihood

    return GmmModel(
        weights=weights,
        means=means,
        variances=variances,
        iterations=iterations,
        log_likelihood=history[-1],
        log_likelihood_history=tuple(history),
    )


def foreground_mask(frame: GrayFrame, model: GmmModel) -> BinaryMask:
    """Posterior >= 0.5 classification of the brighter mixture component."""
    if model.components != 2:
        raise ValueError("foreground extraction needs a 2-component model")
    fg = int(np.argmax(model.means))
    levels = np.arange(256, dtype=float)
    log_joint = _log_densities(levels, model.weights, model.means, model.variances)
    lut = np.where(log_joint[:, fg] >= log_joint[:, 1 - fg], 255, 0).astype(np.uint8)
    return BinaryMask(lut[frame.pixels])


def column_mass_fraction(mask: BinaryMask) -> np.ndarray:
    """kappa(n): cumulative fraction of foreground mass up to column n."""
    col_mass = (mask.bits == 255).sum(axis=0).astype(float)
    total = col_mass.sum()
    if total == 0:
        raise ValueError("mask has no foreground pixels")
    return np.cumsum(col_mass) / total


def mass_midpoint(mask: BinaryMask) -> int:
    """Smallest column where the cumulative foreground mass reaches half."""
    kappa = column_mass_fraction(mask)
    return int(np.searchsorted(kappa, 0.5, side="left"))


def locate_center(v: np.ndarray, d_start: int) -> int:
    """Walk downhill on v from d_start to the trough of its basin.

    One step per iteration in the descending direction, capped at len(v)
    steps; stops at the first interior discrete local minimum. Reaching
    either end of the signal raises (no interior trough).
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    if not 0 < d_start < n - 1:
        raise ValueError(f"start column {d_start} must be interior to (0, {n - 1})")

    d = d_start
    for _ in range(n):
        if v[d] <= v[d - 1] and v[d] <= v[d + 1]:
            return d
        if v[d + 1] < v[d]:
            d += 1
        else:
            d -= 1
        if d <= 0 or d >= n - 1:
            raise ValueError("no interior trough: walk reached the signal end")
    raise ValueError("no interior trough found within the step cap")


def find_flank_peaks(
    v: np.ndarray, d_center: int, smooth_window: int = 5
) -> tuple[int, int]:
    """First interior peak of the smoothed signal on each side of the trough.

    Plateau peaks resolve to the plateau index nearest ``d_center``. A
    side without any interior peak raises, naming the side.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    if not 0 < d_center < n - 1:
        raise ValueError("d_center must be interior")
    smoothed = moving_average(v, min(smooth_window, n if n % 2 else n - 1))
    runs = peak_runs(smoothed)

    left_candidates = [end for start, end in runs if end < d_center]
    right_candidates = [start for start, end in runs if start > d_center]
    if not left_candidates:
        raise ValueError(f"no interior peak on the left of column {d_center}")
    if not right_candidates:
        raise ValueError(f"no interior peak on the right of column {d_center}")
    return max(left_candidates), min(right_candidates)


@dataclass(frozen=True)
class BoundarySet:
    """Coarse flank/centre columns plus, once refined, sub-pixel edges."""

    d_left: int
    d_center: int
    d_right: int
    refined_left: float | None = None
    refined_right: float | None = None

    def __post_init__(self):
        if not self.d_left < self.d_center < self.d_right:
            raise ValueError(
                f"need d_left < d_center < d_right, got "
                f"{self.d_left}, {self.d_center}, {self.d_right}"
            )
        if self.refined_left is not None and self.refined_right is not None:
            if not (
                self.d_left <= self.refined_left < self.refined_right <= self.d_right
            ):
                raise ValueError("refined edges must be ordered within the coarse ones")

    def refined(self, left: float, right: float) -> "BoundarySet":
        return BoundarySet(self.d_left, self.d_center, self.d_right, left, right)
