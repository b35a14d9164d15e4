"""Sub-pixel boundary refinement from positional KL-divergence signals.

For each side of the coarse localization, the gray-level distribution of
the accumulated column strip is compared against the centre column's
distribution. The resulting divergence signal is weighted by a Gaussian
prior centred mid-domain (sigma = domain/6, keeping 99.7% of the weight
inside the search region), and the boundary is read off at the dominant
stationary point. Around that point the two secant lines are intersected,
which recovers the kink of the underlying piecewise-smooth signal at
sub-column resolution; strip samples describe contents up to the column's
inner face, so strip-mode positions carry a half-column shift.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import StageError
from .frames import GrayFrame
from .localization import (
    BoundarySet,
    column_mass_fraction,
    column_sum_signal,
    find_flank_peaks,
    foreground_mask,
    gmm_fit,
    locate_center,
    mass_midpoint,
)
from .signals import moving_average


@dataclass(frozen=True)
class GrayDistribution:
    """Epsilon-smoothed probability masses over uniform intensity bins."""

    bins: np.ndarray
    bin_count: int
    epsilon: float

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=float)
        if bins.shape != (self.bin_count,):
            raise ValueError("bins must have bin_count entries")
        if np.any(bins < 0):
            raise ValueError("probability masses must be non-negative")
        if abs(bins.sum() - 1.0) > 1e-9:
            raise ValueError("probability masses must sum to 1")
        object.__setattr__(self, "bins", bins)


def _distribution_from_counts(
    counts: np.ndarray, bin_count: int, epsilon: float
) -> GrayDistribution:
    total = counts.sum()
    if total == 0:
        raise ValueError("empty column range")
    masses = (counts + epsilon) / (total + epsilon * bin_count)
    return GrayDistribution(masses, bin_count, epsilon)


def gray_distribution(
    frame: GrayFrame,
    col_lo: int,
    col_hi: int,
    bin_count: int = 32,
    epsilon: float = 1e-6,
) -> GrayDistribution:
    """Histogram of all pixels in columns [col_lo, col_hi], smoothed."""
    if not 0 <= col_lo <= col_hi < frame.width:
        raise ValueError(f"bad column range [{col_lo}, {col_hi}]")
    if bin_count < 1 or bin_count > 256:
        raise ValueError("bin_count must lie in [1, 256]")
    strip = frame.pixels[:, col_lo : col_hi + 1]
    bins = strip.astype(np.int64) * bin_count // 256
    counts = np.bincount(bins.ravel(), minlength=bin_count).astype(float)
    return _distribution_from_counts(counts, bin_count, epsilon)


def kl_divergence(p: GrayDistribution, q: GrayDistribution) -> float:
    """D(p || q) in nats. Requires q > 0 wherever p > 0."""
    if p.bin_count != q.bin_count:
        raise ValueError("bin counts differ")
    pm, qm = p.bins, q.bins
    support = pm > 0
    if np.any(qm[support] <= 0):
        raise ValueError("q must be fully supported where p has mass")
    return float((pm[support] * np.log(pm[support] / qm[support])).sum())


@dataclass(frozen=True)
class KlSignal:
    """Positional divergence signal over one side's column domain."""

    columns: np.ndarray          # absolute column indices, ascending
    raw: np.ndarray              # L(d) over the domain
    side: str                    # "left" | "right"
    gl_mode: str                 # "strip" | "column"
    weighted: np.ndarray | None = None
    mu: float | None = None
    sigma: float | None = None


def _per_column_bins(frame: GrayFrame, lo: int, hi: int, bin_count: int) -> np.ndarray:
    """(n_cols, bin_count) histogram counts for columns lo..hi."""
    strip = frame.pixels[:, lo : hi + 1]
    bins = strip.astype(np.int64) * bin_count // 256
    counts = np.zeros((hi - lo + 1, bin_count), dtype=float)
    cols = np.repeat(np.arange(hi - lo + 1), frame.height)
    np.add.at(counts, (cols, bins.T.ravel()), 1.0)
    return counts


def kl_signal(
    frame: GrayFrame,
    bounds: BoundarySet,
    side: str,
    bin_count: int = 32,
    epsilon: float = 1e-6,
    gl_mode: str = "strip",
) -> KlSignal:
    """L(d) for one side: divergence of the strip at d from the centre column.

    In strip mode the distribution at d accumulates columns from the
    outer flank up to d (mirrored for the right side); column mode uses
    the single column d instead.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if gl_mode not in ("strip", "column"):
        raise ValueError("gl_mode must be 'strip' or 'column'")
    lo, hi = (
        (bounds.d_left, bounds.d_center)
        if side == "left"
        else (bounds.d_center, bounds.d_right)
    )
    center = _distribution_from_counts(
        _per_column_bins(frame, bounds.d_center, bounds.d_center, bin_count)[0],
        bin_count,
        epsilon,
    )
    counts = _per_column_bins(frame, lo, hi, bin_count)
    if gl_mode == "strip":
        counts = np.cumsum(counts, axis=0) if side == "left" else np.cumsum(counts[::-1], axis=0)[::-1]
    raw = np.array(
        [
            kl_divergence(_distribution_from_counts(c, bin_count, epsilon), center)
            for c in counts
        ]
    )
    return KlSignal(np.arange(lo, hi + 1), raw, side, gl_mode)


def apply_gaussian_weight(signal: KlSignal) -> KlSignal:
    """Multiply L(d) by a normal pdf centred mid-domain, sigma = domain/6."""
    cols = signal.columns
    if cols.size < 2:
        raise ValueError("zero-width domain: centre coincides with the flank")
    mu = (cols[0] + cols[-1]) / 2.0
    sigma = (cols[-1] - cols[0]) / 6.0
    pdf = np.exp(-0.5 * ((cols - mu) / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))
    return replace(signal, weighted=pdf * signal.raw, mu=mu, sigma=sigma)


@dataclass(frozen=True)
class RefinedBoundary:
    column: float
    low_confidence: bool


def _secant_intersection(s: np.ndarray, j: int) -> float:
    """Kink position near extremum j from the two neighbouring secants."""
    if j - 1 < 0 or j + 2 >= s.size:
        return float(j)
    m_a = s[j] - s[j - 1]
    m_b = s[j + 2] - s[j + 1]
    if m_a == m_b:
        return float(j)
    x = (s[j + 1] - s[j] + m_a * j - m_b * (j + 1)) / (m_a - m_b)
    return float(np.clip(x, j - 1.0, j + 1.0))


def refine_boundary(signal: KlSignal) -> RefinedBoundary:
    """Boundary at the dominant stationary point of the weighted signal.

    Scanning runs from the domain's outer end toward the centre. Among
    the stationary points (sign changes of the discrete difference) the
    one with the largest weighted value wins; a monotone signal falls
    back to the argmax with the low-confidence flag set.

    The chosen index is then localized at sub-column resolution by
    intersecting the secants on either side of the raw signal's kink;
    the weight only selects, so its curvature cannot bias the position.
    """
    if signal.weighted is None:
        raise ValueError("apply_gaussian_weight before refining")
    cols = signal.columns
    if cols.size < 3:
        raise ValueError("domain too short to refine")
    reverse = signal.side != "left"
    s = signal.weighted[::-1] if reverse else signal.weighted
    raw = signal.raw[::-1] if reverse else signal.raw

    diffs = np.diff(s)
    candidates = [
        j
        for j in range(1, s.size - 1)
        if (diffs[j - 1] > 0 >= diffs[j]) or (diffs[j - 1] < 0 <= diffs[j])
    ]
    if candidates:
        j_star = max(candidates, key=lambda j: (s[j], -j))
        x = _secant_intersection(raw, j_star)
        low_confidence = False
        if signal.gl_mode == "strip":
            x += 0.5  # strip samples extend to the column's inner face
    else:
        x = float(np.argmax(s))
        low_confidence = True
    x = float(np.clip(x, 0.0, s.size - 1.0))

    if signal.side == "left":
        column = float(cols[0]) + x
    else:
        column = float(cols[-1]) - x
    return RefinedBoundary(column, low_confidence)


@dataclass(frozen=True)
class Diameter:
    value: float
    units: str  # "mm" | "px"


def map_to_mm(
    refined_left: float, refined_right: float, mm_per_pixel: float | None
) -> Diameter:
    """Linear pixel-to-millimetre mapping; falls back to pixels uncalibrated."""
    if not refined_right > refined_left:
        raise ValueError("right edge must exceed left edge")
    width_px = refined_right - refined_left
    if mm_per_pixel is None:
        return Diameter(width_px, "px")
    if mm_per_pixel <= 0:
        raise ValueError("mm_per_pixel must be strictly positive")
    return Diameter(width_px * mm_per_pixel, "mm")


@dataclass(frozen=True)
class MeasureParams:
    gmm_components: int = 2
    gmm_max_iters: int = 100
    gmm_tol: float = 1e-6
    gmm_seed: int = 0
    gmm_stride: int = 4
    smooth_window: int = 5
    kl_bins: int = 32
    kl_epsilon: float = 1e-6
    kl_mode: str = "strip"


@dataclass(frozen=True)
class FrameMeasurement:
    """Everything the boundary pipeline derives from one frame."""

    bounds: BoundarySet
    start_column: int
    diameter_px: float
    diameter_mm: float | None
    units: str
    low_confidence_left: bool
    low_confidence_right: bool
    gmm_iterations: int
    gmm_log_likelihood: float
    v_signal: np.ndarray | None = None
    kappa: np.ndarray | None = None
    kl_left: KlSignal | None = None
    kl_right: KlSignal | None = None


def measure_onsd(
    frame: GrayFrame,
    params: MeasureParams = MeasureParams(),
    bounds: BoundarySet | None = None,
    keep_signals: bool = False,
) -> FrameMeasurement:
    """Run localization and refinement on a single frame.

    Every stage failure is re-raised as a StageError naming the stage.
    Passing precomputed ``bounds`` skips the coarse localization.
    """

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValueError as exc:
            raise StageError(name, str(exc)) from exc

    v = column_sum_signal(frame)
    v_smooth = moving_average(v, params.smooth_window)
    kappa = None
    d_start = -1
    if bounds is None:
        samples = frame.pixels.ravel()[:: params.gmm_stride]
        model = stage(
            "gmm_fit",
            gmm_fit,
            samples,
            params.gmm_components,
            params.gmm_max_iters,
            params.gmm_tol,
            params.gmm_seed,
        )
        mask = stage("foreground_mask", foreground_mask, frame, model)
        kappa = stage("mass_midpoint", column_mass_fraction, mask)
        d_start = stage("mass_midpoint", mass_midpoint, mask)
        d_center = stage("locate_center", locate_center, v_smooth, d_start)
        d_left, d_right = stage(
            "find_flank_peaks", find_flank_peaks, v_smooth, d_center, params.smooth_window
        )
        bounds = stage("boundary_set", BoundarySet, d_left, d_center, d_right)
        gmm_iterations = model.iterations
        gmm_ll = model.log_likelihood
    else:
        gmm_iterations = 0
        gmm_ll = float("nan")

    left_sig = stage(
        "kl_signal",
        kl_signal,
        frame,
        bounds,
        "left",
        params.kl_bins,
        params.kl_epsilon,
        params.kl_mode,
    )
    right_sig = stage(
        "kl_signal",
        kl_signal,
        frame,
        bounds,
        "right",
        params.kl_bins,
        params.kl_epsilon,
        params.kl_mode,
    )
    left_sig = stage("gaussian_weight", apply_gaussian_weight, left_sig)
    right_sig = stage("gaussian_weight", apply_gaussian_weight, right_sig)
    left = stage("refine_boundary", refine_boundary, left_sig)
    right = stage("refine_boundary", refine_boundary, right_sig)
    bounds = stage("boundary_set", bounds.refined, left.column, right.column)

    diameter = stage(
        "map_to_mm", map_to_mm, left.column, right.column, frame.mm_per_pixel
    )
    return FrameMeasurement(
        bounds=bounds,
        start_column=d_start,
        diameter_px=bounds.refined_right - bounds.refined_left,
        diameter_mm=diameter.value if diameter.units == "mm" else None,
        units=diameter.units,
        low_confidence_left=left.low_confidence,
        low_confidence_right=right.low_confidence,
        gmm_iterations=gmm_iterations,
        gmm_log_likelihood=gmm_ll,
        v_signal=v if keep_signals else None,
        kappa=kappa if keep_signals else None,
        kl_left=left_sig if keep_signals else None,
        kl_right=right_sig if keep_signals else None,
    )
