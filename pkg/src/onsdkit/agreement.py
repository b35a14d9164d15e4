"""Agreement statistics between two measurement series.

Implements the relative mean error, the deviation norm as printed in the
project conventions (the l2 norm scaled by 1/n) alongside a conventional
mean-squared-error, ICC(2,1) with its 95% confidence interval, the
Bland-Altman bias and limits of agreement, and Cohen's d.

ICC follows the two-way random-effects, absolute-agreement, single-rater
model. Confidence bounds use the F-distribution with Satterthwaite
degrees of freedom, per Shrout & Fleiss (1979) / McGraw & Wong (1996).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import f as f_dist

LOA_FACTOR = 1.96


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("series must be 1-D")
    if a.size != b.size:
        raise ValueError(f"series lengths differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("series must be non-empty")
    return a, b


def mean_error(candidate, reference) -> float:
    """Mean relative error, in percent: 100/n * sum |1 - a_k/b_k|.

    ``reference`` is the denominator series and must be non-zero.
    """
    a, b = _paired(candidate, reference)
    if np.any(b == 0):
        raise ValueError("reference series contains zeros")
    return float(np.abs(1.0 - a / b).mean() * 100.0)


def mse(a, b) -> float:
    """Deviation norm as printed: the l2 norm of (a - b) scaled by 1/n."""
    a, b = _paired(a, b)
    return float(np.linalg.norm(a - b) / a.size)


def mse_conventional(a, b) -> float:
    """Textbook mean of squared differences, kept alongside for sanity."""
    a, b = _paired(a, b)
    return float(((a - b) ** 2).mean())


@dataclass(frozen=True)
class IccResult:
    value: float
    ci_low: float
    ci_high: float
    degenerate: bool = False


def icc(a, b, confidence: float = 0.95) -> IccResult:
    """ICC(2,1): two-way random effects, absolute agreement, single rater."""
    a, b = _paired(a, b)
    n = a.size
    if n < 5:
        raise ValueError("need at least 5 pairs for a stable ICC")
    ratings = np.column_stack([a, b])
    k = ratings.shape[1]

    grand = ratings.mean()
    if (ratings == grand).all():
        return IccResult(1.0, 1.0, 1.0, degenerate=True)

    row_means = ratings.mean(axis=1)
    col_means = ratings.mean(axis=0)
    ss_total = ((ratings - grand) ** 2).sum()
    ss_rows = k * ((row_means - grand) ** 2).sum()
    ss_cols = n * ((col_means - grand) ** 2).sum()
    ss_error = ss_total - ss_rows - ss_cols

    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols / (k - 1)
    ms_error = ss_error / ((n - 1) * (k - 1))

    denom = ms_rows + (k - 1) * ms_error + (k / n) * (ms_cols - ms_error)
    if denom == 0:
        return IccResult(1.0, 1.0, 1.0, degenerate=True)
    value = (ms_rows - ms_error) / denom

    alpha = 1.0 - confidence
    if ms_error == 0:
        return IccResult(float(value), float(value), float(value), degenerate=True)
    fj = ms_cols / ms_error
    vn = (k - 1) * (n - 1) * (
        k * value * fj + n * (1 + (k - 1) * value) - k * value
    ) ** 2
    vd = (n - 1) * k**2 * value**2 * fj**2 + (
        n * (1 + (k - 1) * value) - k * value
    ) ** 2
    dof = vn / vd
    f_low = f_dist.ppf(1 - alpha / 2, n - 1, dof)
    f_high = f_dist.ppf(1 - alpha / 2, dof, n - 1)
    mix = k * ms_cols + (k * n - k - n) * ms_error
    ci_low = n * (ms_rows - f_low * ms_error) / (f_low * mix + n * ms_rows)
    ci_high = n * (f_high * ms_rows - ms_error) / (mix + n * f_high * ms_rows)
    return IccResult(float(value), float(ci_low), float(ci_high))


@dataclass(frozen=True)
class BlandAltmanResult:
    bias: float
    loa_low: float
    loa_high: float
    means: np.ndarray
    differences: np.ndarray


def bland_altman(a, b) -> BlandAltmanResult:
    """Bias and 1.96-sd limits of agreement of the paired differences."""
    a, b = _paired(a, b)
    if a.size < 2:
        raise ValueError("need at least 2 pairs")
    diffs = a - b
    bias = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    return BlandAltmanResult(
        bias=bias,
        loa_low=bias - LOA_FACTOR * sd,
        loa_high=bias + LOA_FACTOR * sd,
        means=(a + b) / 2.0,
        differences=diffs,
    )


def cohens_d(a, b) -> float:
    """Standardized mean difference with an (n-1)-weighted pooled sd."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least 2 values per series")
    pooled_var = (
        (a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)
    ) / (a.size + b.size - 2)
    if pooled_var == 0:
        raise ValueError("pooled standard deviation is zero")
    return float((a.mean() - b.mean()) / np.sqrt(pooled_var))


@dataclass(frozen=True)
class AgreementReport:
    """Full comparison of a candidate series against a reference."""

    n_pairs: int
    mean_error: float
    mse: float
    mse_conventional: float
    icc: IccResult
    bland_altman: BlandAltmanResult
    cohens_d: float

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "mean_error": self.mean_error,
            "mse": self.mse,
            "mse_conventional": self.mse_conventional,
            "icc": self.icc.value,
            "icc_ci_low": self.icc.ci_low,
            "icc_ci_high": self.icc.ci_high,
            "icc_degenerate": self.icc.degenerate,
            "bland_altman_bias": self.bland_altman.bias,
            "bland_altman_loa_low": self.bland_altman.loa_low,
            "bland_altman_loa_high": self.bland_altman.loa_high,
            "cohens_d": self.cohens_d,
        }


def compare_series(candidate, reference) -> AgreementReport:
    a, b = _paired(candidate, reference)
    return AgreementReport(
        n_pairs=a.size,
        mean_error=mean_error(a, b),
        mse=mse(a, b),
        mse_conventional=mse_conventional(a, b),
        icc=icc(a, b),
        bland_altman=bland_altman(a, b),
        cohens_d=cohens_d(a, b),
    )
