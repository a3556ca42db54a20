"""Small statistical toolbox shared by the experiment drivers.

Heavy-tailed observables (infinite variance, slowly converging means) are the
norm here, so robust location/scale estimators live next to the plain fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps


@dataclass
class StatReport:
    """Result of one statistical experiment.

    values  scalar summaries (fitted exponents, KS distances, ratios, ...)
    rows    optional per-sample or per-band records for CSV emission
    seed    RNG seed when randomness was involved
    """

    name: str
    values: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    seed: int | None = None
    notes: str = ""


def loglog_fit(x, y):
    """Least-squares fit of log|y| against log x.

    Returns (slope, intercept, r_squared).  Requires at least 3 points.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.size < 3:
        raise ValueError("need at least 3 points for a log-log fit")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept, rvalue, _, _ = sps.linregress(lx, ly)
    return float(slope), float(intercept), float(rvalue ** 2)


def geometric_mean(values) -> float:
    v = np.abs(np.asarray(values, dtype=float))
    if np.any(v == 0):
        return 0.0
    return float(np.exp(np.mean(np.log(v))))


def median_of_means(data, blocks: int = 16) -> float:
    """Median of per-block means; stable location estimator for heavy tails."""
    data = np.asarray(data, dtype=float)
    if data.size < blocks:
        return float(np.mean(data))
    usable = (data.size // blocks) * blocks
    block_means = data[:usable].reshape(blocks, -1).mean(axis=1)
    return float(np.median(block_means))


def median_of_variances(data, blocks: int = 16) -> float:
    """Median of per-block sample variances (the scale analogue of
    median_of_means; each block variance is an unbiased estimate)."""
    data = np.asarray(data, dtype=float)
    if data.size < 2 * blocks:
        return float(np.var(data, ddof=1))
    usable = (data.size // blocks) * blocks
    block = data[:usable].reshape(blocks, -1)
    return float(np.median(np.var(block, axis=1, ddof=1)))


def quantile_variance(data) -> float:
    """Normal-consistent variance from the interquartile range.

    Sample variances (even blockwise medians) are inflated by the Pareto
    tail of heavy-tailed Birkhoff sums; the central limit scale lives in
    the bulk, which the IQR reads off without tail contamination.
    """
    data = np.asarray(data, dtype=float)
    q25, q75 = np.quantile(data, [0.25, 0.75])
    sigma = (q75 - q25) / (2.0 * sps.norm.ppf(0.75))
    return float(sigma * sigma)


def ks_to_normal(sample, sigma_sq: float) -> float:
    """Kolmogorov-Smirnov distance of sample to N(0, sigma_sq)."""
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    res = sps.kstest(np.asarray(sample, dtype=float),
                     sps.norm(loc=0.0, scale=np.sqrt(sigma_sq)).cdf)
    return float(res.statistic)
