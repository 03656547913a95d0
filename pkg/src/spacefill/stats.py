"""Estimators and tests for comparing replica ensembles with analytic laws.

Unbiased k-statistics are used for the variance and third cumulant
because the Fano-factor checks divide small quantities and estimator
bias would masquerade as signal. Standard errors come from leave-one-out
jackknife, vectorized through power sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SampleSummary",
    "KSResult",
    "ScalingFit",
    "summarize",
    "ks_one_sample",
    "ks_two_sample",
    "loglog_fit",
    "decay_exponent",
]


@dataclass(frozen=True)
class SampleSummary:
    count: int
    mean: float
    variance: float          # unbiased (second k-statistic)
    third_cumulant: float    # third k-statistic
    normalized_moments: dict[int, float] = field(default_factory=dict)
    se_mean: float = math.nan
    se_variance: float = math.nan
    se_third_cumulant: float = math.nan
    se_normalized_moments: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "third_cumulant": self.third_cumulant,
            "normalized_moments": {str(p): v for p, v in self.normalized_moments.items()},
            "se_mean": self.se_mean,
            "se_variance": self.se_variance,
            "se_third_cumulant": self.se_third_cumulant,
            "se_normalized_moments": {
                str(p): v for p, v in self.se_normalized_moments.items()
            },
        }


def _k2(n, s1, s2):
    # unbiased variance from power sums
    return (n * s2 - s1 * s1) / (n * (n - 1))


def _k3(n, s1, s2, s3):
    return (2 * s1**3 - 3 * n * s1 * s2 + n * n * s3) / (n * (n - 1) * (n - 2))


def summarize(samples, p_max: int = 4) -> SampleSummary:
    """Mean, unbiased variance and third cumulant, normalized moments
    <x^p>/<x>^p for p <= p_max, all with jackknife standard errors."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 3:
        raise ValueError(f"need at least 3 samples, got {n}")
    if p_max < 1:
        raise ValueError(f"p_max must be >= 1, got {p_max}")

    mean = float(x.mean())
    # cumulants of order >= 2 are shift-invariant; centering kills cancellation
    y = x - mean
    t1, t2, t3 = float(y.sum()), float((y**2).sum()), float((y**3).sum())
    k2 = _k2(n, t1, t2)
    k3 = _k3(n, t1, t2, t3)

    raw = {p: float((x**p).sum()) for p in range(1, p_max + 1)}
    # normalized moments are undefined at zero mean; report nan rather than raise
    norm = {p: (raw[p] / n) / mean**p if mean != 0.0 else math.nan
            for p in range(1, p_max + 1)}

    # leave-one-out estimates from power-sum downdates
    l1 = (t1 - y) / (n - 1)
    k2_jk = ((n - 1) * (t2 - y**2) - (t1 - y) ** 2) / ((n - 1) * (n - 2))
    k3_jk = (
        2 * (t1 - y) ** 3
        - 3 * (n - 1) * (t1 - y) * (t2 - y**2)
        + (n - 1) ** 2 * (t3 - y**3)
    ) / ((n - 1) * (n - 2) * (n - 3)) if n > 3 else np.full(n, np.nan)

    se_mean = _jackknife_se(l1 + mean)
    se_k2 = _jackknife_se(k2_jk)
    se_k3 = _jackknife_se(k3_jk) if n > 3 else math.nan

    se_norm = {}
    mean_jk = (raw[1] - x) / (n - 1)
    for p in range(1, p_max + 1):
        if mean != 0.0 and np.all(mean_jk != 0.0):
            mu_jk = ((raw[p] - x**p) / (n - 1)) / mean_jk**p
            se_norm[p] = _jackknife_se(mu_jk)
        else:
            se_norm[p] = math.nan

    return SampleSummary(
        count=n, mean=mean, variance=k2, third_cumulant=k3,
        normalized_moments=norm, se_mean=se_mean, se_variance=se_k2,
        se_third_cumulant=se_k3, se_normalized_moments=se_norm,
    )


def _jackknife_se(loo: np.ndarray) -> float:
    n = loo.size
    center = loo.mean()
    return float(np.sqrt((n - 1) / n * np.sum((loo - center) ** 2)))


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KSResult:
    distance: float
    n_effective: float
    critical_5pct: float
    critical_1pct: float

    def rejected(self, level: float = 0.01) -> bool:
        return self.distance > _ks_critical(level, self.n_effective)

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "n_effective": self.n_effective,
            "critical_5pct": self.critical_5pct,
            "critical_1pct": self.critical_1pct,
        }


def _ks_critical(level: float, n_eff: float) -> float:
    # asymptotic Kolmogorov critical value c(level)/sqrt(n)
    return math.sqrt(-0.5 * math.log(level / 2.0)) / math.sqrt(n_eff)


def ks_one_sample(samples, cdf) -> KSResult:
    """Supremum distance between the empirical CDF and a reference CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.array([cdf(v) for v in x], dtype=np.float64)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    d = float(max(upper.max(), lower.max()))
    return KSResult(d, float(n), _ks_critical(0.05, n), _ks_critical(0.01, n))


def ks_two_sample(a, b) -> KSResult:
    """Supremum distance between two empirical CDFs."""
    xa = np.sort(np.asarray(a, dtype=np.float64).ravel())
    xb = np.sort(np.asarray(b, dtype=np.float64).ravel())
    na, nb = xa.size, xb.size
    if na == 0 or nb == 0:
        raise ValueError("empty sample")
    both = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, both, side="right") / na
    fb = np.searchsorted(xb, both, side="right") / nb
    d = float(np.abs(fa - fb).max())
    n_eff = na * nb / (na + nb)
    return KSResult(d, n_eff, _ks_critical(0.05, n_eff), _ks_critical(0.01, n_eff))


# ---------------------------------------------------------------------------
# scaling-exponent fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    sizes: tuple[float, ...]
    responses: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    intercept: float
    slope_ci95: float  # 95% half-width

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "responses": list(self.responses),
            "errors": list(self.errors),
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_ci95": self.slope_ci95,
        }


def loglog_fit(sizes, responses, errors=None, *, n_boot: int = 1000,
               seed: int = 0) -> ScalingFit:
    """Least-squares slope of log(response) against log(size).

    The 95% confidence half-width comes from a bootstrap that perturbs
    each response in log space by its relative standard error (zero
    errors give zero width).
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    responses = np.asarray(responses, dtype=np.float64)
    if sizes.size < 3:
        raise ValueError(f"need at least 3 sizes, got {sizes.size}")
    if sizes.size != responses.size:
        raise ValueError("sizes and responses must have the same length")
    if np.any(sizes <= 0) or np.any(responses <= 0):
        raise ValueError("sizes and responses must be positive")
    if errors is None:
        errors = np.zeros_like(responses)
    else:
        errors = np.asarray(errors, dtype=np.float64)
        if errors.shape != responses.shape or np.any(errors < 0):
            raise ValueError("errors must be nonnegative and match responses")

    lx, ly = np.log(sizes), np.log(responses)
    slope, intercept = np.polyfit(lx, ly, 1)

    if np.any(errors > 0):
        rng = np.random.default_rng(seed)
        rel = errors / responses
        slopes = np.empty(n_boot)
        for i in range(n_boot):
            ly_b = ly + rng.standard_normal(ly.size) * rel
            slopes[i] = np.polyfit(lx, ly_b, 1)[0]
        lo, hi = np.percentile(slopes, [2.5, 97.5])
        ci = float((hi - lo) / 2.0)
    else:
        ci = 0.0

    return ScalingFit(
        sizes=tuple(sizes.tolist()), responses=tuple(responses.tolist()),
        errors=tuple(errors.tolist()), slope=float(slope),
        intercept=float(intercept), slope_ci95=ci,
    )


def decay_exponent(times, densities, window, *, per_replica=None,
                   n_boot: int = 1000, seed: int = 0) -> ScalingFit:
    """Log-log slope of an averaged density trace inside a time window.

    per_replica, if given, is a (replicas, grid) array; the confidence
    half-width is then a replica-resampling bootstrap, which preserves
    the within-replica correlation of trace points.
    """
    times = np.asarray(times, dtype=np.float64)
    densities = np.asarray(densities, dtype=np.float64)
    t_lo, t_hi = window
    mask = (times >= t_lo) & (times <= t_hi)
    if mask.sum() < 3:
        raise ValueError(
            f"window [{t_lo}, {t_hi}] covers {int(mask.sum())} grid points; need >= 3"
        )
    t_w = times[mask]
    d_w = densities[mask]
    if np.any(d_w <= 0):
        raise ValueError("densities inside the window must be positive")
    lx, ly = np.log(t_w), np.log(d_w)
    slope, intercept = np.polyfit(lx, ly, 1)

    ci = 0.0
    if per_replica is not None:
        traces = np.asarray(per_replica, dtype=np.float64)[:, mask]
        rng = np.random.default_rng(seed)
        n_rep = traces.shape[0]
        slopes = np.empty(n_boot)
        for i in range(n_boot):
            pick = rng.integers(0, n_rep, size=n_rep)
            avg = traces[pick].mean(axis=0)
            if np.any(avg <= 0):
                slopes[i] = np.nan
                continue
            slopes[i] = np.polyfit(lx, np.log(avg), 1)[0]
        good = slopes[~np.isnan(slopes)]
        if good.size:
            lo, hi = np.percentile(good, [2.5, 97.5])
            ci = float((hi - lo) / 2.0)

    return ScalingFit(
        sizes=tuple(t_w.tolist()), responses=tuple(d_w.tolist()),
        errors=(), slope=float(slope), intercept=float(intercept),
        slope_ci95=ci,
    )
