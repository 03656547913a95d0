"""Closed-form laws for the space-filling process on complete graphs.

Covers the scaled halting-time distribution and its Laplace transform,
exact finite-size transforms and densities, normalized moments as exact
rationals, cumulant trajectories of the empty-vertex count, the
last-step law, and the joint (halting time, last step) distribution.

Conventions: the complete graph is K_{N+1}, so each active particle
hops at rate 1/N to each of its N neighbors, the state with m empty
vertices decays at rate m^2/N, and the scaled halting time is
tau = T/N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "CumulantSolution",
    "RationalMoment",
    "scaled_halting_pdf",
    "scaled_halting_cdf",
    "laplace_Q",
    "laplace_Q_finite",
    "normalized_moment",
    "mean_halting_finite",
    "hypoexp_halting_pdf",
    "cumulant_solution",
    "gaussian_scaling_pdf",
    "last_step_pdf",
    "last_step_moment_ratio",
    "joint_laplace_R",
    "joint_moment",
    "scaled_gap_pdf",
    "scaled_joint_pdf",
    "laplace_Qm_localized",
    "HYPOEXP_MAX_PHASES",
]

# series controls: terms decay like exp(-k^2 tau) (or exp(-c_j/tau) after
# resummation), so a fixed absolute floor converges in a handful of terms
_TERM_FLOOR = 1e-15
_KMAX = 200
_TAU_SPLIT = 1.0

HYPOEXP_MAX_PHASES = 40


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


# ---------------------------------------------------------------------------
# scaled halting-time distribution
# ---------------------------------------------------------------------------

def scaled_halting_pdf(tau: float) -> float:
    """Density of the scaled halting time tau = T/N in the large-N limit.

    For tau >= 1 the alternating series
    sum_k (-1)^(k+1) k^2 exp(-k^2 tau) over all integers k is summed
    directly. For tau < 1 that series loses all precision, so the
    Poisson-resummed (modular-transformed) form is used instead:

        (2 sqrt(pi) / tau^(3/2)) * sum_{j>=1} exp(-c_j/tau) (c_j/tau - 1/2),
        c_j = pi^2 (2j-1)^2 / 4.

    Both branches agree to ~1e-12 at the switch point.
    """
    _require_positive("tau", tau)
    if tau >= _TAU_SPLIT:
        total = 0.0
        for k in range(1, _KMAX + 1):
            term = k * k * math.exp(-k * k * tau)
            total += term if k % 2 == 1 else -term
            if term < _TERM_FLOOR:
                break
        return 2.0 * total
    total = 0.0
    for j in range(1, _KMAX + 1):
        c = (math.pi * (2 * j - 1)) ** 2 / 4.0
        term = math.exp(-c / tau) * (c / tau - 0.5)
        total += term
        if abs(term) < _TERM_FLOOR:
            break
    return 2.0 * math.sqrt(math.pi) * total / tau**1.5


def scaled_halting_cdf(tau: float) -> float:
    """Distribution function of the scaled halting time (term-wise integral)."""
    _require_positive("tau", tau)
    if tau >= _TAU_SPLIT:
        total = 0.0
        for k in range(1, _KMAX + 1):
            term = math.exp(-k * k * tau)
            total += term if k % 2 == 1 else -term
            if term < _TERM_FLOOR:
                break
        return 1.0 - 2.0 * total
    total = 0.0
    for j in range(1, _KMAX + 1):
        c = (math.pi * (2 * j - 1)) ** 2 / 4.0
        term = math.exp(-c / tau)
        total += term
        if term < _TERM_FLOOR:
            break
    return 2.0 * math.sqrt(math.pi / tau) * total


# ---------------------------------------------------------------------------
# Laplace transforms
# ---------------------------------------------------------------------------

def laplace_Q(sigma: float) -> float:
    """Scaled Laplace transform pi*sqrt(sigma)/sinh(pi*sqrt(sigma)).

    Equivalently the infinite product prod_{m>=1} (1 + sigma/m^2)^(-1);
    continuous at sigma = 0 with value 1.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return 1.0
    x = math.pi * math.sqrt(sigma)
    # x/sinh(x) written to avoid overflow for large x and cancellation for small x
    return 2.0 * x * math.exp(-x) / -math.expm1(-2.0 * x)


def laplace_Q_finite(s: float, N: float, m0: int) -> float:
    """Exact finite-size halting-time transform prod_{m<=m0} (1 + s N/m^2)^(-1)."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if m0 < 1:
        raise ValueError(f"m0 must be >= 1, got {m0}")
    m = np.arange(1, m0 + 1, dtype=np.float64)
    return float(np.exp(-np.sum(np.log1p(s * N / m**2))))


def laplace_Qm_localized(s: float, m: int, N: int) -> float:
    """Transform of the sojourn profile of state m for the localized start m0 = N.

    Q_m(s) = (N/m^2) prod_{l=m}^{N} (1 + s N / l^2)^(-1). At s = 0 this
    equals N/m^2, the expected total time the chain spends at rate scale m.
    """
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={N}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    ell = np.arange(m, N + 1, dtype=np.float64)
    return float(N / m**2 * np.exp(-np.sum(np.log1p(s * N / ell**2))))


# ---------------------------------------------------------------------------
# normalized moments (exact rationals)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RationalMoment:
    """Normalized moment <tau^p>/<tau>^p as an exact rational."""

    p: int
    value: Fraction

    def __float__(self) -> float:
        return float(self.value)

    def as_string(self) -> str:
        v = self.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


@lru_cache(maxsize=None)
def _bernoulli(n: int) -> Fraction:
    # B_1 = -1/2 convention; only even indices are used here
    if n == 0:
        return Fraction(1)
    total = Fraction(0)
    for k in range(n):
        total += Fraction(math.comb(n + 1, k)) * _bernoulli(k)
    return -total / (n + 1)


@lru_cache(maxsize=None)
def _sinh_ratio_coefficient(p: int) -> Fraction:
    """Coefficient of x^(2p) in the Maclaurin series of x/sinh(x)."""
    if p == 0:
        return Fraction(1)
    return Fraction(2 - 2 ** (2 * p)) * _bernoulli(2 * p) / math.factorial(2 * p)


def normalized_moment(p: int) -> RationalMoment:
    """Exact rational mu_p = <tau^p>/<tau>^p of the scaled halting time.

    Obtained from the expansion of the scaled transform about sigma = 0:
    <tau^p> = p! (-1)^p [sigma^p] Q(sigma), and the pi^(2p) factors cancel
    in the ratio, leaving mu_p = (-1)^p p! 6^p d_p with d_p the rational
    x/sinh(x) series coefficient.
    """
    if not 1 <= p <= 12:
        raise ValueError(f"p must be in [1, 12], got {p}")
    d_p = _sinh_ratio_coefficient(p)
    mu = Fraction((-1) ** p * math.factorial(p) * 6**p) * d_p
    return RationalMoment(p=p, value=mu)


# ---------------------------------------------------------------------------
# exact finite-size halting laws
# ---------------------------------------------------------------------------

def mean_halting_finite(N: float, m0: int) -> float:
    """Exact mean halting time N * sum_{m=1}^{m0} m^(-2)."""
    if m0 < 1:
        raise ValueError(f"m0 must be >= 1, got {m0}")
    return N * math.fsum(1.0 / (m * m) for m in range(1, m0 + 1))


@lru_cache(maxsize=None)
def _hypoexp_weights(m0: int) -> tuple[float, ...]:
    # partial-fraction weights w_m = prod_{j != m} j^2/(j^2 - m^2), computed
    # exactly in rational arithmetic so cancellation never enters
    weights = []
    for m in range(1, m0 + 1):
        w = Fraction(1)
        for j in range(1, m0 + 1):
            if j != m:
                w *= Fraction(j * j, j * j - m * m)
        weights.append(float(w))
    return tuple(weights)


def hypoexp_halting_pdf(N: float, m0: int, T: float) -> float:
    """Exact halting-time density for finite m0: a hypoexponential mixture.

    P(T) = sum_m w_m r_m exp(-r_m T) with r_m = m^2/N. Supported for
    m0 <= HYPOEXP_MAX_PHASES; beyond that use scaled_halting_pdf(T/N)/N,
    the correct large-size limit.
    """
    if not 1 <= m0 <= HYPOEXP_MAX_PHASES:
        raise ValueError(
            f"m0={m0} outside supported range [1, {HYPOEXP_MAX_PHASES}]; "
            f"for larger m0 use the scaling form scaled_halting_pdf(T/N)/N"
        )
    _require_positive("T", T)
    weights = _hypoexp_weights(m0)
    return math.fsum(
        weights[m - 1] * (m * m / N) * math.exp(-(m * m / N) * T)
        for m in range(1, m0 + 1)
    )


# ---------------------------------------------------------------------------
# cumulant trajectories of the empty-vertex count
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CumulantSolution:
    """Closed-form density, scaled variance, and scaled third cumulant.

    The empty-vertex count decomposes as m = N n(t) + sqrt(N) eta with
    <eta^2> = v(t) and third cumulant w(t); trajectories are

        n(t) = n0 / (1 + n0 t)
        v(t) = n/3 + C n^4
        w(t) = n/15 + a n^4 + b n^6 + c n^7

    with (C, a, b, c) fixed by the initial values (n0, v0, w0).
    """

    n0: float
    v0: float
    w0: float
    C: float
    a: float
    b: float
    c: float

    def n(self, t):
        return self.n0 / (1.0 + self.n0 * np.asarray(t, dtype=np.float64))

    def v(self, t):
        n = self.n(t)
        return n / 3.0 + self.C * n**4

    def w(self, t):
        n = self.n(t)
        return n / 15.0 + self.a * n**4 + self.b * n**6 + self.c * n**7


def cumulant_solution(n0: float, v0: float, w0: float = 0.0) -> CumulantSolution:
    """Solve the cumulant hierarchy for given initial values.

    The trajectories satisfy dn/dt = -n^2, dv/dt + 4nv = n^2, and
    dw/dt + 6nw = -n^2 + 6v(n - v). Substituting the polynomial ansatz
    w = n/15 + a n^4 + b n^6 + c n^7 fixes a = C and c = 6 C^2, where
    C = (v0 - n0/3)/n0^4 is the variance amplitude; b then matches w0.
    """
    if not 0 < n0 <= 1:
        raise ValueError(f"n0 must be in (0, 1], got {n0}")
    if v0 < 0:
        raise ValueError(f"v0 must be >= 0, got {v0}")
    C = (v0 - n0 / 3.0) / n0**4
    a = C
    c = 6.0 * C * C
    b = (w0 - n0 / 15.0 - a * n0**4 - c * n0**7) / n0**6
    return CumulantSolution(n0=n0, v0=v0, w0=w0, C=C, a=a, b=b, c=c)


def uncorrelated_initial_values() -> tuple[float, float]:
    """(n0, v0) for independently placed particles: binomial empty counts."""
    e1 = math.exp(-1.0)
    return e1, e1 * (1.0 - e1)


def gaussian_scaling_pdf(m: float, N: float, t: float, sol: CumulantSolution) -> float:
    """Gaussian bulk law for the empty-vertex count at time t.

    P_m(t) ~ (2 pi N v)^(-1/2) exp(-xi^2/2), xi = (m - N n)/sqrt(N v).
    """
    n = float(sol.n(t))
    v = float(sol.v(t))
    if not N * v > 0:
        raise ValueError(f"need N*v(t) > 0, got {N * v}")
    xi = (m - N * n) / math.sqrt(N * v)
    return math.exp(-0.5 * xi * xi) / math.sqrt(2.0 * math.pi * N * v)


# ---------------------------------------------------------------------------
# last step and joint law
# ---------------------------------------------------------------------------

def last_step_pdf(N: float, t: float) -> float:
    """Density of the final-step duration: exponential with mean N, exact for any N."""
    _require_positive("t", t)
    return math.exp(-t / N) / N


def last_step_moment_ratio(p: int) -> int:
    """Normalized last-step moment <t^p>/<t>^p = p!, independent of size."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return math.factorial(p)


def joint_laplace_R(sigma: float) -> float:
    """Transform of the scaled gap tau - tau': (1 + sigma) * Q(sigma)."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    return (1.0 + sigma) * laplace_Q(sigma)


def joint_moment(p: int) -> float:
    """Scaled correlation <T t^p>/N^(p+1) = p! pi^2/6 + p * p!."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    fp = math.factorial(p)
    return fp * math.pi**2 / 6.0 + p * fp


def scaled_gap_pdf(u: float) -> float:
    """Density of the scaled time from start until one empty vertex remains.

    This is the inverse transform of (1 + sigma) Q(sigma), i.e.
    R(u) = P(u) + P'(u). Direct series (u >= 1):
    2 sum_{k>=2} (-1)^k k^2 (k^2 - 1) exp(-k^2 u); the k = 1 term drops
    out. Resummed branch (u < 1) differentiates the resummed P once more.
    """
    _require_positive("u", u)
    if u >= _TAU_SPLIT:
        total = 0.0
        for k in range(2, _KMAX + 1):
            term = k * k * (k * k - 1) * math.exp(-k * k * u)
            total += term if k % 2 == 0 else -term
            if term < _TERM_FLOOR:
                break
        return 2.0 * total
    total = 0.0
    for j in range(1, _KMAX + 1):
        c = (math.pi * (2 * j - 1)) ** 2 / 4.0
        e = math.exp(-c / u)
        term = e * (c * c / u**4.5 - 3.0 * c / u**3.5 + (0.75 + c) / u**2.5 - 0.5 / u**1.5)
        total += term
        if abs(term) < _TERM_FLOOR:
            break
    return 2.0 * math.sqrt(math.pi) * total


def scaled_joint_pdf(tau: float, tau_last: float) -> float:
    """Joint density of scaled halting time and scaled last-step duration.

    P(tau, tau') = R(tau - tau') exp(-tau') on 0 < tau' < tau.
    """
    _require_positive("tau_last", tau_last)
    if not tau_last < tau:
        raise ValueError(f"need tau_last < tau, got tau={tau}, tau_last={tau_last}")
    return scaled_gap_pdf(tau - tau_last) * math.exp(-tau_last)
