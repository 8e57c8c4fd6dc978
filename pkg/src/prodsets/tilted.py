"""Weighted counts sum_{n <= x} lambda^Omega(n, t) and the bounds they feed.

The sums are accumulated as exact integer histograms of Omega(n, t) and
only then weighted, so results do not depend on block order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from prodsets.constants import derive_params, iterated_log, theta
from prodsets.constructions import exact_d1
from prodsets.sieve import FactorSieve, big_omega_histogram

_BLOCK = 1 << 18

#: Upper end of the tilt range covered by the general weighted-sum bound.
LAMBDA_MAX = 1.9


@dataclass(frozen=True)
class TiltParams:
    x_limit: int
    t: int
    lambda_: float

    def __post_init__(self) -> None:
        if self.x_limit < 1:
            raise ValueError(f"x_limit must be >= 1, got {self.x_limit}")
        if self.t < 2:
            raise ValueError(f"prime cutoff t must be >= 2, got {self.t}")
        if not 0 < self.lambda_ <= LAMBDA_MAX:
            raise ValueError(f"lambda must lie in (0, {LAMBDA_MAX}], got {self.lambda_}")


def omega_upto_histogram(x: int, t: float | None, sieve: FactorSieve) -> np.ndarray:
    """``hist[j]`` = #{n <= x : Omega(n, t) = j}; ``t=None`` means no cutoff."""
    if sieve.limit < x:
        raise ValueError(f"sieve limit {sieve.limit} < x={x}")
    hist = np.zeros(64, dtype=np.int64)
    for table in sieve.blocks(1, x, _BLOCK):
        counts = table.big_omega() if t is None else table.big_omega_upto(t)
        hist += np.bincount(counts, minlength=64)[:64]
    return hist


def weighted(hist: np.ndarray, lam: float, shift: int = 0) -> float:
    """sum_j hist[j] lam^(j - shift)."""
    return math.fsum(int(c) * lam ** (j - shift) for j, c in enumerate(hist) if c)


def tilted_sum(params: TiltParams, sieve: FactorSieve) -> float:
    """sum_{n <= x} lambda^Omega(n, t), where Omega(n, t) counts the prime
    powers p^a | n with p <= t."""
    return weighted(omega_upto_histogram(params.x_limit, params.t, sieve), params.lambda_)


def hr_ratio(params: TiltParams, sieve: FactorSieve) -> float:
    """tilted_sum / (x (log t)^(lambda - 1)); bounded uniformly in x and t."""
    if params.t < 3:
        raise ValueError(f"t must be >= 3, got {params.t}")
    x = params.x_limit
    return tilted_sum(params, sieve) / (x * math.log(params.t) ** (params.lambda_ - 1))


def prime_reciprocal_sum(x: int, sieve: FactorSieve) -> float:
    """sum_{p <= x} 1/p over the sieve's primes."""
    primes = sieve.primes
    primes = primes[primes <= x]
    return math.fsum((1.0 / primes.astype(np.float64)).tolist())


def hr_general_ratio(x: int, lam: float, sieve: FactorSieve) -> float:
    """For f(n) = lambda^Omega(n): sum_{n <= x} f(n) / ((x / log x) exp(sum_{p <= x} f(p)/p))."""
    if not 0 < lam <= LAMBDA_MAX:
        raise ValueError(f"lambda must lie in (0, {LAMBDA_MAX}], got {lam}")
    if x < 2:
        raise ValueError(f"x must be >= 2, got {x}")
    total = weighted(omega_upto_histogram(x, None, sieve), lam)
    return total / (x / math.log(x) * math.exp(lam * prime_reciprocal_sum(x, sieve)))


@dataclass(frozen=True)
class D1Report:
    N: int
    threshold: int
    exact: int
    majorant: float
    closed_form: float

    @property
    def holds(self) -> bool:
        return self.exact <= self.majorant


def d1_exact_vs_bound(N: int, sieve2: FactorSieve | None = None) -> D1Report:
    """Exact count of c <= N^2 with Omega(c) > 2k + h against its tilted majorant.

    The majorant is sum_{c <= N^2} (1/log 2)^(Omega(c) - (2k + h)), evaluated
    exactly; the closed form is N^2 (log N)^(-2 theta) (1/log 2)^(-h).
    ``sieve2`` is used when it reaches N^2; otherwise Omega is computed by a
    segmented count.
    """
    params = derive_params(N)
    top = params.overflow_threshold
    if sieve2 is not None and sieve2.limit >= N * N:
        hist = omega_upto_histogram(N * N, None, sieve2)
    else:
        hist = big_omega_histogram(N * N)
    lam = 1 / math.log(2)
    return D1Report(
        N=N,
        threshold=top,
        exact=exact_d1(N, params, hist),
        majorant=weighted(hist, lam, shift=top),
        closed_form=N * N * math.log(N) ** (-2 * theta()) * lam ** (-params.h),
    )


@dataclass(frozen=True)
class Lemma4Comparator:
    N: int
    T: int
    z_T: float
    u_t: float
    summed: float


def lemma4_bound_evaluate(N: int, T: int) -> Lemma4Comparator:
    """Comparators for the solutions counted at dyadic scale T.

    ``u_t`` is N^2 / ((log N)^(2 theta) log T); ``summed`` is the total over
    all scales, N^2 log log N / (log N)^(2 theta).
    """
    if T < 4:
        raise ValueError(f"T must be >= 4, got {T}")
    base = N * N / math.log(N) ** (2 * theta())
    return Lemma4Comparator(
        N=N, T=T,
        z_T=iterated_log(4 * T, 2) / math.log(4) + 2,
        u_t=base / math.log(T),
        summed=base * iterated_log(N, 2),
    )


def lemma4_dyadic_sum(N: int) -> float:
    """sum of the scale-T comparators over T = 2^j, 4 <= T <= sqrt(N)."""
    root = math.isqrt(N)
    terms = []
    T = 4
    while T <= root:
        terms.append(lemma4_bound_evaluate(N, T).u_t)
        T *= 2
    return math.fsum(terms)
