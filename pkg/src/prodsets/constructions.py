"""The extremal sets and the experiments run on them.

* :func:`build_B` - squarefree m in (N/2, N] with exactly k prime factors
  whose small prime factors are not too crowded.
* :func:`random_thin` / :func:`thinning_experiment` - a random subset of B
  whose product set is close to the largest possible, |A|^2 / 2.
* :func:`build_A_thm2` / :func:`coverage_deficit` - integers with few prime
  factors whose product set still covers almost all of the multiplication
  table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from prodsets.constants import (
    LOG4,
    ConstructionParams,
    derive_params,
    iterated_log,
    params_from_loglog,
    theta,
)
from prodsets.products import (
    as_int_set,
    product_plan,
    product_set,
    table_chunks,
    table_marks,
    tau_histogram,
)
from prodsets.sieve import FactorSieve, big_omega_histogram, default_mem_budget

_SCAN_BLOCK = 1 << 18


def _require(sieve: FactorSieve, N: int) -> None:
    if sieve.limit < N:
        raise ValueError(f"sieve limit {sieve.limit} < N={N}")


# ---------------------------------------------------------------------------
# the set B


@dataclass
class ExtremalSetB:
    N: int
    k: int
    slack: float
    elements: np.ndarray

    def __len__(self) -> int:
        return self.elements.size

    @property
    def comparator(self) -> float:
        """N / ((log N)^theta (log log N)^(3/2)), the order of |B| from below."""
        return b_size_comparator(self.N)


def b_size_comparator(N: int) -> float:
    return N / (math.log(N) ** theta() * iterated_log(N, 2) ** 1.5)


def _scan_upper_half(N: int, sieve: FactorSieve, keep) -> np.ndarray:
    _require(sieve, N)
    found = []
    for table in sieve.blocks(N // 2 + 1, N, _SCAN_BLOCK):
        found.append(table.n[keep(table)])
    return as_int_set(np.concatenate(found)) if found else as_int_set([])


def build_B(N: int, sieve: FactorSieve, slack: float = 2.0) -> ExtremalSetB:
    k = derive_params(N).k

    def keep(t):
        return t.is_squarefree() & (t.omega() == k) & t.growth_condition(slack)

    return ExtremalSetB(N=N, k=k, slack=slack, elements=_scan_upper_half(N, sieve, keep))


def build_B_prime_position(N: int, sieve: FactorSieve) -> np.ndarray:
    """Like :func:`build_B`, with the stricter prime-position condition
    log log p_j >= (j - 2) log 4 in place of the growth condition."""
    k = derive_params(N).k

    def keep(t):
        return t.is_squarefree() & (t.omega() == k) & t.prime_position()

    return _scan_upper_half(N, sieve, keep)


# ---------------------------------------------------------------------------
# random thinning


_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer, wrapping uint64 arithmetic
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def element_hashes(elements: np.ndarray, seed: int) -> np.ndarray:
    """64-bit hash of each (seed, element) pair, independent of array order."""
    with np.errstate(over="ignore"):
        key = _mix64(np.array([seed & _MASK64], dtype=np.uint64))[0]
        z = elements.astype(np.uint64) * np.uint64(_GOLDEN) + key
        return _mix64(z)


def random_thin(B, rho: float, seed: int) -> np.ndarray:
    """Keep each element of B independently with probability ``rho``.

    Whether b is kept depends only on ``(seed, b)``: its hash is compared
    against ``rho * 2**64``.
    """
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    B = as_int_set(B)
    threshold = int(rho * 2.0**64)
    if threshold >= 2**64:
        return B.copy()
    return B[element_hashes(B, seed) < np.uint64(threshold)]


def default_g(N: int) -> float:
    """Slowly growing default for the free function g(N): log log log N."""
    return iterated_log(N, 3)


def default_rho(N: int, g: float) -> float:
    """Thinning probability 1 / ((log log N)^2 g)."""
    if N < 100:
        raise ValueError(f"N={N} below the validity floor 100")
    rho = 1.0 / (iterated_log(N, 2) ** 2 * g)
    if not 0 < rho <= 1:
        raise ValueError(f"rho={rho} outside (0, 1] for N={N}, g={g}")
    return rho


def expected_product_count(hist: np.ndarray, rho: float) -> float:
    """sum over products x of 1 - (1 - rho^2)^(tau(x)/2), from a tau histogram."""
    taus = np.arange(hist.size, dtype=np.float64)
    terms = -np.expm1(taus / 2 * math.log1p(-rho * rho)) if rho < 1 else (taus > 0).astype(float)
    return math.fsum((hist * terms).tolist())


@dataclass
class ThinningOutcome:
    N: int
    g: float
    seed: int
    rho: float
    sizeB: int
    A: np.ndarray
    sizeA: int
    sizeAA: int
    ratio_pairs: float
    ratio_size: float
    predictor: float
    surrogates: dict = field(default_factory=dict)


def thin_and_measure(B, N: int, g: float, seed: int, hist: np.ndarray,
                     mem_budget: int | None = None, workers: int = 1) -> ThinningOutcome:
    """Thin a prebuilt B and measure |A|, |AA| and the expectation predictor.

    ``hist`` is :func:`~prodsets.products.tau_histogram` of B; pass it in so
    that many seeds share one pass over B x B.
    """
    B = as_int_set(B)
    rho = default_rho(N, g)
    A = random_thin(B, rho, seed)
    sizeA = int(A.size)
    sizeAA = product_set(A, A, mem_budget, workers).size if sizeA else 0
    f = iterated_log(N, 2) ** 4
    return ThinningOutcome(
        N=N, g=g, seed=seed, rho=rho, sizeB=int(B.size), A=A, sizeA=sizeA, sizeAA=sizeAA,
        ratio_pairs=sizeAA / (sizeA * (sizeA - 1) / 2) if sizeA > 1 else math.nan,
        ratio_size=sizeA / (rho * B.size) if B.size else math.nan,
        predictor=expected_product_count(hist, rho),
        surrogates={
            "rho2_f": rho * rho * f,
            "rhoB2_over_N1.1": rho * float(B.size) ** 2 / float(N) ** 1.1,
            "f_over_sqrtB": f / math.sqrt(B.size) if B.size else math.inf,
        },
    )


def thinning_experiment(N: int, g: float, seed: int, sieve: FactorSieve,
                        mem_budget: int | None = None, workers: int = 1) -> ThinningOutcome:
    B = build_B(N, sieve).elements
    hist = tau_histogram(B, mem_budget, workers)
    return thin_and_measure(B, N, g, seed, hist, mem_budget, workers)


# ---------------------------------------------------------------------------
# the Omega-bounded set


@dataclass
class OmegaBoundedSetA:
    N: int
    k: int
    r: float
    elements: np.ndarray

    def __len__(self) -> int:
        return self.elements.size

    @property
    def comparator(self) -> float:
        return a_size_comparator(self.N)


def a_size_comparator(N: int) -> float:
    """(N / (log N)^theta) exp((2/3) sqrt(log_2 N log_3 N))."""
    l2 = iterated_log(N, 2)
    return N / math.log(N) ** theta() * math.exp(2 / 3 * math.sqrt(l2 * math.log(l2)))


def build_A_thm2(N: int, sieve: FactorSieve) -> OmegaBoundedSetA:
    """All m <= N with Omega(m) <= k + r (r kept real)."""
    _require(sieve, N)
    params = derive_params(N)
    bound = params.omega_threshold
    found = [t.n[t.big_omega() <= bound] for t in sieve.blocks(1, N, _SCAN_BLOCK)]
    return OmegaBoundedSetA(N=N, k=params.k, r=params.r, elements=as_int_set(np.concatenate(found)))


def big_omega_counts(N: int, sieve: FactorSieve) -> np.ndarray:
    """``hist[j]`` = #{n <= N : Omega(n) = j}."""
    _require(sieve, N)
    hist = np.zeros(64, dtype=np.int64)
    for t in sieve.blocks(1, N, _SCAN_BLOCK):
        hist += np.bincount(t.big_omega(), minlength=64)[:64]
    return hist


def exact_d2(N: int, params: ConstructionParams, omega_hist: np.ndarray) -> int:
    """#{(a, b) in [N]^2 : Omega(ab) <= 2k + h and Omega(b) >= k + r}.

    Omega(ab) = Omega(a) + Omega(b), so this is a convolution of the Omega
    histogram of [1, N].
    """
    top = params.overflow_threshold
    cum = np.cumsum(omega_hist)
    total = 0
    for j in range(omega_hist.size):
        if j >= params.omega_threshold and omega_hist[j] and top - j >= 0:
            total += int(omega_hist[j]) * int(cum[min(top - j, cum.size - 1)])
    return total


@dataclass
class CoverageReport:
    N: int
    params: ConstructionParams
    sizeA: int
    M_N: int
    sizeAA: int
    deficit: int
    D1: int | None
    D2: int

    @property
    def ratio(self) -> float:
        """|AA| / M_N."""
        return self.sizeAA / self.M_N


#: Largest N for which coverage_deficit computes D1 by default.
D1_MAX_N = 1 << 14


def coverage_deficit(N: int, sieve: FactorSieve, with_d1: bool | None = None,
                     mem_budget: int | None = None, workers: int = 1) -> CoverageReport:
    """Exact |AA|, M_N and |[N][N] minus AA| for A = build_A_thm2(N).

    Both sets are marked chunk by chunk over (0, N^2], so the partition
    identity |AA| + deficit = M_N is an actual check rather than a
    definition.  D1 (integers c <= N^2 with Omega(c) > 2k + h) needs Omega up
    to N^2 and is skipped above :data:`D1_MAX_N` unless requested.
    """
    params = derive_params(N)
    A = build_A_thm2(N, sieve)
    budget = default_mem_budget() if mem_budget is None else mem_budget
    plan = product_plan(A.elements, A.elements, budget // 2, workers)
    M = size_aa = deficit = 0
    for lo, hi in table_chunks(N, budget // 4, workers):
        table = table_marks(N, lo, hi)
        prods = plan.marks(lo, hi)
        if np.any(prods & ~table):
            raise AssertionError("AA escaped the multiplication table")
        M += int(np.count_nonzero(table))
        size_aa += int(np.count_nonzero(prods))
        deficit += int(np.count_nonzero(table & ~prods))
    if with_d1 is None:
        with_d1 = N <= D1_MAX_N
    d1 = exact_d1(N, params) if with_d1 else None
    d2 = exact_d2(N, params, big_omega_counts(N, sieve))
    return CoverageReport(N=N, params=params, sizeA=len(A), M_N=M, sizeAA=size_aa,
                          deficit=deficit, D1=d1, D2=d2)


def exact_d1(N: int, params: ConstructionParams | None = None,
             hist: np.ndarray | None = None) -> int:
    params = params or derive_params(N)
    if hist is None:
        hist = big_omega_histogram(N * N)
    return int(hist[params.overflow_threshold + 1:].sum())


# ---------------------------------------------------------------------------
# bound evaluators for the second deficit term


@dataclass(frozen=True)
class D2Bound:
    x: float
    exponent: float
    exponent_taylor: float
    final_bound: float


def d2_exponent(l2: float) -> tuple[float, float]:
    """Exponent of log N in the D2 bound, before and after the Taylor step.

    Needs the tilt offset x in (0, 1), i.e. log log N above about 25.
    """
    p = params_from_loglog(l2)
    x = p.x
    if not 0 < x < 1:
        raise ValueError(f"tilt offset x={x:.6g} not in (0, 1) at log log N = {l2:.6g}")
    shift = -(p.h / l2) * math.log((1 - x) / LOG4)
    exact = -2 * theta() - ((1 + x) * math.log1p(x) + (1 - x) * math.log1p(-x)) / LOG4 + shift
    taylor = -2 * theta() - x * x / LOG4 + shift
    return exact, taylor


def d2_final_bound(N: int) -> float:
    """N^2 (log N)^(-2 theta) (log log N)^(-3.8)."""
    return N * N * math.log(N) ** (-2 * theta()) * iterated_log(N, 2) ** -3.8


def d2_bound_evaluate(N: int) -> D2Bound:
    """Evaluate the D2 exponent and final bound at N.

    Raises ValueError when x >= 1, which holds for every N below roughly
    exp(exp(25)); use :func:`d2_exponent` to study the valid regime and
    :func:`d2_final_bound` for the closed form alone.
    """
    l2 = iterated_log(N, 2)
    exact, taylor = d2_exponent(l2)
    return D2Bound(x=derive_params(N).x, exponent=exact, exponent_taylor=taylor,
                   final_bound=d2_final_bound(N))


__all__ = [
    "CoverageReport",
    "D2Bound",
    "ExtremalSetB",
    "OmegaBoundedSetA",
    "ThinningOutcome",
    "a_size_comparator",
    "b_size_comparator",
    "build_A_thm2",
    "build_B",
    "build_B_prime_position",
    "coverage_deficit",
    "d2_bound_evaluate",
    "d2_exponent",
    "d2_final_bound",
    "default_g",
    "default_rho",
    "exact_d1",
    "exact_d2",
    "expected_product_count",
    "random_thin",
    "thin_and_measure",
    "thinning_experiment",
]
