"""Smallest-prime-factor sieve and the prime-factor statistics built on it.

Two views are offered.  :class:`FactorSignature` describes a single integer
and is convenient for tests and one-off queries.  :class:`FactorTable` holds
the factorizations of a whole interval as padded numpy matrices so that the
range scans in :mod:`prodsets.constructions` stay vectorized.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from prodsets.constants import LOG4
from prodsets.errors import CapacityError

DEFAULT_MEM_BUDGET = 4 << 30
MEM_BUDGET_ENV = "PRODSETS_MEM_BUDGET"


def default_mem_budget() -> int:
    value = os.environ.get(MEM_BUDGET_ENV)
    return parse_bytes(value) if value else DEFAULT_MEM_BUDGET


def parse_bytes(text: str | int) -> int:
    """Parse ``"4GiB"``, ``"512M"``, ``"1000000"`` and the like into bytes."""
    if isinstance(text, int):
        return text
    s = text.strip().upper().replace(" ", "")
    units = {
        "KIB": 1 << 10, "MIB": 1 << 20, "GIB": 1 << 30, "TIB": 1 << 40,
        "KB": 10**3, "MB": 10**6, "GB": 10**9, "TB": 10**12,
        "K": 1 << 10, "M": 1 << 20, "G": 1 << 30, "T": 1 << 40, "B": 1,
    }
    for suffix, mult in units.items():
        if s.endswith(suffix):
            return int(float(s[: -len(suffix)]) * mult)
    return int(s)


# ---------------------------------------------------------------------------
# single-integer signatures


@dataclass(frozen=True)
class FactorSignature:
    """Sorted ``(prime, exponent)`` pairs of one integer ``n``."""

    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    def value(self) -> int:
        return math.prod(p**e for p, e in self.factors)

    def omega(self) -> int:
        return len(self.factors)

    def big_omega(self) -> int:
        return sum(e for _, e in self.factors)

    def omega_upto(self, t: float) -> int:
        return sum(1 for p, _ in self.factors if p <= t)

    def big_omega_upto(self, t: float) -> int:
        # counts prime powers p^a | n with p <= t, so the full exponent of p
        return sum(e for p, e in self.factors if p <= t)

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def jth_prime_factor(self, j: int) -> int:
        """The j-th smallest distinct prime factor, 1-based."""
        if not 1 <= j <= len(self.factors):
            raise IndexError(f"j={j} out of range for omega({self.n})={len(self.factors)}")
        return self.factors[j - 1][0]


def omega(sig: FactorSignature) -> int:
    return sig.omega()


def big_omega(sig: FactorSignature) -> int:
    return sig.big_omega()


def omega_upto(sig: FactorSignature, t: float) -> int:
    return sig.omega_upto(t)


def big_omega_upto(sig: FactorSignature, t: float) -> int:
    return sig.big_omega_upto(t)


def is_squarefree(sig: FactorSignature) -> bool:
    return sig.is_squarefree()


def jth_prime_factor(sig: FactorSignature, j: int) -> int:
    return sig.jth_prime_factor(j)


def growth_bound(t: float, slack: float = 2.0) -> float:
    """Right-hand side ``log log t / log 4 + slack`` of the growth condition."""
    return math.log(math.log(t)) / LOG4 + slack


def growth_condition_holds(sig: FactorSignature, slack: float = 2.0) -> bool:
    """True iff omega(m, t) <= log log t / log 4 + slack for every real t >= 3.

    omega(m, .) only jumps at the prime factors and the bound is increasing,
    so it suffices to test the j-th jump at t = max(p_j, 3).
    """
    for j, (p, _) in enumerate(sig.factors, start=1):
        if j > growth_bound(max(p, 3), slack):
            return False
    return True


def prime_position_condition(sig: FactorSignature) -> bool:
    """True iff log log p_j >= (j - 2) log 4 for every prime factor p_j."""
    for j, (p, _) in enumerate(sig.factors, start=1):
        if math.log(math.log(p)) < (j - 2) * LOG4:
            return False
    return True


# ---------------------------------------------------------------------------
# the sieve


class FactorSieve:
    """Smallest prime factor of every integer in ``[0, limit]``.

    ``spf[0] == 0`` and ``spf[1] == 1`` are sentinels.  A built sieve is never
    mutated, so it may be shared between threads.
    """

    def __init__(self, limit: int, mem_budget: int | None = None) -> None:
        if limit < 2:
            raise ValueError(f"sieve limit must be >= 2, got {limit}")
        budget = default_mem_budget() if mem_budget is None else mem_budget
        dtype = np.uint32 if limit < 2**32 else np.uint64
        required = (limit + 1) * (np.dtype(dtype).itemsize + 1)
        if required > budget:
            raise CapacityError(f"sieve up to {limit}", required, budget)
        self.limit = int(limit)
        self.spf = _spf_table(self.limit, dtype)
        self.spf.setflags(write=False)
        self._primes: np.ndarray | None = None

    def __repr__(self) -> str:
        return f"FactorSieve(limit={self.limit})"

    @property
    def primes(self) -> np.ndarray:
        if self._primes is None:
            idx = np.arange(self.limit + 1, dtype=self.spf.dtype)
            primes = np.flatnonzero((self.spf == idx) & (idx >= 2))
            primes.setflags(write=False)
            self._primes = primes
        return self._primes

    def is_prime(self, n: int) -> bool:
        self._check(n)
        return n >= 2 and int(self.spf[n]) == n

    def _check(self, n: int) -> None:
        if not 0 <= n <= self.limit:
            raise ValueError(f"{n} outside sieve range [0, {self.limit}]")

    def factorize(self, n: int) -> FactorSignature:
        n = int(n)
        if n < 1:
            raise ValueError(f"cannot factorize {n}")
        self._check(n)
        factors = []
        m = n
        while m > 1:
            p = int(self.spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            factors.append((p, e))
        return FactorSignature(n, tuple(factors))

    def table(self, lo: int, hi: int) -> FactorTable:
        """Factorizations of every integer in ``[lo, hi]``."""
        if lo < 1 or hi > self.limit:
            raise ValueError(f"range [{lo}, {hi}] outside sieve range [1, {self.limit}]")
        return self.table_of(np.arange(lo, hi + 1, dtype=np.int64))

    def table_of(self, ns) -> FactorTable:
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and (ns.min() < 1 or ns.max() > self.limit):
            raise ValueError(f"values outside sieve range [1, {self.limit}]")
        rem = ns.copy()
        prime_cols: list[np.ndarray] = []
        exp_cols: list[np.ndarray] = []
        active = rem > 1
        while active.any():
            p = np.zeros_like(rem)
            p[active] = self.spf[rem[active]]
            e = np.zeros(rem.shape, dtype=np.uint8)
            idx = np.flatnonzero(active)
            while idx.size:
                rem[idx] //= p[idx]
                e[idx] += 1
                idx = idx[rem[idx] % p[idx] == 0]
            prime_cols.append(p)
            exp_cols.append(e)
            active = rem > 1
        if prime_cols:
            primes = np.column_stack(prime_cols)
            exps = np.column_stack(exp_cols)
        else:
            primes = np.zeros((ns.size, 0), dtype=np.int64)
            exps = np.zeros((ns.size, 0), dtype=np.uint8)
        return FactorTable(ns, primes, exps)

    def blocks(self, lo: int, hi: int, block: int = 1 << 20) -> Iterator[FactorTable]:
        for start in range(lo, hi + 1, block):
            yield self.table(start, min(start + block - 1, hi))


def _spf_table(limit: int, dtype) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=dtype)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    idx = np.flatnonzero(spf == 0)
    spf[idx] = idx.astype(dtype)
    spf[0] = 0
    spf[1] = 1
    return spf


def build_sieve(limit: int, mem_budget: int | None = None) -> FactorSieve:
    return FactorSieve(limit, mem_budget)


def factorize(sieve: FactorSieve, n: int) -> FactorSignature:
    return sieve.factorize(n)


# ---------------------------------------------------------------------------
# vectorized statistics


@dataclass(frozen=True)
class FactorTable:
    """Padded factor matrices for a vector of integers.

    Row ``i`` describes ``n[i]``; ``primes[i, j]`` is its (j+1)-th smallest
    prime factor, or 0 past ``omega(n[i])``.
    """

    n: np.ndarray
    primes: np.ndarray
    exps: np.ndarray

    def __len__(self) -> int:
        return self.n.size

    def omega(self) -> np.ndarray:
        return np.count_nonzero(self.primes, axis=1)

    def big_omega(self) -> np.ndarray:
        return self.exps.sum(axis=1, dtype=np.int64)

    def omega_upto(self, t: float) -> np.ndarray:
        return np.count_nonzero((self.primes > 0) & (self.primes <= t), axis=1)

    def big_omega_upto(self, t: float) -> np.ndarray:
        return np.where(self.primes <= t, self.exps, 0).sum(axis=1, dtype=np.int64)

    def is_squarefree(self) -> np.ndarray:
        return (self.exps <= 1).all(axis=1)

    def growth_condition(self, slack: float = 2.0) -> np.ndarray:
        ok = np.ones(len(self), dtype=bool)
        for j in range(self.primes.shape[1]):
            p = self.primes[:, j]
            present = p > 0
            t = np.maximum(p[present], 3).astype(np.float64)
            ok[present] &= (j + 1) <= np.log(np.log(t)) / LOG4 + slack
        return ok

    def prime_position(self) -> np.ndarray:
        ok = np.ones(len(self), dtype=bool)
        for j in range(self.primes.shape[1]):
            p = self.primes[:, j]
            present = p > 0
            ok[present] &= np.log(np.log(p[present].astype(np.float64))) >= (j - 1) * LOG4
        return ok


def big_omega_segment(lo: int, hi: int, small_primes: np.ndarray, prime_limit: int) -> np.ndarray:
    """Omega(n) for every n in ``[lo, hi)`` without a full sieve.

    ``small_primes`` must hold every prime up to ``prime_limit``, and
    ``prime_limit`` must reach ``isqrt(hi - 1)``.  Any
    cofactor left after removing those primes is a single large prime, which
    is detected from the leftover logarithm.
    """
    if lo < 1 or hi <= lo:
        raise ValueError(f"bad segment [{lo}, {hi})")
    root = math.isqrt(hi - 1)
    if prime_limit < root:
        raise ValueError(f"primes up to {prime_limit} do not reach sqrt({hi - 1}) = {root}")
    size = hi - lo
    counts = np.zeros(size, dtype=np.uint8)
    logs = np.zeros(size, dtype=np.float64)
    for p in small_primes:
        p = int(p)
        if p > root:
            break
        logp = math.log(p)
        pk = p
        while pk <= hi - 1:
            start = (-lo) % pk
            counts[start::pk] += 1
            logs[start::pk] += logp
            pk *= p
    residual = np.log(np.arange(lo, hi, dtype=np.float64)) - logs
    counts += residual > 0.5 * math.log(2.0)
    return counts


def big_omega_histogram(limit: int, segment: int = 1 << 22) -> np.ndarray:
    """``hist[j]`` = number of n in ``[1, limit]`` with Omega(n) == j."""
    root = max(math.isqrt(limit), 2)
    small = FactorSieve(root).primes
    hist = np.zeros(64, dtype=np.int64)
    for lo in range(1, limit + 1, segment):
        hi = min(lo + segment, limit + 1)
        hist += np.bincount(big_omega_segment(lo, hi, small, root), minlength=64)[:64]
    return np.trim_zeros(hist, "b")
