"""Exact product sets, multiplication-table sizes and multiplicative energy.

Everything here is exact.  Large computations split the product *value*
range into contiguous chunks; each chunk sees every pair whose product lands
in it, so per-chunk distinct counts and multiplicities simply add up.  Chunk
boundaries depend only on the inputs and the memory budget, never on the
number of workers, and merging is order-independent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from prodsets.constants import iterated_log
from prodsets.errors import CapacityError
from prodsets.sieve import default_mem_budget

# working bytes per generated pair: product, factor, gather index, sort scratch
_BYTES_PER_PAIR = 40
_MAX_PAIRS_PER_CHUNK = 1 << 24
_MAX_N = 2**32 - 1

T = TypeVar("T")


def as_int_set(values: Iterable[int]) -> np.ndarray:
    """Sorted, duplicate-free ``uint64`` array of positive integers."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint64)
    if arr.dtype.kind not in "iu":
        raise TypeError(f"integer set expected, got dtype {arr.dtype}")
    if arr.dtype.kind == "i" and arr.min() < 1:
        raise ValueError("set elements must be >= 1")
    arr = np.unique(arr.astype(np.uint64))
    if arr[0] < 1:
        raise ValueError("set elements must be >= 1")
    return arr


def _run(fn: Callable[[T], object], items: Sequence[T], workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# multiplication table


def multiplication_table_size(N: int, mem_budget: int | None = None, workers: int = 1) -> int:
    """Number of distinct entries of the N x N multiplication table.

    A single flat mark array over ``[1, N^2]`` is used when it fits in the
    budget; otherwise the value range is cut into chunks that do.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if N > _MAX_N:
        raise ValueError(f"N={N} exceeds the 64-bit product domain cap {_MAX_N}")
    bounds = table_chunks(N, mem_budget, workers)
    return sum(_run(lambda b: int(np.count_nonzero(table_marks(N, *b))), bounds, workers))


def table_chunks(N: int, mem_budget: int | None = None, workers: int = 1) -> list[tuple[int, int]]:
    """Half-open value chunks ``(lo, hi]`` covering ``[1, N^2]``."""
    budget = default_mem_budget() if mem_budget is None else mem_budget
    width = budget // max(workers, 1)
    top = N * N
    if width < min(top, 2 * N):
        raise CapacityError(f"multiplication table chunk for N={N}", min(top, 2 * N) * workers, budget)
    width = min(width, top)
    return [(lo, min(lo + width, top)) for lo in range(0, top, width)]


def table_marks(N: int, lo: int, hi: int) -> np.ndarray:
    """Boolean map of ``(lo, hi]``: entry ``v - lo - 1`` is set iff v = ab, a, b <= N."""
    mark = np.zeros(hi - lo, dtype=bool)
    for a in range(1, min(N, math.isqrt(hi)) + 1):
        b0 = max(a, lo // a + 1)
        b1 = min(N, hi // a)
        if b0 <= b1:
            mark[a * b0 - lo - 1 : a * b1 - lo : a] = True
    return mark


# ---------------------------------------------------------------------------
# general product sets


class _PairPlan:
    """Enumerates pair products of sorted sets A, B by value chunk.

    When A and B are the same set only pairs with a <= b are generated;
    ordered multiplicities are recovered as 2c(x) - [x is a square of an
    element].
    """

    def __init__(self, A: np.ndarray, B: np.ndarray, mem_budget: int | None, workers: int) -> None:
        self.A = A
        self.B = B
        self.symmetric = A is B or (A.shape == B.shape and np.array_equal(A, B))
        if self.symmetric:
            self.B = A
        if A.size and int(A[-1]) * int(B[-1]) >= 2**64:
            raise ValueError("products exceed the unsigned 64-bit domain")
        budget = default_mem_budget() if mem_budget is None else mem_budget
        self.target = min(budget // (_BYTES_PER_PAIR * max(workers, 1)), _MAX_PAIRS_PER_CHUNK)
        need = max(min(A.size, B.size), 1)
        if self.target < need:
            raise CapacityError(
                "product chunk", need * _BYTES_PER_PAIR * max(workers, 1), budget
            )
        self._start = np.arange(A.size, dtype=np.int64) if self.symmetric else None
        self._bounds: list[tuple[int, int]] | None = None

    def pairs_upto(self, v: int) -> int:
        """Number of generated pairs with product <= v."""
        q = np.uint64(v) // self.A
        idx = np.searchsorted(self.B, q, side="right").astype(np.int64)
        if self.symmetric:
            idx = np.maximum(idx - self._start, 0)
        return int(idx.sum())

    def total_pairs(self) -> int:
        n = self.A.size
        return n * (n + 1) // 2 if self.symmetric else n * self.B.size

    def boundaries(self) -> list[tuple[int, int]]:
        if self._bounds is None:
            self._bounds = self._plan_boundaries()
        return self._bounds

    def _plan_boundaries(self) -> list[tuple[int, int]]:
        if self.A.size == 0 or self.B.size == 0:
            return []
        first = int(self.A[0]) * int(self.B[0])
        last = int(self.A[-1]) * int(self.B[-1])
        chunks = []
        cur, done = first - 1, 0
        total = self.total_pairs()
        while done < total:
            if total - done <= self.target:
                chunks.append((cur, last))
                break
            lo_v, hi_v = cur + 1, last
            # largest v with pairs_upto(v) - done <= target
            while lo_v < hi_v:
                mid = (lo_v + hi_v + 1) // 2
                if self.pairs_upto(mid) - done <= self.target:
                    lo_v = mid
                else:
                    hi_v = mid - 1
            chunks.append((cur, lo_v))
            done = self.pairs_upto(lo_v)
            cur = lo_v
        return chunks

    def products(self, lo: int, hi: int) -> np.ndarray:
        """Products in ``(lo, hi]`` of the generated pairs, unsorted."""
        A, B = self.A, self.B
        j0 = np.searchsorted(B, np.uint64(lo) // A, side="right").astype(np.int64)
        j1 = np.searchsorted(B, np.uint64(hi) // A, side="right").astype(np.int64)
        if self.symmetric:
            j0 = np.maximum(j0, self._start)
        counts = np.maximum(j1 - j0, 0)
        total = int(counts.sum())
        if total == 0:
            return np.zeros(0, dtype=np.uint64)
        keep = np.flatnonzero(counts)
        counts, j0 = counts[keep], j0[keep]
        offsets = np.cumsum(counts) - counts
        idx = np.arange(total, dtype=np.int64) - np.repeat(offsets - j0, counts)
        return np.repeat(A[keep], counts) * B[idx]

    def tally(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Distinct products in ``(lo, hi]`` with their ordered-pair counts."""
        prods = self.products(lo, hi)
        if prods.size == 0:
            return prods, np.zeros(0, dtype=np.int64)
        width = hi - lo
        if width <= 4 * prods.size:
            counts = np.bincount((prods - np.uint64(lo + 1)).astype(np.int64), minlength=width)
            nz = np.flatnonzero(counts)
            values = nz.astype(np.uint64) + np.uint64(lo + 1)
            taus = counts[nz].astype(np.int64)
        else:
            values, taus = np.unique(prods, return_counts=True)
            taus = taus.astype(np.int64)
        if self.symmetric:
            taus *= 2
            sq = self.A * self.A
            sq = sq[(sq > np.uint64(lo)) & (sq <= np.uint64(hi))]
            taus[np.searchsorted(values, sq)] -= 1
        return values, taus

    def marks(self, lo: int, hi: int) -> np.ndarray:
        """Boolean map of ``(lo, hi]`` marking products, generated in budget-sized pieces."""
        mark = np.zeros(hi - lo, dtype=bool)
        for c_lo, c_hi in self.boundaries():
            a, b = max(lo, c_lo), min(hi, c_hi)
            if a < b:
                prods = self.products(a, b)
                mark[(prods - np.uint64(lo + 1)).astype(np.int64)] = True
        return mark


@dataclass(frozen=True)
class ProductSetSummary:
    size: int
    pair_count: int
    max_tau: int


def product_set(A, B, mem_budget: int | None = None, workers: int = 1) -> ProductSetSummary:
    """Exact size of ``AB = {ab : a in A, b in B}`` and its largest multiplicity."""
    A, B = as_int_set(A), as_int_set(B)
    plan = _PairPlan(A, B, mem_budget, workers)

    def one(bounds):
        values, taus = plan.tally(*bounds)
        return values.size, int(taus.max()) if taus.size else 0

    parts = _run(one, plan.boundaries(), workers)
    return ProductSetSummary(
        size=sum(p[0] for p in parts),
        pair_count=int(A.size) * int(B.size),
        max_tau=max((p[1] for p in parts), default=0),
    )


def product_plan(A, B, mem_budget: int | None = None, workers: int = 1) -> _PairPlan:
    """Reusable chunked enumerator of the products of A and B."""
    return _PairPlan(as_int_set(A), as_int_set(B), mem_budget, workers)


@dataclass
class ProductTally:
    """Ordered-pair multiplicity ``tau(x)`` of every product x of a set with itself."""

    values: np.ndarray
    taus: np.ndarray

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, x: int) -> int:
        i = int(np.searchsorted(self.values, np.uint64(x)))
        if i < self.values.size and int(self.values[i]) == x:
            return int(self.taus[i])
        return 0

    def as_dict(self) -> dict[int, int]:
        return {int(v): int(t) for v, t in zip(self.values, self.taus)}

    def total(self) -> int:
        return int(self.taus.sum())

    def energy(self) -> int:
        return _energy_of(tau_histogram_of(self.taus))


def tau_histogram_of(taus: np.ndarray) -> np.ndarray:
    return np.bincount(taus) if taus.size else np.zeros(1, dtype=np.int64)


def _energy_of(hist: np.ndarray) -> int:
    return sum(int(c) * t * t for t, c in enumerate(hist) if c)


def tau_counts(B, mem_budget: int | None = None, workers: int = 1) -> ProductTally:
    """Full product multiplicity map of B with itself.  Holds every distinct product."""
    B = as_int_set(B)
    plan = _PairPlan(B, B, mem_budget, workers)
    parts = _run(lambda b: plan.tally(*b), plan.boundaries(), workers)
    if not parts:
        return ProductTally(np.zeros(0, dtype=np.uint64), np.zeros(0, dtype=np.int64))
    return ProductTally(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def tau_histogram(B, mem_budget: int | None = None, workers: int = 1) -> np.ndarray:
    """``hist[t]`` = number of products x of B with B having tau(x) == t.

    Streams over the chunks, so memory stays bounded even when the product
    set itself would not fit.
    """
    B = as_int_set(B)
    plan = _PairPlan(B, B, mem_budget, workers)
    hist = np.zeros(1, dtype=np.int64)
    for h in _run(lambda b: tau_histogram_of(plan.tally(*b)[1]), plan.boundaries(), workers):
        if h.size > hist.size:
            h, hist = hist, h
        hist = hist.copy()
        hist[: h.size] += h
    return hist


def multiplicative_energy(B, mem_budget: int | None = None, workers: int = 1) -> int:
    """Number of quadruples in B^4 with b1 b2 = b3 b4, i.e. the sum of tau(x)^2."""
    return _energy_of(tau_histogram(B, mem_budget, workers))


@dataclass(frozen=True)
class EnergyReport:
    N: int
    size: int
    energy: int
    size_squared: int
    loglog_fourth: float
    ratio: float

    @property
    def normalized(self) -> float:
        """E(B) / |B|^2."""
        return self.energy / self.size_squared if self.size_squared else math.nan


def energy_diagnostics(B, N: int, mem_budget: int | None = None, workers: int = 1,
                       hist: np.ndarray | None = None) -> EnergyReport:
    B = as_int_set(B)
    if B.size and int(B[-1]) > N:
        raise ValueError(f"B is not contained in [1, {N}]")
    if hist is None:
        hist = tau_histogram(B, mem_budget, workers)
    energy = _energy_of(hist)
    size2 = int(B.size) ** 2
    l4 = iterated_log(N, 2) ** 4
    return EnergyReport(
        N=N, size=int(B.size), energy=energy, size_squared=size2, loglog_fourth=l4,
        ratio=energy / (size2 * l4) if size2 else math.nan,
    )


def read_set_file(path) -> np.ndarray:
    """Read a newline-delimited decimal set file (sorted, no duplicates)."""
    with open(path) as fh:
        values = [int(line) for line in fh if line.strip()]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{path}: values must be strictly increasing")
    return as_int_set(values)


def write_set_file(path, values) -> None:
    arr = as_int_set(values)
    with open(path, "w") as fh:
        for v in arr.tolist():
            fh.write(f"{v}\n")
