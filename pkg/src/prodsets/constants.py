"""Closed-form constants and the parameter formulas of the constructions.

All logarithms are natural.  ``iterated_log(x, 2)`` is ``log(log(x))`` and
is what the formulas below write as ``log_2``; it is never a base-2 log.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

#: Smallest N accepted by :func:`derive_params` unless ``strict=False``.
VALIDITY_FLOOR = 100

LOG4 = math.log(4.0)


def iterated_log(x: float, j: int) -> float:
    """Apply the natural logarithm ``j`` times to ``x``.

    Raises ValueError if any intermediate value is not positive.
    """
    if j < 1:
        raise ValueError(f"iterate count must be >= 1, got {j}")
    value = x
    for i in range(1, j + 1):
        if value <= 0:
            raise ValueError(
                f"log_{j}({x}) undefined: argument of iterate {i} is {value!r} <= 0"
            )
        value = math.log(value)
    return value


def theta_forms() -> tuple[float, float]:
    """Both printed closed forms of the multiplication-table exponent."""
    first = 0.5 - (1 + math.log(math.log(2.0))) / LOG4
    second = 1 - (1 + math.log(LOG4)) / LOG4
    return first, second


def theta() -> float:
    first, second = theta_forms()
    assert abs(first - second) < 1e-12
    return second


@dataclass(frozen=True)
class ConstructionParams:
    """Derived quantities of the two constructions for one value of N.

    ``lambda1``/``lambda2`` are the tilt parameters used to bound the second
    deficit term; they are ``None`` when the tilt offset ``x`` is not in
    (0, 1), which is the case for every N reachable on a real machine.
    """

    N: int
    k: int
    r: float
    h: int
    x: float
    lambda1: float | None
    lambda2: float | None

    @property
    def omega_threshold(self) -> float:
        """Membership threshold ``k + r`` on Omega(m) for the Omega-bounded set."""
        return self.k + self.r

    @property
    def overflow_threshold(self) -> int:
        return 2 * self.k + self.h

    def as_dict(self) -> dict:
        return asdict(self)


def derive_params(N: int, strict: bool = True) -> ConstructionParams:
    """Compute k, r, h, x and the tilt parameters for ``N``.

    With ``strict`` (the default) N below :data:`VALIDITY_FLOOR` is rejected.
    Otherwise r and h are clamped at zero when ``log_3 N`` is negative; N must
    still exceed e so that ``log_2 N`` exists.
    """
    N = int(N)
    if strict and N < VALIDITY_FLOOR:
        raise ValueError(
            f"N={N} is below the validity floor {VALIDITY_FLOOR} "
            f"(log_3 N = {_describe_log(N, 3)}, k would be {_k_or_none(N)})"
        )
    if N <= math.e:
        raise ValueError(f"N={N}: log_2 N = log(log N) undefined for N <= e")
    l2 = iterated_log(N, 2)
    if l2 <= 0:
        raise ValueError(f"N={N}: log_2 N = {l2:.6g} <= 0, log_3 N undefined")
    return params_from_loglog(l2, N)


def params_from_loglog(l2: float, N: int = 0) -> ConstructionParams:
    """Parameters as functions of ``log log N`` alone.

    Every derived quantity depends on N only through ``log log N``, which
    lets the asymptotic regime (x < 1 needs log log N above roughly 25) be
    evaluated without materializing N.
    """
    if l2 <= 0:
        raise ValueError(f"log log N = {l2:.6g} <= 0, log_3 N undefined")
    l3 = math.log(l2)
    k = math.floor(l2 / LOG4)
    r = 2.0 * math.sqrt(max(l2 * l3, 0.0))
    h = max(math.floor(5.0 * l3), 0)
    x = r * LOG4 / l2
    if 0.0 < x < 1.0:
        lambda2 = (1.0 - x) / LOG4
        lambda1 = (1.0 + x) / (1.0 - x)
    else:
        lambda1 = lambda2 = None
    return ConstructionParams(N=N, k=k, r=r, h=h, x=x, lambda1=lambda1, lambda2=lambda2)


def _describe_log(N: int, j: int) -> str:
    try:
        return f"{iterated_log(N, j):.6g}"
    except ValueError:
        return "undefined"


def _k_or_none(N: int):
    try:
        return math.floor(iterated_log(N, 2) / LOG4)
    except ValueError:
        return None


def mn_prediction(N: int) -> float:
    """N^2 / ((log N)^(2 theta) (log log N)^(3/2)), without implied constant."""
    if N <= math.exp(math.e):
        raise ValueError(f"N={N}: need N > e^e so that log log N > 1")
    logn = math.log(N)
    return N * N / (logn ** (2 * theta()) * math.log(logn) ** 1.5)


def taylor_lhs(x: float) -> float:
    """(1+x) log(1+x) + (1-x) log(1-x)."""
    return (1 + x) * math.log1p(x) + (1 - x) * math.log1p(-x)


def taylor_inequality_check(x: float) -> bool:
    if not abs(x) < 1:
        raise ValueError(f"|x| must be < 1, got {x}")
    return taylor_lhs(x) >= x * x - 1e-15
