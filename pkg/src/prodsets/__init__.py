"""Extremal product-set constructions and their desk-scale verification."""

from prodsets.constants import (
    ConstructionParams,
    derive_params,
    iterated_log,
    mn_prediction,
    taylor_inequality_check,
    theta,
)
from prodsets.errors import CapacityError
from prodsets.sieve import FactorSieve, FactorSignature, build_sieve, factorize

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConstructionParams",
    "FactorSieve",
    "FactorSignature",
    "build_sieve",
    "derive_params",
    "factorize",
    "iterated_log",
    "mn_prediction",
    "taylor_inequality_check",
    "theta",
]
