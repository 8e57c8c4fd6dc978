import sys
from pathlib import Path

import pytest

from prodsets.sieve import build_sieve

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def sieve():
    return build_sieve(10**6)


@pytest.fixture(scope="session")
def small_sieve():
    return build_sieve(10**5)
