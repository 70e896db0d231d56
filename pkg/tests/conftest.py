import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from advmatch.core import AlphabetDistribution, UnlabeledDatabase  # noqa: E402


@pytest.fixture
def unif5():
    return AlphabetDistribution.uniform(5)


def random_db(rng: np.random.Generator, m: int, n: int, k: int) -> UnlabeledDatabase:
    return UnlabeledDatabase(rng.integers(1, k + 1, size=(m, n)), k)
