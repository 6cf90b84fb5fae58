import random
import sys

import pytest

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
