import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hallmhd import Grid, random_divfree, random_field  # noqa: E402


@pytest.fixture
def grid2():
    return Grid.square(2, 32)


@pytest.fixture
def grid3():
    return Grid.square(3, 16)


@pytest.fixture
def quiet():
    """Silence the divergence warnings raised on purpose by non-solenoidal inputs."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def divfree(dim, seed, n=None, band=None):
    n = n or (32 if dim == 2 else 16)
    g = Grid.square(dim, n)
    return random_divfree(g, seed, band or n // 4)


def generic(dim, seed, n=None, band=None):
    n = n or (32 if dim == 2 else 16)
    g = Grid.square(dim, n)
    return random_field(g, seed, band or n // 4)
