import numpy as np
import pytest

from thinmach.field import SlabGrid, Torus2


@pytest.fixture
def torus():
    return Torus2(2 * np.pi, 32)


@pytest.fixture
def big_torus():
    return Torus2(N=64)


@pytest.fixture
def slab():
    return SlabGrid(Torus2(2 * np.pi, 16), 0.5, 8)


def band_limited(grid, rng, ncomp=None, frac=0.5):
    """Random real field whose modes sit inside ``frac`` of the dealiased band."""
    kcut = frac * grid.k_max / np.sqrt(2)
    shape = grid.fft(np.zeros(grid.shape)).shape
    if ncomp is not None:
        shape = (ncomp,) + shape
    F = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (grid.kabs < kcut)
    return grid.ifft(F)
