import numpy as np
import pytest

from isothermic import GridSpec, PolarizedSurface, QField
from isothermic import oracles


def sample_values(grid, fn):
    """Sample a callable z -> Quaternion into an (ny, nx, 4) array."""
    out = np.empty((grid.ny, grid.nx, 4))
    zs = grid.zgrid()
    for iy in range(grid.ny):
        for ix in range(grid.nx):
            out[iy, ix] = fn(zs[iy, ix]).as_array()
    return out


def sample_field(grid, fn):
    return QField(grid, sample_values(grid, fn))


@pytest.fixture(scope="session")
def grid33():
    return GridSpec.square(1.0, 33)


@pytest.fixture(scope="session")
def grid65():
    return GridSpec.square(1.0, 65)


@pytest.fixture(scope="session")
def grid129():
    # h = 1/64 on [-1, 1]^2, the default desk scale
    return GridSpec.square(1.0, 129)


@pytest.fixture(scope="session")
def plane129(grid129):
    return PolarizedSurface.sample(grid129, oracles.f_plane, "dzbar2")


@pytest.fixture(scope="session")
def plane65(grid65):
    return PolarizedSurface.sample(grid65, oracles.f_plane, "dzbar2")


@pytest.fixture(scope="session")
def catenoid129(grid129):
    return PolarizedSurface.sample(grid129, lambda z: oracles.minimal_family(z, 1.0))
