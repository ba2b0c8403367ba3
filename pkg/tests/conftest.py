import numpy as np
import pytest

from qiup import OpticsParams, SpdcParams

NM, UM, MM = 1e-9, 1e-6, 1e-3


@pytest.fixture
def nir():
    """810/1550 nm pair from a 2 mm crystal, 1 mm pump waist."""
    return SpdcParams(810 * NM, 1550 * NM, 2 * MM, 1 * MM)


@pytest.fixture
def unit_optics():
    return OpticsParams(1.0, 1.0, 0.0)


def gauss_legendre_4d(f, halfwidths, n=24):
    """Tensor-product Gauss-Legendre quadrature of f(u1, u2, u3, u4) over a centred box."""
    x, w = np.polynomial.legendre.leggauss(n)
    axes = [h * x for h in halfwidths]
    weights = [h * w for h in halfwidths]
    grids = np.meshgrid(*axes, indexing="ij")
    wgrid = np.einsum("i,j,k,l->ijkl", *weights)
    return float(np.sum(f(*grids) * wgrid))
