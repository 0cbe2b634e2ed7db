"""Independent numerical integrators used as test oracles."""
import numpy as np
from numpy.polynomial.hermite import hermgauss


def gh_integral_4d(state, scale, nodes=40):
    """Integral of a two-mode Wigner function over C^2 by tensor Gauss-Hermite.

    Each real coordinate is written as ``scale * z`` and the Gaussian weight
    of the rule is divided back out, so ``state`` is sampled directly.
    """
    z, w = hermgauss(nodes)
    x = scale * z
    wx = scale * w * np.exp(z**2)
    a = x[:, None, None, None] + 1j * x[None, :, None, None]
    b = x[None, None, :, None] + 1j * x[None, None, None, :]
    vals = state(a, b)
    weights = wx[:, None, None, None] * wx[None, :, None, None] * wx[None, None, :, None] * wx[None, None, None, :]
    return float(np.sum(vals * weights))
