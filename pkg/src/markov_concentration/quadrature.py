"""Gauss-Hermite tables and orthonormal Hermite polynomials for N(0, 1)."""
from functools import lru_cache

import numpy as np
from scipy import special


@lru_cache(maxsize=64)
def _gauss_hermite(order):
    nodes, weights = special.roots_hermitenorm(order)
    weights = weights / weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_hermite(order):
    """Nodes and weights integrating against the standard normal law.

    The weights sum to one, so ``weights @ f(nodes)`` approximates
    ``E f(Z)`` for ``Z ~ N(0, 1)``; exact for polynomials of degree
    ``< 2 * order``. Returned arrays are read-only and shared.
    """
    if order < 1:
        raise ValueError("quadrature order must be positive")
    return _gauss_hermite(int(order))


def orthonormal_hermite(z, degree):
    """Evaluate ``h_0, ..., h_{degree-1}`` at ``z``.

    ``h_k = He_k / sqrt(k!)`` are orthonormal in ``L^2(N(0, 1))``. Uses the
    normalized three-term recurrence
    ``h_{k+1} = (z h_k - sqrt(k) h_{k-1}) / sqrt(k + 1)``, which stays
    stable where the monomial form overflows.

    Returns
    -------
    ndarray of shape ``z.shape + (degree,)``
    """
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape + (degree,))
    out[..., 0] = 1.0
    if degree > 1:
        out[..., 1] = z
    for k in range(1, degree - 1):
        out[..., k + 1] = (z * out[..., k] - np.sqrt(k) * out[..., k - 1]) / np.sqrt(k + 1)
    return out
