"""Finite-difference stencils on the uniform computational coordinate.

All derivative operators act on node arrays sampled at ``xi_j = j*h``,
``j = 0..N``.  Interior and origin nodes use 4th-order centered stencils
with ghost values supplied by parity (even or odd extension through
``xi = 0``).  The last two nodes use one-sided 4th-order stencils.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

C1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
C2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def fornberg(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives ``0..m`` at ``z``.

    Parameters
    ----------
    z : float
        Evaluation point.
    x : ndarray
        Stencil abscissae.
    m : int
        Highest derivative order.

    Returns
    -------
    ndarray, shape (len(x), m + 1)
        Column ``k`` holds the weights of the ``k``-th derivative.
    """
    x = np.asarray(x, dtype=float)
    npts = x.size
    c = np.zeros((npts, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


@lru_cache(maxsize=None)
def _tail_weights() -> tuple[np.ndarray, np.ndarray]:
    offsets = np.arange(-5, 1, dtype=float)
    return fornberg(-1.0, offsets, 2), fornberg(0.0, offsets, 2)


@lru_cache(maxsize=None)
def robin_weights() -> np.ndarray:
    """First-derivative weights at the last node from the last five nodes."""
    return fornberg(0.0, np.arange(-4, 1, dtype=float), 1)[:, 1].copy()


def _extend(f: np.ndarray, parity: int) -> np.ndarray:
    g = np.empty((f.shape[0] + 2,) + f.shape[1:])
    g[2:] = f
    g[0] = parity * f[2]
    g[1] = parity * f[1]
    return g


def d1(f: np.ndarray, h: float, parity: int) -> np.ndarray:
    """First derivative along axis 0."""
    return _derivs(f, h, parity)[0]


def d2(f: np.ndarray, h: float, parity: int) -> np.ndarray:
    """Second derivative along axis 0."""
    return _derivs(f, h, parity)[1]


def d12(f: np.ndarray, h: float, parity: int) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives along axis 0.

    Parameters
    ----------
    f : ndarray
        Node values; extra trailing axes are differentiated independently.
    h : float
        Uniform spacing of the computational coordinate.
    parity : {+1, -1}
        Parity of ``f`` under reflection through the origin.
    """
    return _derivs(f, h, parity)


def _derivs(f, h, parity):
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if n < 6:
        raise ValueError("at least 6 nodes are required")
    g = _extend(f, parity)
    out1 = np.empty_like(f)
    out2 = np.empty_like(f)
    out1[: n - 2] = (-g[4:] + 8 * g[3:-1] - 8 * g[1:-3] + g[:-4]) / (12 * h)
    out2[: n - 2] = (
        -g[4:] + 16 * g[3:-1] - 30 * g[2:-2] + 16 * g[1:-3] - g[:-4]
    ) / (12 * h * h)
    tail = f[n - 6 :]
    # the weights sum to zero; differencing against the node value makes
    # constants exact in floating point
    for k, w in zip((n - 2, n - 1), _tail_weights()):
        rel = tail - f[k]
        out1[k] = np.tensordot(w[:, 1], rel, axes=(0, 0)) / h
        out2[k] = np.tensordot(w[:, 2], rel, axes=(0, 0)) / (h * h)
    return out1, out2


def matrices(n_nodes: int, h: float, parity: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse matrices of :func:`d1` and :func:`d2` for a given parity."""
    m = n_nodes
    rows, cols, v1, v2 = [], [], [], []
    for i in range(m - 2):
        for k, off in enumerate(range(-2, 3)):
            j = i + off
            s = 1.0
            if j < 0:
                j = -j
                s = float(parity)
            rows.append(i)
            cols.append(j)
            v1.append(s * C1[k] / h)
            v2.append(s * C2[k] / (h * h))
    for i, w in zip((m - 2, m - 1), _tail_weights()):
        for k in range(6):
            rows.append(i)
            cols.append(m - 6 + k)
            v1.append(w[k, 1] / h)
            v2.append(w[k, 2] / (h * h))
    D1 = sp.csr_matrix((v1, (rows, cols)), shape=(m, m))
    D2 = sp.csr_matrix((v2, (rows, cols)), shape=(m, m))
    return D1, D2


def even_extrapolate(r: np.ndarray, f: np.ndarray, npts: int = 3) -> np.ndarray:
    """Value at ``r = 0`` of the even polynomial through nodes ``1..npts``."""
    x = r[1 : npts + 1] ** 2
    V = np.vander(x, npts, increasing=True)
    coef = np.linalg.solve(V, f[1 : npts + 1].reshape(npts, -1))
    return coef[0].reshape(f.shape[1:])
