"""Dense symmetric-matrix primitives.

Symmetric matrices are plain ``(p, p)`` float arrays. :func:`as_symmetric`
validates one and rebuilds it from its upper triangle, so every matrix that
leaves this module is exactly symmetric.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateVarianceError, InsufficientDataError, InvalidDataError

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class JacobiRotation:
    """Plane rotation acting on coordinates ``i < j``.

    As a matrix ``R`` it is the identity except ``R[i, i] = R[j, j] = c``,
    ``R[i, j] = s`` and ``R[j, i] = -s``; it maps ``x`` to ``R @ x``.
    """

    i: int
    j: int
    c: float
    s: float

    @property
    def angle(self):
        return math.atan2(self.s, self.c)

    def matrix(self, p):
        R = np.eye(p)
        R[self.i, self.i] = R[self.j, self.j] = self.c
        R[self.i, self.j] = self.s
        R[self.j, self.i] = -self.s
        return R

    def apply(self, x, inverse=False):
        """Rotate entries ``i`` and ``j`` along the last axis (rows of 2-D data are samples)."""
        x = np.array(x, dtype=float, copy=True)
        s = -self.s if inverse else self.s
        xi = x[..., self.i].copy()
        xj = x[..., self.j].copy()
        x[..., self.i] = self.c * xi + s * xj
        x[..., self.j] = -s * xi + self.c * xj
        return x


def as_symmetric(a, atol=1e-10):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidDataError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidDataError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > atol * scale:
        raise InvalidDataError("matrix is not symmetric")
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def sample_covariance(data):
    """Unbiased (divisor ``n - 1``) covariance of the columns of ``data``."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise InvalidDataError(f"expected an n x p array, got shape {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {n}")
    if not np.all(np.isfinite(X)):
        raise InvalidDataError("data has non-finite entries")
    Xc = X - X.mean(axis=0)
    return as_symmetric(Xc.T @ Xc / (n - 1))


def correlation_from_covariance(sigma, floor=VARIANCE_FLOOR):
    sigma = as_symmetric(sigma)
    d = np.diag(sigma)
    bad = np.flatnonzero(d <= floor)
    if bad.size:
        raise DegenerateVarianceError(int(bad[0]), float(d[bad[0]]))
    sd = np.sqrt(d)
    corr = sigma / np.outer(sd, sd)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return as_symmetric(corr)


def jacobi_angle(a_ii, a_jj, a_ij):
    """Angle zeroing the off-diagonal entry, folded into ``[-pi/4, pi/4]``."""
    theta = 0.5 * math.atan2(2.0 * a_ij, a_ii - a_jj)
    if theta > math.pi / 4:
        theta -= math.pi / 2
    elif theta < -math.pi / 4:
        theta += math.pi / 2
    return theta


def _check_pair(p, i, j):
    if not (0 <= i < j < p):
        raise IndexError(f"need 0 <= i < j < {p}, got ({i}, {j})")


def jacobi_rotate(sigma, i, j):
    """Rotate ``sigma`` in the ``(i, j)`` plane so that entry ``(i, j)`` vanishes.

    Returns the rotation and ``R @ sigma @ R.T``. Indices are 0-based.
    """
    sigma = as_symmetric(sigma)
    p = sigma.shape[0]
    _check_pair(p, i, j)
    a, d, b = sigma[i, i], sigma[j, j], sigma[i, j]
    if b == 0.0:
        c, s = 1.0, 0.0
    else:
        theta = jacobi_angle(a, d, b)
        c, s = math.cos(theta), math.sin(theta)
    rot = JacobiRotation(i, j, c, s)

    out = sigma.copy()
    row_i = c * sigma[i] + s * sigma[j]
    row_j = -s * sigma[i] + c * sigma[j]
    out[i, :] = row_i
    out[j, :] = row_j
    out[:, i] = row_i
    out[:, j] = row_j
    out[i, i] = c * c * a + 2.0 * c * s * b + s * s * d
    out[j, j] = s * s * a - 2.0 * c * s * b + c * c * d
    out[i, j] = out[j, i] = 0.0
    return rot, out


def reference_eigh(sigma):
    """Eigenvalues in descending order with orthonormal eigenvector columns."""
    sigma = as_symmetric(sigma)
    w, V = np.linalg.eigh(sigma)
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def jacobi_eigenvalues(sigma, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi sweeps until the off-diagonal mass is negligible."""
    A = as_symmetric(sigma)
    p = A.shape[0]
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                if A[i, j] != 0.0:
                    _, A = jacobi_rotate(A, i, j)
    return np.sort(np.diag(A))[::-1]
