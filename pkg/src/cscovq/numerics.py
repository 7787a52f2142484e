"""Small dense linear-algebra kernel: matrix application and QR least squares.

Everything operates on float64 ndarrays. The least-squares solve goes through
an orthogonalizing factorization rather than the normal equations because the
column submatrices accumulated by greedy pursuit can be moderately
ill-conditioned.
"""

import numpy as np

# Relative pivot threshold below which a factorization is treated as rank
# deficient.
RANK_TOL = 1e-10


class SingularMatrixError(Exception):
    """Raised when a least-squares system is rank deficient."""


def mat_vec(a, v):
    """Apply a dense matrix to a vector.

    Parameters
    ----------
    a : ndarray, shape (rows, cols)
    v : ndarray, shape (cols,)

    Returns
    -------
    ndarray, shape (rows,)
    """
    a = np.asarray(a, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if a.ndim != 2 or v.ndim != 1:
        raise ValueError(f"expected a matrix and a vector, got shapes {a.shape} and {v.shape}")
    if a.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix has {a.shape[1]} columns, vector has length {v.shape[0]}")
    return a @ v


def least_squares(a, b):
    """Solve min_z ||a z - b||_2 for a tall, full-column-rank matrix.

    Uses a reduced QR factorization. A pivot of magnitude below
    ``RANK_TOL`` times the largest pivot raises :class:`SingularMatrixError`.

    Parameters
    ----------
    a : ndarray, shape (m, n) with m >= n
    b : ndarray, shape (m,)

    Returns
    -------
    ndarray, shape (n,)
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 1:
        raise ValueError(f"expected a matrix and a vector, got shapes {a.shape} and {b.shape}")
    m, n = a.shape
    if b.shape[0] != m:
        raise ValueError(f"dimension mismatch: matrix has {m} rows, vector has length {b.shape[0]}")
    if m < n:
        raise ValueError(f"system is underdetermined: {m} rows < {n} columns")

    q, r = np.linalg.qr(a, mode="reduced")
    pivots = np.abs(np.diag(r))
    largest = pivots.max() if pivots.size else 0.0
    if largest == 0.0 or pivots.min() < RANK_TOL * largest:
        raise SingularMatrixError(f"rank-deficient system: pivot ratio {pivots.min() / largest if largest else 0.0:.3e}")
    return np.linalg.solve(r, q.T @ b)
