"""Greedy sparse recovery by orthogonal matching pursuit.

OMP stands in for the conditional-mean estimate of the source given a
measurement, which is infeasible to compute exactly (the number of candidate
supports grows combinatorially). The sparsity level is known in advance, so
the pursuit runs a fixed number of greedy steps with no residual-threshold
stop. Ties in the correlation step break to the lowest column index, and a
column is never selected twice.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import SingularMatrixError, least_squares
from .sparse_source import SensingMatrix


@dataclass(frozen=True)
class SparseEstimate:
    """Output of a pursuit: dense estimate, selected support, diagnostics."""

    estimate: np.ndarray          # (dim,), zero off the recovered support
    support: np.ndarray           # selected column indexes, in selection order
    residual_norm: float
    residual_history: tuple = ()  # residual norm after each greedy step
    dropped: tuple = ()           # columns skipped due to rank deficiency

    @property
    def sparsity(self):
        return int(self.support.size)


def _as_matrix(sensing):
    if isinstance(sensing, SensingMatrix):
        return sensing.matrix
    return np.asarray(sensing, dtype=np.float64)


def omp_reconstruct(sensing, measurement, sparsity):
    """Recover a `sparsity`-sparse estimate from a single measurement vector.

    Each greedy step selects the not-yet-selected column with the largest
    absolute correlation against the current residual, then re-solves least
    squares on the accumulated support. A column whose inclusion makes the
    support submatrix rank deficient is dropped (recorded in ``dropped``)
    and the next-best candidate is tried. A zero measurement (or an exactly
    zero residual) ends the pursuit early with the support found so far.

    Parameters
    ----------
    sensing : SensingMatrix or ndarray, shape (n, dim)
    measurement : ndarray, shape (n,)
    sparsity : int, number of greedy steps; must be < n

    Returns
    -------
    SparseEstimate
    """
    a = _as_matrix(sensing)
    y = np.asarray(measurement, dtype=np.float64)
    n, dim = a.shape
    if y.shape != (n,):
        raise ValueError(f"measurement length {y.shape} does not match matrix rows {n}")
    if sparsity >= n:
        raise ValueError(f"sparsity {sparsity} must be below the measurement count {n}")
    if sparsity < 0:
        raise ValueError("sparsity must be >= 0")

    selected = []
    dropped = []
    coeffs = np.zeros(0)
    residual = y.copy()
    history = []
    excluded = np.zeros(dim, dtype=bool)

    while len(selected) < sparsity:
        corr = np.abs(a.T @ residual)
        corr[excluded] = -1.0
        picked = False
        while True:
            idx = int(np.argmax(corr))
            if corr[idx] <= 0.0:
                break  # zero residual or no admissible column left
            try:
                trial = selected + [idx]
                coeffs = least_squares(a[:, trial], y)
            except SingularMatrixError:
                dropped.append(idx)
                excluded[idx] = True
                corr[idx] = -1.0
                continue
            selected = trial
            excluded[idx] = True
            picked = True
            break
        if not picked:
            break
        residual = y - a[:, selected] @ coeffs
        history.append(float(np.linalg.norm(residual)))

    estimate = np.zeros(dim)
    if selected:
        estimate[selected] = coeffs
    return SparseEstimate(
        estimate=estimate,
        support=np.asarray(selected, dtype=np.intp),
        residual_norm=float(np.linalg.norm(residual)),
        residual_history=tuple(history),
        dropped=tuple(dropped),
    )


def omp_reconstruct_batch(sensing, measurements, sparsity):
    """Run OMP on many measurement vectors sharing one sensing matrix.

    Vectorized across rows of `measurements` (shape (count, n)); the support
    least-squares solves go through batched normal equations on the (tiny)
    selected submatrices. Agrees with :func:`omp_reconstruct` up to floating
    round-off; falls back to the per-vector path if any batched system is
    singular.

    Returns
    -------
    estimates : ndarray, shape (count, dim)
    supports : ndarray, shape (count, sparsity), -1 where the pursuit
        stopped early
    """
    a = _as_matrix(sensing)
    ys = np.asarray(measurements, dtype=np.float64)
    if ys.ndim != 2 or ys.shape[1] != a.shape[0]:
        raise ValueError(f"measurements must be (count, {a.shape[0]}), got {ys.shape}")
    if sparsity >= a.shape[0]:
        raise ValueError(f"sparsity {sparsity} must be below the measurement count {a.shape[0]}")
    count = ys.shape[0]
    dim = a.shape[1]
    estimates = np.zeros((count, dim))
    supports = np.full((count, max(sparsity, 1)), -1, dtype=np.intp)
    if sparsity == 0 or count == 0:
        return estimates, supports[:, :sparsity]

    try:
        coeffs = np.zeros((count, sparsity))
        residual = ys.copy()
        active = np.linalg.norm(residual, axis=1) > 0.0
        rows = np.arange(count)
        for step in range(sparsity):
            corr = np.abs(residual @ a)
            if step > 0:
                prior = supports[:, :step]
                valid = prior >= 0
                corr[np.repeat(rows, step)[valid.ravel()], prior[valid]] = -1.0
            picked = np.argmax(corr, axis=1)
            active &= corr[rows, picked] > 0.0
            act = np.flatnonzero(active)
            if act.size == 0:
                break
            supports[act, step] = picked[act]
            sel = supports[act, : step + 1]
            # (act, n, step+1) gather of the selected columns
            cols = np.moveaxis(a[:, sel], 0, 1)
            gram = cols.transpose(0, 2, 1) @ cols
            rhs = cols.transpose(0, 2, 1) @ ys[act, :, None]
            sol = np.linalg.solve(gram, rhs)[..., 0]
            coeffs[act, : step + 1] = sol
            residual[act] = ys[act] - (cols @ sol[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # Rank-deficient selection somewhere in the batch; the scalar path
        # handles column dropping.
        for t in range(count):
            est = omp_reconstruct(a, ys[t], sparsity)
            estimates[t] = est.estimate
            supports[t, :] = -1
            supports[t, : est.sparsity] = est.support
        return estimates, supports

    mask = supports >= 0
    estimates[np.nonzero(mask)[0], supports[mask]] = coeffs[mask]
    return estimates, supports
