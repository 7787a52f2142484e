"""Exactly-sparse Gaussian sources, unit-norm-column sensing matrices, and
noisy linear measurements.

The source model: a vector in R^M with exactly K nonzero coefficients, the
nonzero locations uniform over all K-subsets and the coefficients i.i.d.
standard normal. Sensing matrices have i.i.d. N(0, 1/N) entries rescaled to
unit column norm; a matrix is generated once per experiment and reused for
every trial (the decoder is assumed to know it).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SparseVector:
    """An exactly K-sparse vector: support indexes plus their coefficients."""

    dim: int
    support: np.ndarray  # sorted int indexes, len K
    values: np.ndarray   # coefficients on the support, len K

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.intp)
        values = np.asarray(self.values, dtype=np.float64)
        if support.shape != values.shape or support.ndim != 1:
            raise ValueError("support and values must be 1-d arrays of equal length")
        if support.size and (support.min() < 0 or support.max() >= self.dim):
            raise ValueError("support index out of range")
        if np.unique(support).size != support.size:
            raise ValueError("support indexes must be distinct")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @property
    def sparsity(self):
        return int(self.support.size)

    def dense(self):
        """Return the vector embedded in R^dim (off-support entries exact zeros)."""
        x = np.zeros(self.dim)
        x[self.support] = self.values
        return x


@dataclass(frozen=True)
class SensingMatrix:
    """An N x M measurement matrix with unit-norm columns, N < M."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("sensing matrix must be 2-d")
        if m.shape[0] >= m.shape[1]:
            raise ValueError(f"need fewer rows than columns, got shape {m.shape}")
        norms = np.linalg.norm(m, axis=0)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("columns must have unit norm")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_measurements(self):
        return self.matrix.shape[0]

    @property
    def dim(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class Measurement:
    """A measurement vector together with the noise level used to produce it."""

    vector: np.ndarray
    noise_std: float = 0.0


def generate_sparse_vector(rng, dim, sparsity):
    """Draw an exactly `sparsity`-sparse vector in R^dim.

    The support is a uniform random subset of {0..dim-1} of the given size;
    the coefficients are i.i.d. standard normal.
    """
    if not 0 <= sparsity <= dim:
        raise ValueError(f"sparsity must be in [0, {dim}], got {sparsity}")
    support = np.sort(rng.choice(dim, size=sparsity, replace=False))
    values = rng.standard_normal(sparsity)
    return SparseVector(dim=dim, support=support, values=values)


def sparse_batch(rng, dim, sparsity, count):
    """Draw `count` sparse vectors at once, returned densified as (count, dim).

    Distributionally identical to repeated :func:`generate_sparse_vector`
    draws; used by the experiment pipeline where per-vector objects would be
    wasteful.
    """
    if not 0 <= sparsity <= dim:
        raise ValueError(f"sparsity must be in [0, {dim}], got {sparsity}")
    out = np.zeros((count, dim))
    if sparsity == 0 or count == 0:
        return out
    # Uniform K-subsets: the smallest `sparsity` entries of a row of i.i.d.
    # uniforms index a uniformly random subset.
    keys = rng.random((count, dim))
    supports = np.argpartition(keys, sparsity - 1, axis=1)[:, :sparsity]
    values = rng.standard_normal((count, sparsity))
    np.put_along_axis(out, supports, values, axis=1)
    return out


def _gaussian_matrix(rng, num_rows, num_cols):
    # Raw i.i.d. N(0, 1/num_rows) entries, before column normalization.
    return rng.normal(0.0, 1.0 / np.sqrt(num_rows), size=(num_rows, num_cols))


def generate_sensing_matrix(rng, num_measurements, dim):
    """Draw an under-determined Gaussian sensing matrix with unit-norm columns."""
    if not 0 < num_measurements < dim:
        raise ValueError(f"need 0 < rows < cols, got {num_measurements} x {dim}")
    raw = _gaussian_matrix(rng, num_measurements, dim)
    return SensingMatrix(raw / np.linalg.norm(raw, axis=0))


def measure(sensing, x, noise_std=0.0, rng=None):
    """Form y = A x + w with w i.i.d. N(0, noise_std^2).

    With noise_std = 0 the measurement is deterministic and `rng` is unused.
    """
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    dense = x.dense() if isinstance(x, SparseVector) else np.asarray(x, dtype=np.float64)
    if dense.shape[0] != sensing.dim:
        raise ValueError(f"dimension mismatch: matrix has {sensing.dim} columns, source has length {dense.shape[0]}")
    y = sensing.matrix @ dense
    if noise_std > 0.0:
        if rng is None:
            raise ValueError("rng required when noise_std > 0")
        y = y + rng.normal(0.0, noise_std, size=y.shape)
    return Measurement(vector=y, noise_std=float(noise_std))
