"""Discrete memoryless channels over a 2^B index alphabet.

The general model is an L x L row-stochastic transition matrix (input row,
output column) with L = 2^B. The workhorse instance is the binary symmetric
channel, where each of the B index bits flips independently with a fixed
crossover probability; its transition probabilities depend on the index pair
only through the Hamming distance of their natural binary codewords. No index
reassignment is applied: index value = codeword.
"""

from dataclasses import dataclass

import numpy as np

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ChannelModel:
    """Transition matrix P(out | in) over indexes {0..2^bit_width - 1}.

    `crossover` is set for channels built by :func:`bsc_channel`; it enables
    the cheap bit-flip sampling path and is recorded in persisted quantizers.
    """

    bit_width: int
    transition: np.ndarray
    crossover: float | None = None

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=np.float64)
        size = 1 << self.bit_width
        if p.shape != (size, size):
            raise ValueError(f"transition matrix must be {size} x {size}, got {p.shape}")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("transition probabilities must lie in [0, 1]")
        row_sums = p.sum(axis=1)
        if np.max(np.abs(row_sums - 1.0)) > _ROW_SUM_TOL:
            raise ValueError("every transition-matrix row must sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "transition", p)

    @property
    def size(self):
        return self.transition.shape[0]

    def is_identity(self):
        return np.array_equal(self.transition, np.eye(self.size))


def hamming_distance(i, j, bit_width):
    """Number of differing bits between two B-bit indexes."""
    top = 1 << bit_width
    if not (0 <= i < top and 0 <= j < top):
        raise ValueError(f"indexes must be in [0, {top}), got {i}, {j}")
    return (int(i) ^ int(j)).bit_count()


def bsc_channel(bit_width, crossover):
    """Binary symmetric channel on B-bit indexes.

    P(j | i) = crossover^d * (1 - crossover)^(B - d) with d the Hamming
    distance between i and j. crossover must lie in [0, 0.5]; 0 gives the
    exact identity matrix.
    """
    if not 0.0 <= crossover <= 0.5:
        raise ValueError(f"crossover probability must be in [0, 0.5], got {crossover}")
    idx = np.arange(1 << bit_width)
    dist = np.bitwise_count(idx[:, None] ^ idx[None, :]).astype(np.float64)
    p = crossover**dist * (1.0 - crossover) ** (bit_width - dist)
    return ChannelModel(bit_width=bit_width, transition=p, crossover=float(crossover))


def identity_channel(bit_width):
    """Error-free channel: every index is delivered unchanged."""
    return bsc_channel(bit_width, 0.0)


def transmit(channel, index, rng):
    """Send one index through the channel; returns the received index.

    For a BSC this flips each of the B bits independently, which samples the
    same distribution as the matrix row.
    """
    size = channel.size
    if not 0 <= index < size:
        raise ValueError(f"index must be in [0, {size}), got {index}")
    if channel.crossover is not None:
        flips = rng.random(channel.bit_width) < channel.crossover
        mask = int(flips @ (1 << np.arange(channel.bit_width)))
        return int(index) ^ mask
    edges = np.cumsum(channel.transition[index])
    return min(int(np.searchsorted(edges, rng.random(), side="right")), size - 1)


def transmit_indices(channel, indices, rng, chunk=8192):
    """Vectorized :func:`transmit` over an index array."""
    idx = np.asarray(indices, dtype=np.int64)
    size = channel.size
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise ValueError(f"indexes must be in [0, {size})")
    if channel.crossover is not None:
        flips = rng.random((idx.size, channel.bit_width)) < channel.crossover
        masks = flips @ (1 << np.arange(channel.bit_width, dtype=np.int64))
        return idx ^ masks
    edges = np.cumsum(channel.transition, axis=1)
    out = np.empty(idx.size, dtype=np.int64)
    for start in range(0, idx.size, chunk):
        stop = min(start + chunk, idx.size)
        u = rng.random(stop - start)
        out[start:stop] = (u[:, None] >= edges[idx[start:stop]]).sum(axis=1)
    np.clip(out, 0, size - 1, out=out)
    return out


def load_channel(path):
    """Read a channel from a plain-text file: a line with L, then L rows of
    L space-separated probabilities. L must be a power of two; rows are
    validated to be stochastic."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"{path}: empty channel file")
    size = int(tokens[0])
    if size <= 0 or size & (size - 1):
        raise ValueError(f"{path}: alphabet size {size} is not a power of two")
    if len(tokens) != 1 + size * size:
        raise ValueError(f"{path}: expected {size * size} probabilities, found {len(tokens) - 1}")
    p = np.array(tokens[1:], dtype=np.float64).reshape(size, size)
    return ChannelModel(bit_width=size.bit_length() - 1, transition=p)


def save_channel(path, channel):
    """Write a channel in the format read by :func:`load_channel`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{channel.size}\n")
        for row in channel.transition:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
