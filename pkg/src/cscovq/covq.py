"""Channel-optimized vector quantizer training.

The quantizer is trained on a sample set by alternating two conditional
minimizers of the expected end-to-end squared error over the channel:

* encoder step - each sample x is mapped to the index i minimizing
  ``E[||c_J||^2 | I=i] - 2 x . E[c_J | I=i]``, where the expectations run
  over the channel transition row of i. The two per-index aggregates are
  precomputed once per codebook so a single encode costs O(L * dim).
* codebook step - for fixed assignments, codevector j becomes the
  channel-weighted average of the per-index sample sums:
  ``c_j = sum_i P(j|i) S_i / sum_i P(j|i) T_i`` with S_i / T_i the sum and
  count of samples assigned to i.

Both steps can only lower (or keep) the objective, so the recorded history
is non-increasing; training stops when the relative improvement between
iterations falls below a tolerance. With an error-free channel the rules
collapse to plain nearest-neighbor generalized Lloyd iteration.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, bsc_channel, load_channel

# A codebook cell whose channel-weighted sample mass falls below this is
# treated as empty and repaired.
EMPTY_CELL_TOL = 1e-12

_ENCODE_CHUNK = 4096


@dataclass(frozen=True)
class Codebook:
    """2^bit_width reconstruction codevectors, one per receivable index."""

    vectors: np.ndarray  # (L, dim)
    bit_width: int

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != 1 << self.bit_width:
            raise ValueError(f"expected {1 << self.bit_width} codevectors, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("codevectors must be finite")
        object.__setattr__(self, "vectors", v)

    @property
    def size(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class EncoderAggregates:
    """Per-index channel averages used by the encoder rule.

    expected_sq_norm[i] = sum_j P(j|i) ||c_j||^2
    expected_vector[i]  = sum_j P(j|i) c_j

    Over an error-free channel these reduce to ||c_i||^2 and c_i.
    """

    expected_sq_norm: np.ndarray  # (L,)
    expected_vector: np.ndarray   # (L, dim)


@dataclass(frozen=True)
class TrainingSet:
    """Samples the quantizer is fit to, with optional originating sources."""

    samples: np.ndarray            # (T, dim)
    originals: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] == 0:
            raise ValueError("training samples must form a non-empty (T, dim) array")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.shape[0]


@dataclass
class TrainedQuantizer:
    """Codebook plus precomputed encoder aggregates and training diagnostics.

    `history` holds the training objective after every half-step (encode,
    update, encode, ...); it is non-increasing up to floating-point slack.
    """

    codebook: Codebook
    aggregates: EncoderAggregates
    channel: ChannelModel
    history: tuple = ()
    iterations: int = 0

    @property
    def dim(self):
        return self.codebook.dim


def compute_aggregates(codebook, channel):
    """Precompute the encoder's channel-averaged codebook statistics."""
    if codebook.size != channel.size:
        raise ValueError(f"codebook size {codebook.size} does not match channel size {channel.size}")
    vectors = codebook.vectors
    sq = np.einsum("ld,ld->l", vectors, vectors)
    return EncoderAggregates(
        expected_sq_norm=channel.transition @ sq,
        expected_vector=channel.transition @ vectors,
    )


def encode(aggregates, x):
    """Map one vector to its transmission index (ties to the lowest index)."""
    scores = aggregates.expected_sq_norm - 2.0 * (aggregates.expected_vector @ np.asarray(x, dtype=np.float64))
    return int(np.argmin(scores))


def encode_batch(aggregates, xs, chunk=_ENCODE_CHUNK):
    """Vectorized :func:`encode` over rows of `xs`."""
    return _assign(aggregates, np.asarray(xs, dtype=np.float64), chunk)[0]


def _assign(aggregates, xs, chunk=_ENCODE_CHUNK):
    # Returns (assignments, picked score) without materializing the full
    # (T, L) score matrix.
    count = xs.shape[0]
    assignments = np.empty(count, dtype=np.int64)
    picked = np.empty(count)
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        scores = aggregates.expected_sq_norm[None, :] - 2.0 * xs[start:stop] @ aggregates.expected_vector.T
        idx = np.argmin(scores, axis=1)
        assignments[start:stop] = idx
        picked[start:stop] = scores[np.arange(stop - start), idx]
    return assignments, picked


def _segment_sums(assignments, xs, size):
    # Deterministic per-index sums and counts (stable sort + reduceat).
    counts = np.bincount(assignments, minlength=size).astype(np.float64)
    sums = np.zeros((size, xs.shape[1]))
    order = np.argsort(assignments, kind="stable")
    occupied = np.flatnonzero(counts)
    if occupied.size:
        boundaries = np.concatenate(([0], np.cumsum(counts[occupied].astype(np.intp))[:-1]))
        sums[occupied] = np.add.reduceat(xs[order], boundaries, axis=0)
    return sums, counts


def update_codebook(assignments, training, channel):
    """Channel-weighted centroid update for fixed sample assignments.

    Cells receiving (channel-weighted) zero sample mass carry no weight in
    the training objective; each such cell is repaired by placing it on the
    not-yet-used sample with the largest per-sample objective under the
    freshly updated codebook, which leaves the objective unchanged.
    """
    training = as_training_set(training)
    xs = training.samples
    assignments = np.asarray(assignments, dtype=np.int64)
    if assignments.shape[0] != xs.shape[0]:
        raise ValueError("one assignment per training sample required")
    if assignments.size == 0:
        raise ValueError("training set must be non-empty")
    size = channel.size
    if assignments.min() < 0 or assignments.max() >= size:
        raise ValueError(f"assignments must be in [0, {size})")

    sums, counts = _segment_sums(assignments, xs, size)
    p = channel.transition
    numer = p.T @ sums
    denom = p.T @ counts
    empty = denom < EMPTY_CELL_TOL
    vectors = numer / np.where(empty, 1.0, denom)[:, None]
    vectors[empty] = 0.0

    if empty.any():
        # P(empty cell | any assigned index) = 0, so the repair targets can
        # be ranked with the partially built codebook.
        partial = Codebook(vectors=vectors, bit_width=channel.bit_width)
        agg = compute_aggregates(partial, channel)
        per_sample = (
            np.einsum("td,td->t", xs, xs)
            + agg.expected_sq_norm[assignments]
            - 2.0 * np.einsum("td,td->t", xs, agg.expected_vector[assignments])
        )
        farthest = np.argsort(-per_sample, kind="stable")
        cells = np.flatnonzero(empty)
        donors = np.resize(farthest, cells.size) if farthest.size < cells.size else farthest[: cells.size]
        vectors[cells] = xs[donors]

    return Codebook(vectors=vectors, bit_width=channel.bit_width)


def as_training_set(training):
    if isinstance(training, TrainingSet):
        return training
    return TrainingSet(samples=np.asarray(training, dtype=np.float64))


def _initial_codebook(init, training, channel):
    if isinstance(init, Codebook):
        return init
    if isinstance(init, np.ndarray):
        return Codebook(vectors=init.copy(), bit_width=channel.bit_width)
    rng = init if isinstance(init, np.random.Generator) else np.random.default_rng(init)
    picks = rng.choice(len(training), size=channel.size, replace=False)
    return Codebook(vectors=training.samples[picks].copy(), bit_width=channel.bit_width)


def train(training, channel, init=0, tol=1e-6, max_iter=200):
    """Alternate the encoder and codebook steps until convergence.

    Parameters
    ----------
    training : TrainingSet or (T, dim) array, T >= 2^bit_width
    channel : ChannelModel the design is matched to
    init : Codebook, ndarray, Generator, or int seed. Seeds/generators
        initialize the codebook with 2^B distinct training samples.
    tol : stop when the relative objective decrease between consecutive
        iterations falls below this (must be > 0)
    max_iter : iteration cap

    Returns
    -------
    TrainedQuantizer
    """
    training = as_training_set(training)
    xs = training.samples
    if len(training) < channel.size:
        raise ValueError(f"need at least {channel.size} training samples, got {len(training)}")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    codebook = _initial_codebook(init, training, channel)
    if codebook.dim != xs.shape[1] or codebook.size != channel.size:
        raise ValueError("initial codebook shape does not match training set and channel")

    sample_sq = np.einsum("td,td->t", xs, xs)
    aggregates = compute_aggregates(codebook, channel)
    history = []
    iterations = 0
    previous = None
    for _ in range(max_iter):
        iterations += 1
        assignments, picked = _assign(aggregates, xs)
        history.append(float(np.mean(sample_sq + picked)))

        codebook = update_codebook(assignments, training, channel)
        aggregates = compute_aggregates(codebook, channel)
        after = float(
            np.mean(
                sample_sq
                + aggregates.expected_sq_norm[assignments]
                - 2.0 * np.einsum("td,td->t", xs, aggregates.expected_vector[assignments])
            )
        )
        history.append(after)

        if previous is not None and (previous <= 0.0 or (previous - after) / previous < tol):
            break
        previous = after

    return TrainedQuantizer(
        codebook=codebook,
        aggregates=aggregates,
        channel=channel,
        history=tuple(history),
        iterations=iterations,
    )


def history_is_monotone(history, tol=1e-10):
    """True when the objective history never rises beyond floating slack."""
    values = np.asarray(history, dtype=np.float64)
    if values.size < 2:
        return True
    slack = tol * np.maximum(1.0, np.abs(values[:-1]))
    return bool(np.all(np.diff(values) <= slack))


def check_history(history, context=""):
    """Raise if a training history rose beyond tolerance (numerical failure)."""
    if not history_is_monotone(history):
        where = f" ({context})" if context else ""
        raise RuntimeError(f"training objective increased{where}; history: {list(history)}")


# ---------------------------------------------------------------------------
# Plain-text persistence: "dim bit_width size crossover" header, then one
# line of `dim` floats per codevector. A non-BSC channel is referenced by
# file path with an '@' prefix instead of a crossover value.
# ---------------------------------------------------------------------------


def save_quantizer(path, quantizer, channel_ref=None):
    """Persist a trained quantizer; round-trips through :func:`load_quantizer`."""
    channel = quantizer.channel
    if channel.crossover is not None:
        tag = repr(float(channel.crossover))
    elif channel_ref:
        tag = f"@{channel_ref}"
    else:
        raise ValueError("a non-BSC channel needs channel_ref for persistence")
    vectors = quantizer.codebook.vectors
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{vectors.shape[1]} {quantizer.codebook.bit_width} {vectors.shape[0]} {tag}\n")
        for row in vectors:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_quantizer(path, channel_dir="."):
    """Load a persisted quantizer; aggregates are recomputed on load.

    Training diagnostics (history, iteration count) are not persisted.
    """
    import os

    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty quantizer file")
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: malformed header {lines[0]!r}")
    dim, bit_width, size = int(head[0]), int(head[1]), int(head[2])
    if size != 1 << bit_width:
        raise ValueError(f"{path}: codebook size {size} does not match bit width {bit_width}")
    if head[3].startswith("@"):
        channel = load_channel(os.path.join(channel_dir, head[3][1:]))
        if channel.bit_width != bit_width:
            raise ValueError(f"{path}: referenced channel has mismatched bit width")
    else:
        channel = bsc_channel(bit_width, float(head[3]))
    if len(lines) != 1 + size:
        raise ValueError(f"{path}: expected {size} codevector lines, found {len(lines) - 1}")
    vectors = np.array([ln.split() for ln in lines[1:]], dtype=np.float64)
    if vectors.shape != (size, dim):
        raise ValueError(f"{path}: codevector block has shape {vectors.shape}, expected {(size, dim)}")
    codebook = Codebook(vectors=vectors, bit_width=bit_width)
    return TrainedQuantizer(
        codebook=codebook,
        aggregates=compute_aggregates(codebook, channel),
        channel=channel,
    )
