"""Comparison quantizer designs.

Two reference schemes bracket the channel-optimized end-to-end design:

* measurement-space COVQ ("COVQ-Q"): the same alternating training loop run
  directly on measurement vectors, minimizing only the quantization
  distortion of y over the channel. Decoding applies sparse recovery to the
  received codevector, so the decoder side reduces to a lookup table
  precomputed with one pursuit per codevector.
* channel-unaware end-to-end design ("CUVQ-E2E"): the end-to-end trainer run
  as if the channel were error free. Evaluating it over a noisy channel
  (without retraining) isolates the value of channel knowledge.
"""

from dataclasses import dataclass

import numpy as np

from .channel import bsc_channel
from .covq import TrainedQuantizer, as_training_set, train
from .reconstruction import omp_reconstruct


@dataclass
class MeasurementQuantizer:
    """A quantizer trained in measurement space plus its decoded lookup table.

    `decoded.vectors-like` row j holds the sparse reconstruction of codevector
    j, so receiving index j costs a table lookup at decode time.
    """

    quantizer: TrainedQuantizer      # codebook lives in R^N
    decoded: np.ndarray              # (L, M) reconstructed source estimates
    sparsity: int

    @property
    def aggregates(self):
        return self.quantizer.aggregates

    @property
    def channel(self):
        return self.quantizer.channel


def covq_q_train(training_measurements, channel, init=0, tol=1e-6, max_iter=200):
    """Train the measurement-space channel-optimized quantizer.

    Structurally the same fixed point as the end-to-end trainer, just with
    measurement vectors in place of source estimates; the generic loop is
    reused unchanged.
    """
    return train(as_training_set(training_measurements), channel, init=init, tol=tol, max_iter=max_iter)


def covq_q_finalize(quantizer, sensing, sparsity):
    """Attach the decoded lookup table: one sparse recovery per codevector."""
    vectors = quantizer.codebook.vectors
    decoded = np.empty((vectors.shape[0], sensing.dim))
    for j in range(vectors.shape[0]):
        decoded[j] = omp_reconstruct(sensing, vectors[j], sparsity).estimate
    return MeasurementQuantizer(quantizer=quantizer, decoded=decoded, sparsity=sparsity)


def cuvq_train(training, bit_width, init=0, tol=1e-6, max_iter=200):
    """Channel-unaware end-to-end design: the trainer with an error-free channel."""
    return train(as_training_set(training), bsc_channel(bit_width, 0.0), init=init, tol=tol, max_iter=max_iter)
