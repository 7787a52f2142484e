import numpy as np
import pytest

from cscovq.baselines import covq_q_finalize, covq_q_train, cuvq_train
from cscovq.channel import bsc_channel
from cscovq.covq import encode, train
from cscovq.sparse_source import generate_sensing_matrix, sparse_batch


class TestCovqQ:
    def test_error_free_toy(self):
        samples = np.array([[0.0], [1.0], [4.0], [5.0]])
        q = covq_q_train(samples, bsc_channel(1, 0.0), init=0, tol=1e-9)
        np.testing.assert_allclose(np.sort(q.codebook.vectors[:, 0]), [0.5, 4.5])

    def test_history_monotone(self):
        rng = np.random.default_rng(0)
        samples = rng.standard_normal((300, 5))
        q = covq_q_train(samples, bsc_channel(3, 0.05), init=1)
        diffs = np.diff(np.asarray(q.history))
        assert np.all(diffs <= 1e-10)

    def test_encode_brute_force(self):
        rng = np.random.default_rng(1)
        ch = bsc_channel(2, 0.15)
        samples = rng.standard_normal((60, 3))
        q = covq_q_train(samples, ch, init=2)
        for _ in range(100):
            y = rng.standard_normal(3)
            costs = [
                sum(ch.transition[i, j] * np.sum((y - q.codebook.vectors[j]) ** 2) for j in range(4))
                for i in range(4)
            ]
            assert encode(q.aggregates, y) == int(np.argmin(costs))


class TestFinalize:
    @pytest.fixture()
    def setup(self):
        rng = np.random.default_rng(2)
        phi = generate_sensing_matrix(rng, 10, 20)
        xs = sparse_batch(rng, 20, 2, 400)
        ys = xs @ phi.matrix.T
        q = covq_q_train(ys, bsc_channel(3, 0.02), init=3)
        return phi, q

    def test_decoded_shape(self, setup):
        phi, q = setup
        mq = covq_q_finalize(q, phi, 2)
        assert mq.decoded.shape == (8, 20)

    def test_zero_codevector_decodes_to_zero(self, setup):
        phi, q = setup
        vectors = q.codebook.vectors.copy()
        vectors[0] = 0.0
        from cscovq.covq import Codebook, TrainedQuantizer, compute_aggregates

        cb = Codebook(vectors=vectors, bit_width=3)
        patched = TrainedQuantizer(
            codebook=cb, aggregates=compute_aggregates(cb, q.channel), channel=q.channel
        )
        mq = covq_q_finalize(patched, phi, 2)
        np.testing.assert_array_equal(mq.decoded[0], np.zeros(20))

    def test_column_codevector_decodes_to_basis(self, setup):
        phi, q = setup
        vectors = q.codebook.vectors.copy()
        vectors[1] = phi.matrix[:, 7]
        from cscovq.covq import Codebook, TrainedQuantizer, compute_aggregates

        cb = Codebook(vectors=vectors, bit_width=3)
        patched = TrainedQuantizer(
            codebook=cb, aggregates=compute_aggregates(cb, q.channel), channel=q.channel
        )
        mq = covq_q_finalize(patched, phi, 2)
        expected = np.zeros(20)
        expected[7] = 1.0
        np.testing.assert_allclose(mq.decoded[1], expected, atol=1e-10)

    def test_idempotent(self, setup):
        phi, q = setup
        a = covq_q_finalize(q, phi, 2)
        b = covq_q_finalize(a.quantizer, phi, 2)
        np.testing.assert_array_equal(a.decoded, b.decoded)


class TestCuvq:
    def test_equals_error_free_train(self):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal((200, 4))
        a = cuvq_train(samples, bit_width=3, init=9)
        b = train(samples, bsc_channel(3, 0.0), init=9)
        np.testing.assert_array_equal(a.codebook.vectors, b.codebook.vectors)

    def test_coincides_with_channel_optimized_at_zero_crossover(self):
        rng = np.random.default_rng(4)
        samples = rng.standard_normal((300, 4))
        channel_aware = train(samples, bsc_channel(3, 0.0), init=11)
        unaware = cuvq_train(samples, bit_width=3, init=11)
        np.testing.assert_array_equal(channel_aware.codebook.vectors, unaware.codebook.vectors)
        assert channel_aware.history == unaware.history
