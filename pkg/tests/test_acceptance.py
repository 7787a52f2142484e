"""Acceptance suite: one test per exit criterion, printed as PASS/FAIL lines.

Run with `pytest tests/test_acceptance.py -v -s`. The grid evaluations run at
desk scale (10^4 trials; training sets of 10^5 for the crossover grid and
5x10^4 for the trend grids) and take a few minutes in total.
"""

import itertools
import json
from contextlib import contextmanager

import numpy as np
import pytest

import cscovq
from cscovq.channel import bsc_channel, transmit_indices
from cscovq.covq import Codebook, TrainedQuantizer, compute_aggregates, encode, history_is_monotone, train, update_codebook
from cscovq.evaluation import (
    SCHEME_COVQ_E2E,
    SCHEME_COVQ_Q,
    SCHEME_CUVQ_E2E,
    ExperimentConfig,
    _ExperimentData,
    evaluate_nmse,
    run_alpha_sweep,
    run_epsilon_sweep,
    run_rate_sweep,
    sensing_matrix_for,
)
from cscovq.reconstruction import omp_reconstruct
from cscovq.sparse_source import generate_sensing_matrix

SEED = 0

# Reference NMSE cells (dB) for the M=20, K=2, B=8, alpha=0.5 operating
# point, indexed by crossover probability.
EPSILONS = (0.0, 0.001, 0.005, 0.01, 0.05, 0.1)
REFERENCE = {
    SCHEME_COVQ_E2E: (-5.9371, -5.7616, -5.3308, -4.8947, -3.0293, -1.8257),
    SCHEME_COVQ_Q: (-1.8357, -1.8262, -1.6737, -1.5370, -0.8508, -0.4511),
    SCHEME_CUVQ_E2E: (-5.9371, -4.7308, -2.7242, -0.4334, 4.7124, 6.7608),
}


@contextmanager
def criterion(label):
    try:
        yield
    except BaseException:
        print(f"FAIL  {label}", flush=True)
        raise
    print(f"PASS  {label}", flush=True)


class Clauses:
    """Collects sub-clause outcomes so one criterion reports all of them."""

    def __init__(self):
        self.failures = []

    def check(self, ok, message):
        print(f"   {'ok  ' if ok else 'FAIL'} {message}", flush=True)
        if not ok:
            self.failures.append(message)

    def finish(self):
        assert not self.failures, "failed clauses:\n" + "\n".join(self.failures)


@pytest.fixture(scope="module")
def table1_rows():
    config = ExperimentConfig(trials=10_000, training_size=100_000, epsilons=EPSILONS, seed=SEED)
    print("\n[acceptance] crossover grid (18 cells, ~2 min)...", flush=True)
    return {(r.scheme, r.epsilon): r.nmse_db for r in run_epsilon_sweep(config)}


@pytest.fixture(scope="module")
def alpha_rows():
    config = ExperimentConfig(
        trials=10_000, training_size=50_000, epsilons=(0.01,),
        schemes=(SCHEME_COVQ_E2E, SCHEME_COVQ_Q), seed=SEED,
    )
    print("\n[acceptance] measurement-rate grid (~2 min)...", flush=True)
    return run_alpha_sweep(config)


@pytest.fixture(scope="module")
def rate_rows():
    config = ExperimentConfig(
        trials=10_000, training_size=50_000, epsilons=(0.005,), rates=(4, 6, 8, 10),
        schemes=(SCHEME_COVQ_E2E, SCHEME_CUVQ_E2E), seed=SEED,
    )
    print("\n[acceptance] quantization-rate grid (~1 min)...", flush=True)
    return run_rate_sweep(config)


def test_criterion_1_crossover_grid(table1_rows):
    """18-cell crossover grid matches the reference table within tolerance."""
    with criterion("criterion 1: crossover grid vs reference cells"):
        clauses = Clauses()
        for scheme in (SCHEME_COVQ_E2E, SCHEME_COVQ_Q):
            for eps, want in zip(EPSILONS, REFERENCE[scheme]):
                if eps > 0.01:
                    continue
                got = table1_rows[(scheme, eps)]
                clauses.check(
                    abs(got - want) <= 1.0,
                    f"{scheme} at eps={eps:g}: {got:.4f} dB within +-1.0 of {want:.4f}",
                )
        covq_at_001 = table1_rows[(SCHEME_COVQ_E2E, 0.01)]
        for eps in (0.01, 0.05, 0.1):
            got = table1_rows[(SCHEME_CUVQ_E2E, eps)]
            clauses.check(
                got >= covq_at_001 + 4.0,
                f"CUVQ-E2E at eps={eps:g}: {got:.4f} dB at least 4 dB above COVQ-E2E at 0.01 ({covq_at_001:.4f})",
            )
        for eps in (0.05, 0.1):
            got = table1_rows[(SCHEME_CUVQ_E2E, eps)]
            clauses.check(got > 0.0, f"CUVQ-E2E at eps={eps:g}: {got:.4f} dB positive")
        clauses.finish()


def test_criterion_2_error_free_coincidence(table1_rows):
    """Channel-aware and channel-unaware designs coincide at zero crossover."""
    with criterion("criterion 2: error-free designs coincide"):
        config = ExperimentConfig(trials=10_000, training_size=30_000, seed=SEED)
        data = _ExperimentData.build(config)
        aware = data.system(SCHEME_COVQ_E2E, 0.0, config)
        data.cache.clear()  # force a fresh, independent training run
        unaware = data.system(SCHEME_CUVQ_E2E, 0.0, config)
        assert aware is not unaware
        np.testing.assert_array_equal(aware.codebook.vectors, unaware.codebook.vectors)

        diff = abs(table1_rows[(SCHEME_COVQ_E2E, 0.0)] - table1_rows[(SCHEME_CUVQ_E2E, 0.0)])
        assert diff < 1e-9, f"NMSE difference {diff} dB"


def test_criterion_3_measurement_rate_trend(alpha_rows):
    """More measurements can only help, and the end-to-end design leads."""
    with criterion("criterion 3: measurement-rate trend and lead at alpha=0.5"):
        clauses = Clauses()
        e2e = [r for r in alpha_rows if r.scheme == SCHEME_COVQ_E2E]
        for prev, cur in zip(e2e, e2e[1:]):
            clauses.check(
                cur.nmse_db <= prev.nmse_db + 0.3,
                f"COVQ-E2E alpha {prev.alpha:g}->{cur.alpha:g}: {prev.nmse_db:.3f} -> {cur.nmse_db:.3f} (0.3 dB slack)",
            )
        at_half = {r.scheme: r.nmse_db for r in alpha_rows if r.alpha == 0.5}
        gap = at_half[SCHEME_COVQ_Q] - at_half[SCHEME_COVQ_E2E]
        clauses.check(gap >= 2.5, f"lead over COVQ-Q at alpha=0.5: {gap:.3f} dB >= 2.5 dB")
        clauses.finish()


def test_criterion_4_quantization_rate_trend(rate_rows):
    """At fixed noise, the channel-unaware design degrades with rate."""
    with criterion("criterion 4: quantization-rate trend at eps=0.005"):
        clauses = Clauses()
        by_scheme = {
            scheme: {r.B: r.nmse_db for r in rate_rows if r.scheme == scheme}
            for scheme in (SCHEME_COVQ_E2E, SCHEME_CUVQ_E2E)
        }
        top = max(by_scheme[SCHEME_CUVQ_E2E])
        worsened = by_scheme[SCHEME_CUVQ_E2E][top] - by_scheme[SCHEME_CUVQ_E2E][6]
        clauses.check(
            worsened >= 2.0,
            f"CUVQ-E2E from B=6 to B={top}: {by_scheme[SCHEME_CUVQ_E2E][6]:.3f} -> "
            f"{by_scheme[SCHEME_CUVQ_E2E][top]:.3f} dB (worsens {worsened:+.3f}, need >= +2)",
        )
        drift = by_scheme[SCHEME_COVQ_E2E][top] - by_scheme[SCHEME_COVQ_E2E][6]
        clauses.check(
            drift <= 0.2,
            f"COVQ-E2E from B=6 to B={top}: changes {drift:+.3f} dB (improves or stays flat)",
        )
        clauses.finish()


def test_criterion_5_training_monotonicity():
    """The training objective never rises, at any grid point."""
    with criterion("criterion 5: objective history non-increasing per half-step"):
        rng = np.random.default_rng(SEED)
        config = ExperimentConfig(trials=1000, training_size=20_000, seed=SEED)
        phi = sensing_matrix_for(config)
        from cscovq.evaluation import make_training_data

        train_e2e, train_y = make_training_data(phi, config)
        for bits, eps, training in itertools.product(
            (4, 8), (0.0, 0.01, 0.1, 0.5), (train_e2e, train_y)
        ):
            q = train(training, bsc_channel(bits, eps), init=rng, tol=1e-6, max_iter=100)
            assert history_is_monotone(q.history, tol=1e-10), f"B={bits} eps={eps}"
        toy = train(np.array([[0.0], [1.0], [4.0], [5.0]]), bsc_channel(1, 0.0), init=0)
        assert history_is_monotone(toy.history, tol=1e-10)


def test_criterion_6_training_oracles():
    """Encoder and codebook rules agree with brute-force evaluations."""
    with criterion("criterion 6: encoder/update/toy oracles"):
        rng = np.random.default_rng(SEED)
        # (a) encoder rule vs exhaustive expected-distortion argmin
        for _ in range(1000):
            bits = int(rng.integers(1, 5))
            size = 1 << bits
            dim = int(rng.integers(1, 5))
            vectors = rng.standard_normal((size, dim))
            p = rng.random((size, size)) + 1e-3
            channel = cscovq.ChannelModel(bit_width=bits, transition=p / p.sum(axis=1, keepdims=True))
            agg = compute_aggregates(Codebook(vectors=vectors, bit_width=bits), channel)
            x = rng.standard_normal(dim)
            costs = [
                sum(channel.transition[i, j] * np.sum((x - vectors[j]) ** 2) for j in range(size))
                for i in range(size)
            ]
            assert encode(agg, x) == int(np.argmin(costs))

        # (b) codebook update vs direct ratio on small instances
        for _ in range(300):
            bits = int(rng.integers(1, 3))
            size = 1 << bits
            count = int(rng.integers(size, 9))
            dim = int(rng.integers(1, 4))
            samples = rng.standard_normal((count, dim))
            assignments = rng.integers(0, size, count)
            p = rng.random((size, size)) + 1e-2
            channel = cscovq.ChannelModel(bit_width=bits, transition=p / p.sum(axis=1, keepdims=True))
            got = update_codebook(assignments, samples, channel).vectors
            for j in range(size):
                numer = np.zeros(dim)
                denom = 0.0
                for i in range(size):
                    members = samples[assignments == i]
                    numer += channel.transition[i, j] * members.sum(axis=0)
                    denom += channel.transition[i, j] * len(members)
                np.testing.assert_allclose(got[j], numer / denom, atol=1e-12)

        # (c) 1-d generalized Lloyd toy
        for seed in range(4):
            q = train(np.array([[0.0], [1.0], [4.0], [5.0]]), bsc_channel(1, 0.0), init=seed, tol=1e-10)
            np.testing.assert_allclose(np.sort(q.codebook.vectors[:, 0]), [0.5, 4.5])


def test_criterion_7_channel_suite():
    """Channel construction, sampling, and the zero-decoder calibration."""
    with criterion("criterion 7: channel suite and zero-decoder level"):
        for bits, eps in itertools.product((1, 2, 4, 8), (0.0, 0.01, 0.1, 0.5)):
            ch = bsc_channel(bits, eps)
            np.testing.assert_allclose(ch.transition.sum(axis=1), 1.0, atol=1e-12)
            np.testing.assert_array_equal(ch.transition, ch.transition.T)

        rng = np.random.default_rng(SEED)
        draws = 100_000
        for bits, eps in ((2, 0.2), (3, 0.1), (4, 0.15)):
            ch = bsc_channel(bits, eps)
            for i in (0, (1 << bits) - 1):
                out = transmit_indices(ch, np.full(draws, i), rng)
                freq = np.bincount(out, minlength=1 << bits) / draws
                assert np.max(np.abs(freq - ch.transition[i])) < 0.01

        config = ExperimentConfig(trials=100_000, training_size=2000, seed=SEED)
        cb = Codebook(vectors=np.zeros((256, 20)), bit_width=8)
        ch = bsc_channel(8, 0.0)
        silent = TrainedQuantizer(codebook=cb, aggregates=compute_aggregates(cb, ch), channel=ch)
        row = evaluate_nmse(silent, sensing_matrix_for(config), config, channel=ch, scheme=SCHEME_CUVQ_E2E)
        assert abs(row.nmse_db) < 0.1, f"zero-decoder level {row.nmse_db:.4f} dB"


def test_criterion_8_pursuit_suite():
    """Exact recovery on orthonormal sub-dictionaries; residuals shrink."""
    with criterion("criterion 8: pursuit recovery and residual monotonicity"):
        rng = np.random.default_rng(SEED)
        for _ in range(100):
            q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
            support = rng.choice(8, size=3, replace=False)
            x = np.zeros(8)
            x[support] = rng.standard_normal(3)
            est = omp_reconstruct(q, q @ x, 3)
            np.testing.assert_allclose(est.estimate, x, atol=1e-12)

        phi = generate_sensing_matrix(rng, 10, 25)
        for _ in range(1000):
            y = rng.standard_normal(10)
            est = omp_reconstruct(phi, y, 4)
            norms = (float(np.linalg.norm(y)),) + est.residual_history
            assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_criterion_9_cli_determinism(tmp_path):
    """A rerun from the same manifest emits byte-identical results."""
    with criterion("criterion 9: byte-identical reruns from one manifest"):
        from cscovq.cli import main

        config = {
            "B": 5, "trials": 500, "training_size": 2000,
            "epsilons": [0.0, 0.01], "seed": 13,
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config))
        outs = [tmp_path / name for name in ("a", "b", "c")]
        assert main(["sweep-epsilon", "--config", str(cfg_path), "--out", str(outs[0])]) == 0
        assert main(["sweep-epsilon", "--config", str(cfg_path), "--out", str(outs[1])]) == 0
        assert main(["sweep-epsilon", "--config", str(outs[0] / "manifest.json"), "--out", str(outs[2])]) == 0
        first = (outs[0] / "results.csv").read_bytes()
        assert first == (outs[1] / "results.csv").read_bytes()
        assert first == (outs[2] / "results.csv").read_bytes()
