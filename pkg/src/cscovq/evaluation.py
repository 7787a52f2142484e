"""Monte Carlo end-to-end evaluation and the three experiment sweeps.

A run is fully determined by an :class:`ExperimentConfig`. All randomness is
derived from the master seed through named substreams (sensing matrix,
training draws, evaluation draws, channel noise, codebook init), so any
single source of randomness can be varied while the others stay fixed, and
repeated runs are bit-reproducible. The sensing matrix is generated once per
experiment and shared by every trial unless `redraw_phi` asks for a fresh
matrix per trial.

Per sweep point the pipeline is: draw a sparse source, measure it, recover a
sparse estimate, encode to an index, push the index through the channel, and
look up the decoder output; the figure of merit is the mean squared source
error normalized by the sparsity level, in dB.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import MeasurementQuantizer, covq_q_finalize
from .channel import bsc_channel, transmit, transmit_indices
from .covq import TrainingSet, check_history, encode, encode_batch, train
from .reconstruction import omp_reconstruct, omp_reconstruct_batch
from .sparse_source import generate_sensing_matrix, sparse_batch

SCHEME_COVQ_E2E = "COVQ-E2E"
SCHEME_COVQ_Q = "COVQ-Q"
SCHEME_CUVQ_E2E = "CUVQ-E2E"
ALL_SCHEMES = (SCHEME_COVQ_E2E, SCHEME_COVQ_Q, SCHEME_CUVQ_E2E)

_SCHEME_IDS = {SCHEME_COVQ_E2E: 1, SCHEME_COVQ_Q: 2, SCHEME_CUVQ_E2E: 3}

# Substream tags.
_PHI, _TRAIN, _EVAL, _CHANNEL, _INIT = 1, 2, 3, 4, 5
_REDRAW_TRAIN, _REDRAW_EVAL = 1, 2

_CHUNK = 4096

CSV_COLUMNS = ("scheme", "M", "N", "K", "B", "epsilon", "alpha", "trials", "nmse_db", "seed", "wall_s")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved parameters of one experiment family."""

    M: int = 20
    K: int = 2
    B: int = 8
    alpha: float = 0.5
    epsilons: tuple = (0.0, 0.001, 0.005, 0.01, 0.05, 0.1)
    schemes: tuple = ALL_SCHEMES
    trials: int = 100_000
    training_size: int = 100_000
    seed: int = 0
    noise_std: float = 0.0
    tol: float = 1e-6
    max_iter: int = 200
    redraw_phi: bool = False
    alphas: tuple = (0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7)
    rates: tuple = (4, 6, 8, 10)
    workers: int | None = None

    @property
    def N(self):
        return int(round(self.alpha * self.M))

    def validate(self):
        if not 1 <= self.K < self.N < self.M:
            raise ValueError(f"need 1 <= K < N < M, got K={self.K}, N={self.N}, M={self.M}")
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.training_size < (1 << self.B):
            raise ValueError(f"training_size must be >= 2^B = {1 << self.B}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        for eps in self.epsilons:
            if not 0.0 <= eps <= 0.5:
                raise ValueError(f"crossover probability {eps} outside [0, 0.5]")
        unknown = [s for s in self.schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}; valid: {ALL_SCHEMES}")
        if not self.schemes:
            raise ValueError("at least one scheme required")
        return self


@dataclass(frozen=True)
class ResultRow:
    """One evaluated (scheme, operating point) cell."""

    scheme: str
    M: int
    N: int
    K: int
    B: int
    epsilon: float
    alpha: float
    trials: int
    nmse_db: float
    seed: int
    wall_s: float


def substream(seed, *key):
    """Deterministic named RNG stream derived from the master seed."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in key]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _eps_key(eps):
    # Stable integer tag for a float crossover probability.
    return int(np.float64(eps).view(np.uint64))


def sensing_matrix_for(config, num_measurements=None):
    """The experiment's sensing matrix (a pure function of seed, N, M)."""
    n = config.N if num_measurements is None else num_measurements
    return generate_sensing_matrix(substream(config.seed, _PHI, n), n, config.M)


def _resolve_workers(config):
    if config.workers is not None:
        return max(1, config.workers)
    import os

    return max(1, os.cpu_count() or 1)


def _run_chunks(work, total, workers, chunk=_CHUNK):
    # `work(start, stop)` writes into disjoint output slices, so results are
    # identical for any worker count or schedule.
    spans = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if workers <= 1 or len(spans) <= 1:
        for s, e in spans:
            work(s, e)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda se: work(*se), spans))


def _omp_all(phi, measurements, sparsity, workers):
    estimates = np.empty((measurements.shape[0], phi.dim))

    def work(start, stop):
        estimates[start:stop] = omp_reconstruct_batch(phi, measurements[start:stop], sparsity)[0]

    _run_chunks(work, measurements.shape[0], workers)
    return estimates


def _draw_sources(config, tag, count):
    rng = substream(config.seed, tag)
    xs = sparse_batch(rng, config.M, config.K, count)
    noise = None
    if config.noise_std > 0:
        noise = rng.normal(0.0, config.noise_std, size=(count, config.N))
    return xs, noise


@dataclass
class EvalData:
    """Precomputed per-trial arrays shared by every scheme at one operating point."""

    sources: np.ndarray          # (trials, M)
    measurements: np.ndarray     # (trials, N)
    reconstructions: np.ndarray  # (trials, M)


def make_training_data(phi, config):
    """Draw the training set: sparse estimates for the end-to-end designs and
    raw measurements for the measurement-space design, from paired draws."""
    workers = _resolve_workers(config)
    xs, noise = _draw_sources(config, _TRAIN, config.training_size)
    ys = xs @ phi.matrix.T
    if noise is not None:
        ys = ys + noise
    estimates = _omp_all(phi, ys, config.K, workers)
    return TrainingSet(samples=estimates, originals=xs), TrainingSet(samples=ys)


def make_eval_data(phi, config):
    """Draw the evaluation trials (a stream disjoint from training)."""
    workers = _resolve_workers(config)
    xs, noise = _draw_sources(config, _EVAL, config.trials)
    ys = xs @ phi.matrix.T
    if noise is not None:
        ys = ys + noise
    return EvalData(sources=xs, measurements=ys, reconstructions=_omp_all(phi, ys, config.K, workers))


def _redraw_sensing(config, domain, trial):
    return generate_sensing_matrix(substream(config.seed, _PHI, config.N, domain, trial), config.N, config.M)


def _redraw_training_data(config):
    # Slow path: a fresh sensing matrix per training draw.
    xs, noise = _draw_sources(config, _TRAIN, config.training_size)
    ys = np.empty((config.training_size, config.N))
    estimates = np.empty((config.training_size, config.M))
    for t in range(config.training_size):
        phi_t = _redraw_sensing(config, _REDRAW_TRAIN, t)
        y = phi_t.matrix @ xs[t]
        if noise is not None:
            y = y + noise[t]
        ys[t] = y
        estimates[t] = omp_reconstruct(phi_t, y, config.K).estimate
    return TrainingSet(samples=estimates, originals=xs), TrainingSet(samples=ys)


def _nmse_db_from_errors(sq_errors, sparsity):
    value = 10.0 * np.log10(float(np.mean(sq_errors)) / sparsity)
    if not np.isfinite(value):
        raise RuntimeError(f"non-finite NMSE ({value}); squared-error mean {np.mean(sq_errors)}")
    return value


def evaluate_nmse(system, phi, config, *, channel, scheme, rng=None, eval_data=None):
    """Monte Carlo NMSE (dB) of a trained scheme over a given channel.

    The encoder always uses the aggregates the system was trained with (a
    channel-unaware design keeps its error-free rule); `channel` only governs
    index transmission. `rng` defaults to a substream named by (scheme,
    crossover); pass one explicitly for non-BSC channels.

    Returns a :class:`ResultRow`; wall_s holds the measured evaluation time.
    """
    started = time.perf_counter()
    if rng is None:
        rng = substream(
            config.seed, _CHANNEL, _SCHEME_IDS.get(scheme, 0), _eps_key(channel.crossover or 0.0), config.B, config.N
        )
    epsilon = float(channel.crossover) if channel.crossover is not None else float("nan")

    encoder_dim = config.N if isinstance(system, MeasurementQuantizer) else config.M
    codebook = system.quantizer.codebook if isinstance(system, MeasurementQuantizer) else system.codebook
    if codebook.dim != encoder_dim:
        raise ValueError(f"system codebook dimension {codebook.dim} does not match the expected {encoder_dim}")
    if codebook.size != channel.size:
        raise ValueError(f"system codebook size {codebook.size} does not match channel size {channel.size}")

    if config.redraw_phi:
        sq_errors = _evaluate_redraw(system, config, channel, rng)
    else:
        if eval_data is None:
            eval_data = make_eval_data(phi, config)
        if eval_data.sources.shape[0] != config.trials:
            raise ValueError(f"eval data holds {eval_data.sources.shape[0]} trials, config asks for {config.trials}")
        if isinstance(system, MeasurementQuantizer):
            codes = encode_batch(system.aggregates, eval_data.measurements)
            table = system.decoded
        else:
            codes = encode_batch(system.aggregates, eval_data.reconstructions)
            table = system.codebook.vectors
        received = transmit_indices(channel, codes, rng)
        decoded = table[received]
        diff = eval_data.sources - decoded
        sq_errors = np.einsum("td,td->t", diff, diff)

    nmse_db = _nmse_db_from_errors(sq_errors, config.K)
    return ResultRow(
        scheme=scheme,
        M=config.M,
        N=config.N,
        K=config.K,
        B=config.B,
        epsilon=epsilon,
        alpha=config.alpha,
        trials=config.trials,
        nmse_db=nmse_db,
        seed=config.seed,
        wall_s=time.perf_counter() - started,
    )


def _evaluate_redraw(system, config, channel, rng):
    # Slow per-trial path for redrawn sensing matrices. The measurement-space
    # decoder cannot be a precomputed table here: the received codevector is
    # re-reconstructed against each trial's own matrix.
    xs, noise = _draw_sources(config, _EVAL, config.trials)
    sq_errors = np.empty(config.trials)
    measurement_space = isinstance(system, MeasurementQuantizer)
    for t in range(config.trials):
        phi_t = _redraw_sensing(config, _REDRAW_EVAL, t)
        y = phi_t.matrix @ xs[t]
        if noise is not None:
            y = y + noise[t]
        if measurement_space:
            code = encode(system.aggregates, y)
        else:
            code = encode(system.aggregates, omp_reconstruct(phi_t, y, config.K).estimate)
        received = transmit(channel, code, rng)
        if measurement_space:
            decoded = omp_reconstruct(phi_t, system.quantizer.codebook.vectors[received], system.sparsity).estimate
        else:
            decoded = system.codebook.vectors[received]
        diff = xs[t] - decoded
        sq_errors[t] = diff @ diff
    return sq_errors


@dataclass
class _ExperimentData:
    """Shared per-sensing-matrix state: training/eval draws and trained systems."""

    config: ExperimentConfig
    phi: object
    train_e2e: TrainingSet
    train_y: TrainingSet
    eval_data: EvalData | None
    cache: dict = field(default_factory=dict)

    @classmethod
    def build(cls, config):
        phi = sensing_matrix_for(config)
        if config.redraw_phi:
            train_e2e, train_y = _redraw_training_data(config)
            eval_data = None
        else:
            train_e2e, train_y = make_training_data(phi, config)
            eval_data = make_eval_data(phi, config)
        return cls(config=config, phi=phi, train_e2e=train_e2e, train_y=train_y, eval_data=eval_data)

    def system(self, scheme, eps, config):
        """Train (or fetch) the scheme's quantizer for crossover `eps`.

        The channel-unaware design trains once at crossover 0 and is reused at
        every evaluated crossover; with identical seeds it therefore coincides
        exactly with the channel-optimized design at crossover 0.
        """
        if scheme == SCHEME_CUVQ_E2E:
            space, train_eps = "e2e", 0.0
        elif scheme == SCHEME_COVQ_E2E:
            space, train_eps = "e2e", float(eps)
        elif scheme == SCHEME_COVQ_Q:
            space, train_eps = "meas", float(eps)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")

        key = (space, config.B, _eps_key(train_eps))
        if key not in self.cache:
            training = self.train_e2e if space == "e2e" else self.train_y
            init = substream(config.seed, _INIT, _eps_key(train_eps), config.B, training.samples.shape[1])
            quantizer = train(
                training,
                bsc_channel(config.B, train_eps),
                init=init,
                tol=config.tol,
                max_iter=config.max_iter,
            )
            check_history(quantizer.history, context=f"{scheme} B={config.B} eps={train_eps}")
            self.cache[key] = quantizer
        quantizer = self.cache[key]

        if space != "meas":
            return quantizer
        final_key = ("meas-final", config.B, _eps_key(train_eps))
        if final_key not in self.cache:
            if config.redraw_phi:
                self.cache[final_key] = MeasurementQuantizer(quantizer=quantizer, decoded=None, sparsity=config.K)
            else:
                self.cache[final_key] = covq_q_finalize(quantizer, self.phi, config.K)
        return self.cache[final_key]


def _evaluate_grid(data, config, progress):
    rows = []
    for eps in config.epsilons:
        channel = bsc_channel(config.B, eps)
        for scheme in config.schemes:
            system = data.system(scheme, eps, config)
            row = evaluate_nmse(system, data.phi, config, channel=channel, scheme=scheme, eval_data=data.eval_data)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def run_epsilon_sweep(config, progress=None):
    """Train and evaluate every scheme at each crossover probability."""
    config.validate()
    data = _ExperimentData.build(config)
    return _evaluate_grid(data, config, progress)


def run_alpha_sweep(config, progress=None):
    """Re-draw the sensing matrix and retrain at each measurement rate."""
    rows = []
    for alpha in config.alphas:
        cfg = replace(config, alpha=float(alpha)).validate()
        data = _ExperimentData.build(cfg)
        rows.extend(_evaluate_grid(data, cfg, progress))
    return rows


def run_rate_sweep(config, progress=None):
    """Retrain at each quantization rate; source draws are rate-independent
    and shared across the sweep."""
    config.validate()
    rows = []
    data = None
    for rate in config.rates:
        cfg = replace(config, B=int(rate)).validate()
        if data is None:
            data = _ExperimentData.build(cfg)
        rows.extend(_evaluate_grid(data, cfg, progress))
    return rows


# ---------------------------------------------------------------------------
# CSV emission. Numeric fields use shortest round-trip formatting so files
# are loss-free and byte-stable; the wall-time column is written as a fixed
# placeholder because emitted files must be byte-identical across reruns
# (measured times live on ResultRow and the stderr progress line).
# ---------------------------------------------------------------------------


def format_row(row):
    return ",".join(
        (
            row.scheme,
            str(row.M),
            str(row.N),
            str(row.K),
            str(row.B),
            repr(float(row.epsilon)),
            repr(float(row.alpha)),
            str(row.trials),
            repr(float(row.nmse_db)),
            str(row.seed),
            "0.000",
        )
    )


def write_results_csv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(format_row(row) + "\n")


def read_results_csv(path):
    """Parse a results file back into :class:`ResultRow` objects."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0].split(",") != list(CSV_COLUMNS):
        raise ValueError(f"{path}: missing or unexpected header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: malformed row {ln!r}")
        rows.append(
            ResultRow(
                scheme=parts[0],
                M=int(parts[1]),
                N=int(parts[2]),
                K=int(parts[3]),
                B=int(parts[4]),
                epsilon=float(parts[5]),
                alpha=float(parts[6]),
                trials=int(parts[7]),
                nmse_db=float(parts[8]),
                seed=int(parts[9]),
                wall_s=float(parts[10]),
            )
        )
    return rows
