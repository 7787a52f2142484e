"""Channel-optimized vector quantization of compressed-sensing measurements.

A numpy library plus CLI harness that trains vector quantizers for noisy
index transmission of compressed-sensing measurements and evaluates their
end-to-end normalized MSE by Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .baselines import MeasurementQuantizer, covq_q_finalize, covq_q_train, cuvq_train
from .channel import (
    ChannelModel,
    bsc_channel,
    hamming_distance,
    identity_channel,
    load_channel,
    save_channel,
    transmit,
    transmit_indices,
)
from .covq import (
    Codebook,
    EncoderAggregates,
    TrainedQuantizer,
    TrainingSet,
    compute_aggregates,
    encode,
    encode_batch,
    history_is_monotone,
    load_quantizer,
    save_quantizer,
    train,
    update_codebook,
)
from .evaluation import (
    ALL_SCHEMES,
    SCHEME_COVQ_E2E,
    SCHEME_COVQ_Q,
    SCHEME_CUVQ_E2E,
    EvalData,
    ExperimentConfig,
    ResultRow,
    evaluate_nmse,
    make_eval_data,
    make_training_data,
    read_results_csv,
    run_alpha_sweep,
    run_epsilon_sweep,
    run_rate_sweep,
    sensing_matrix_for,
    substream,
    write_results_csv,
)
from .numerics import SingularMatrixError, least_squares, mat_vec
from .plotting import chart_rows, write_chart
from .reconstruction import SparseEstimate, omp_reconstruct, omp_reconstruct_batch
from .sparse_source import (
    Measurement,
    SensingMatrix,
    SparseVector,
    generate_sensing_matrix,
    generate_sparse_vector,
    measure,
    sparse_batch,
)
