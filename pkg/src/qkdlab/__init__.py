"""qkdlab: a deterministic BB84 toolkit.

entangled-pair channel model with misalignment and depolarizing noise,
eigendecomposition-based key-rate objectives, a seeded sifting protocol,
interactive parity reconciliation, universal-hash verification with
Toeplitz privacy amplification, and a small from-scratch neural predictor
for session outcomes.
"""

from .amplify import (
    AmplificationPlan,
    polynomial_hash,
    privacy_amplify,
    toeplitz_matrix,
    toeplitz_seed_bits,
    verify_keys,
    write_final_key,
)
from .autoencoder import (
    AutoencoderModel,
    TrainConfig,
    evaluate,
    gradient_check,
    init_model,
    key_length_surrogate,
    load_model,
    predict,
    predict_session,
    save_model,
    train,
    tune_parameters,
)
from .benchmarks import bench, calibrate_cost_model, fit_loglog_slope
from .cascade import (
    CascadeConfig,
    CascadeTranscript,
    ReconciliationResult,
    binary_locate,
    default_k1,
    measured_efficiency,
    run_cascade,
    transcript_from_ndjson,
    transcript_to_ndjson,
)
from .channel import (
    BASES,
    ChannelParams,
    JointOutcomeDistribution,
    PovmSet,
    analytic_qber,
    bell_state,
    channel_state,
    default_povm,
    depolarize,
    misalign,
    outcome_distribution,
)
from .dataset import (
    DatasetRecord,
    generate,
    load_csv,
    save_csv,
    split,
    to_features,
)
from .keyrate import (
    KeyRateReport,
    KrausSet,
    binary_entropy,
    build_kraus,
    delta_leak,
    g_map,
    key_rate,
    objective,
    relative_entropy,
    z_map,
)
from .protocol import (
    ProtocolAbort,
    SiftedSession,
    run_session,
    session_from_json,
    session_to_json,
)

__version__ = "0.1.0"
