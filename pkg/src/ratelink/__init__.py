"""Rateless coding with limited feedback over individual state sequences.

A numpy library plus a small CLI for simulating a chunked, pilot-assisted
rateless coding strategy: the receiver estimates the channel from random
pilot positions, feeds back 2 bits per chunk, and decodes each k-bit
payload with a maximum mutual information decoder as soon as the
estimated mutual information clears the empirical rate.
"""

from .info import (
    Channel,
    ConvergenceError,
    Distribution,
    binary_entropy,
    channel_capacity,
    entropy,
    entropy_continuity_bound,
    mi_continuity_bound,
    mutual_information,
)
from .composition import (
    CompositionSpec,
    composition_count,
    concatenated_set_log_ratio,
    enumerate_compositions,
    log_composition_set_size,
    sample_fixed_composition,
    sample_piecewise_composition,
    type_of,
)
from .channels import (
    ChannelFamily,
    ChannelSession,
    channel_from_state_type,
    family_mod_additive,
    family_z_or,
    generate_state_sequence,
    state_averaged_channel,
    z_channel,
    z_channel_mi,
)
from .training import (
    ChannelEstimate,
    TrainingPlan,
    deinterleave_chunk,
    estimate_chunk_channel,
    estimate_round_channel,
    interleave_chunk,
    select_training_plan,
)
from .rateless import (
    RatelessCodebook,
    VirtualRatelessCode,
    build_codebook,
    empirical_mutual_information,
    mmi_decode,
)
from .protocol import (
    ErrorStats,
    FeedbackMessage,
    ProtocolParams,
    RoundRecord,
    Transcript,
    decoder_decision,
    estimate_error_probs,
    max_round_chunks,
    min_decode_chunks,
    run_round,
    run_session,
)
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    derive_params,
    load_config,
    parse_config,
    preset_configs,
    run_experiment,
    run_sweep,
)

__version__ = "0.1.0"
