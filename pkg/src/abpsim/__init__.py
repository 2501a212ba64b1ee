"""Deterministic MANET clustering simulator with adaptive Hello broadcast periods."""

from .codec import (
    NO_CLUSTER,
    DecodingError,
    EncodingError,
    HelloPacket,
    ProtocolVariant,
    Quantizer,
    decode_hello,
    encode_hello,
    packet_size_bits,
)
from .config import ConfigError, ExperimentSpec, SimConfig, load_config
from .engine import MetricsRecord, count_ch_change, run, run_batch, sweep
from .mobility import (
    BpController,
    TopologyHistory,
    adapt_bp,
    cluster_mean_mr,
    mobility_rate,
    set_distance,
)
from .protocols import (
    ClusterAssignment,
    ElectionParams,
    Role,
    abp_form_clusters,
    admission_filter,
    classify_roles,
    competence,
    hd_assign,
    lid_assign,
    vc_assign,
)
from .world import EnergyModel, NodeState, World, adjacency, drain_energy, init_world, step_motion

__version__ = "0.1.0"
