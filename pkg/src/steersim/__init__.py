"""Deterministic multi-RAT (LTE + 5G NR) simulator with hierarchical DQN
traffic steering, flat-DQN and threshold-heuristic baselines, and a
reproducible experiment harness."""

from .baselines import (
    FlatDqnSteering,
    HeuristicSteering,
    HeuristicWeights,
    RatScore,
    build_flat_dqn,
    heuristic_decide,
    rat_metrics,
)
from .config import ExperimentConfig, load_config
from .errors import ConfigError, SimulationError
from .harness import (
    EpisodeLog,
    ExperimentResult,
    ScenarioEvent,
    derive_stream_seed,
    parse_scenario,
    run_episode,
    run_experiment,
    threshold_response_lag,
)
from .hdqn import (
    GOAL_THRESHOLDS,
    Goal,
    HdqnSteering,
    MetaState,
    UeObservation,
    encode_controller_input,
    encode_meta_state,
    extrinsic_reward,
    internal_critic,
    select_goal,
)
from .queues import MetricsWindow, RatQueue, TtiReport, window_metrics
from .radio import (
    BaseStation,
    LinkQuality,
    Rat,
    Topology,
    UserEquipment,
    build_topology,
    link_rate_bps,
    pathloss_db,
    sinr_db,
)
from .rl import DqnAgent, DqnConfig, Mlp, ReplayBuffer, Transition, load_checkpoint, save_checkpoint
from .traffic import (
    FlowGenerator,
    Packet,
    QoSSpec,
    TrafficType,
    expected_rate_bps,
    make_generator,
    qos_spec,
)

__version__ = "0.1.0"
