"""Bi-level DQN traffic steering: a meta-controller picks queue-occupancy
threshold goals on a coarse timescale, a controller admits each flow to LTE
or NR every decision step, and an internal critic scores goal progress.

Goal epochs are tracked per flow. A controller decision made at one decision
point is evaluated at the flow's next decision point, using the metrics
window accumulated in between; the epoch closes when the goal is achieved or
after max_epoch_steps evaluations, and the meta-controller is then credited
with the mean of the epoch's intrinsic rewards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .queues import MetricsWindow
from .radio import Rat
from .rl import DqnAgent, ReplayBuffer, Transition
from .traffic import QoSSpec, TrafficType, qos_spec

GOAL_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)
RAT_ACTIONS = (Rat.LTE, Rat.NR)

SINR_CLAMP_MIN_DB = -10.0
SINR_CLAMP_MAX_DB = 40.0

META_STATE_DIM = 7
CONTROLLER_INPUT_DIM = META_STATE_DIM + len(GOAL_THRESHOLDS)

_TRAFFIC_ORDER = (TrafficType.VOICE, TrafficType.VIDEO, TrafficType.GAMING)

DEFAULT_MAX_EPOCH_STEPS = 20
DEFAULT_GOAL_MISS_PENALTY = 0.5


@dataclass(frozen=True)
class Goal:
    """Queue-occupancy threshold the controller should keep the chosen RAT under."""

    threshold: float

    def __post_init__(self):
        if self.threshold not in GOAL_THRESHOLDS:
            raise ValueError(f"threshold must be one of {GOAL_THRESHOLDS}")

    @property
    def index(self) -> int:
        return GOAL_THRESHOLDS.index(self.threshold)

    def one_hot(self) -> np.ndarray:
        v = np.zeros(len(GOAL_THRESHOLDS))
        v[self.index] = 1.0
        return v


def goal_from_index(index: int) -> Goal:
    return Goal(GOAL_THRESHOLDS[index])


@dataclass(frozen=True)
class UeObservation:
    """Everything one steering decision sees about one flow."""

    ue_id: int
    traffic_type: TrafficType
    sinr_lte_db: float
    sinr_nr_db: float
    occ_lte: float
    occ_nr: float
    window: MetricsWindow
    tti: int

    def occupancy(self, rat: Rat) -> float:
        return self.occ_lte if rat is Rat.LTE else self.occ_nr


def normalize_sinr(sinr_db: float) -> float:
    clamped = min(SINR_CLAMP_MAX_DB, max(SINR_CLAMP_MIN_DB, sinr_db))
    return (clamped - SINR_CLAMP_MIN_DB) / (SINR_CLAMP_MAX_DB - SINR_CLAMP_MIN_DB)


@dataclass(frozen=True)
class MetaState:
    traffic_onehot: tuple[float, float, float]
    sinr_lte_norm: float
    sinr_nr_norm: float
    occ_lte: float
    occ_nr: float

    def vector(self) -> np.ndarray:
        return np.array(
            [*self.traffic_onehot, self.sinr_lte_norm, self.sinr_nr_norm, self.occ_lte, self.occ_nr]
        )


def encode_meta_state(obs: UeObservation) -> MetaState:
    """7-dim state: traffic one-hot, clamped-normalized SINRs, occupancies."""
    onehot = tuple(1.0 if t is obs.traffic_type else 0.0 for t in _TRAFFIC_ORDER)
    return MetaState(
        traffic_onehot=onehot,  # type: ignore[arg-type]
        sinr_lte_norm=normalize_sinr(obs.sinr_lte_db),
        sinr_nr_norm=normalize_sinr(obs.sinr_nr_db),
        occ_lte=min(1.0, max(0.0, obs.occ_lte)),
        occ_nr=min(1.0, max(0.0, obs.occ_nr)),
    )


def encode_controller_input(state: MetaState, goal: Goal) -> np.ndarray:
    """Meta state concatenated with the one-hot goal (12 dims)."""
    return np.concatenate([state.vector(), goal.one_hot()])


def select_goal(meta_agent: DqnAgent, state: MetaState, step: int | None) -> Goal:
    """Epsilon-greedy over goal values; the chosen goal persists for its epoch."""
    if meta_agent.n_actions != len(GOAL_THRESHOLDS):
        raise ValueError("meta agent action space must equal the goal set size")
    return goal_from_index(meta_agent.select_action(state.vector(), step))


def flow_performance_reward(window: MetricsWindow, qos: QoSSpec) -> float:
    """Throughput-vs-nominal minus delay-vs-budget, both clamped to [0, 1]."""
    thr = min(1.0, max(0.0, window.avg_throughput_bps / qos.nominal_rate_bps))
    delay = min(1.0, max(0.0, window.avg_delay_ms / qos.delay_budget_ms))
    return thr - delay


def internal_critic(
    occupancy_after: float,
    goal: Goal,
    window: MetricsWindow,
    qos: QoSSpec,
    miss_penalty: float = DEFAULT_GOAL_MISS_PENALTY,
) -> tuple[bool, float]:
    """Goal achievement (chosen queue's occupancy <= threshold, inclusive) and
    the intrinsic reward in [-(1 + miss_penalty), 1]."""
    achieved = occupancy_after <= goal.threshold
    reward = flow_performance_reward(window, qos)
    if not achieved:
        reward -= miss_penalty
    return achieved, reward


def extrinsic_reward(history: list[float]) -> float:
    """Mean of an epoch's intrinsic rewards."""
    if not history:
        raise ValueError("goal epoch must contain at least one controller step")
    return float(np.mean(history))


@dataclass(frozen=True)
class RewardBreakdown:
    intrinsic: float
    intrinsic_history: tuple[float, ...]
    extrinsic: float


@dataclass(frozen=True)
class DecisionInfo:
    """What a steering policy decided for one flow at one decision point."""

    rat: Rat
    goal_threshold: float | None = None


@dataclass(frozen=True)
class StepEvaluation:
    """Intrinsic credit assigned to the decision taken at decision_tti."""

    ue_id: int
    decision_tti: int
    intrinsic: float


@dataclass(frozen=True)
class EpochRecord:
    """One closed goal epoch (for epoch-accounting checks and reward traces)."""

    ue_id: int
    goal_threshold: float
    close_tti: int
    intrinsics: tuple[float, ...]
    extrinsic: float
    achieved: bool
    timed_out: bool


@dataclass
class _PendingStep:
    ctrl_input: np.ndarray
    action: int
    tti: int


@dataclass
class _FlowState:
    goal: Goal | None = None
    epoch_state: np.ndarray | None = None
    intrinsics: list[float] = field(default_factory=list)
    pending: _PendingStep | None = None


class HdqnSteering:
    """Shared meta/controller agents steering every flow; per-flow goal epochs."""

    def __init__(
        self,
        meta: DqnAgent,
        controller: DqnAgent,
        max_epoch_steps: int = DEFAULT_MAX_EPOCH_STEPS,
        miss_penalty: float = DEFAULT_GOAL_MISS_PENALTY,
        training: bool = True,
    ):
        if meta.input_dim != META_STATE_DIM or meta.n_actions != len(GOAL_THRESHOLDS):
            raise ValueError("meta agent dims must be 7 -> |goal set|")
        if controller.input_dim != CONTROLLER_INPUT_DIM or controller.n_actions != len(RAT_ACTIONS):
            raise ValueError("controller agent dims must be 12 -> 2")
        self.meta = meta
        self.controller = controller
        self.max_epoch_steps = max_epoch_steps
        self.miss_penalty = miss_penalty
        self.training = training
        self.meta_buffer = ReplayBuffer(meta.config.replay_capacity)
        self.ctrl_buffer = ReplayBuffer(controller.config.replay_capacity)
        self.meta_step = 0
        self.ctrl_step = 0
        self.controller_steps_evaluated = 0
        self.meta_transitions_stored = 0
        self._flows: dict[int, _FlowState] = {}
        self._evaluations: list[StepEvaluation] = []
        self._epochs: list[EpochRecord] = []

    def reset_episode(self) -> None:
        """Drop per-flow epoch state between episodes; learned weights persist."""
        self._flows.clear()
        self._evaluations.clear()
        self._epochs.clear()
        self.controller_steps_evaluated = 0
        self.meta_transitions_stored = 0

    def drain_evaluations(self) -> list[StepEvaluation]:
        out = self._evaluations
        self._evaluations = []
        return out

    def drain_epochs(self) -> list[EpochRecord]:
        out = self._epochs
        self._epochs = []
        return out

    def _evaluate_pending(self, fl: _FlowState, obs: UeObservation, next_vec: np.ndarray, terminal: bool) -> None:
        assert fl.pending is not None and fl.goal is not None and fl.epoch_state is not None
        chosen_rat = RAT_ACTIONS[fl.pending.action]
        achieved, intrinsic = internal_critic(
            obs.occupancy(chosen_rat), fl.goal, obs.window, qos_spec(obs.traffic_type), self.miss_penalty
        )
        fl.intrinsics.append(intrinsic)
        self.controller_steps_evaluated += 1
        timed_out = len(fl.intrinsics) >= self.max_epoch_steps
        epoch_done = achieved or timed_out or terminal
        ctrl_next = np.concatenate([next_vec, fl.goal.one_hot()])
        if self.training:
            self.ctrl_buffer.push(
                Transition(fl.pending.ctrl_input, fl.pending.action, intrinsic, ctrl_next, epoch_done)
            )
            self.controller.learn_batch(self.ctrl_buffer)
        self._evaluations.append(StepEvaluation(obs.ue_id, fl.pending.tti, intrinsic))
        fl.pending = None
        if epoch_done:
            extrinsic = extrinsic_reward(fl.intrinsics)
            if self.training:
                self.meta_buffer.push(
                    Transition(fl.epoch_state, fl.goal.index, extrinsic, next_vec, terminal)
                )
                self.meta.learn_batch(self.meta_buffer)
            self.meta_transitions_stored += 1
            self._epochs.append(
                EpochRecord(
                    ue_id=obs.ue_id,
                    goal_threshold=fl.goal.threshold,
                    close_tti=obs.tti,
                    intrinsics=tuple(fl.intrinsics),
                    extrinsic=extrinsic,
                    achieved=achieved,
                    timed_out=timed_out and not achieved,
                )
            )
            fl.goal = None
            fl.epoch_state = None
            fl.intrinsics = []

    def decide(self, obs: UeObservation) -> DecisionInfo:
        """One controller decision step for one flow: credit the previous
        action, open a goal epoch if none is active, pick a RAT."""
        state = encode_meta_state(obs)
        vec = state.vector()
        fl = self._flows.setdefault(obs.ue_id, _FlowState())
        if fl.pending is not None:
            self._evaluate_pending(fl, obs, vec, terminal=False)
        if fl.goal is None:
            step = self.meta_step if self.training else None
            fl.goal = select_goal(self.meta, state, step)
            fl.epoch_state = vec
            fl.intrinsics = []
            if self.training:
                self.meta_step += 1
        ctrl_input = encode_controller_input(state, fl.goal)
        step = self.ctrl_step if self.training else None
        action = self.controller.select_action(ctrl_input, step)
        if self.training:
            self.ctrl_step += 1
        fl.pending = _PendingStep(ctrl_input, action, obs.tti)
        return DecisionInfo(RAT_ACTIONS[action], fl.goal.threshold)

    def finish_flow(self, obs: UeObservation) -> None:
        """Episode-end flush: evaluate the outstanding step and close the epoch
        as terminal so epoch accounting stays exact."""
        fl = self._flows.get(obs.ue_id)
        if fl is None or fl.pending is None:
            return
        self._evaluate_pending(fl, obs, encode_meta_state(obs).vector(), terminal=True)
