"""Comparison schemes: a weighted-score threshold heuristic and a flat
single-level DQN steering agent built on the same learning core."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hdqn import (
    META_STATE_DIM,
    RAT_ACTIONS,
    DecisionInfo,
    StepEvaluation,
    UeObservation,
    encode_meta_state,
    flow_performance_reward,
    normalize_sinr,
)
from .radio import Rat
from .rl import DqnAgent, DqnConfig, ReplayBuffer, Transition
from .traffic import TrafficType, qos_spec

# Service affinity in [0, 1] per (traffic type, RAT); invented stand-in for the
# reference heuristic's service factor, configurable via HeuristicSteering.
SERVICE_AFFINITY = {
    (TrafficType.VOICE, Rat.LTE): 0.8,
    (TrafficType.VOICE, Rat.NR): 0.5,
    (TrafficType.VIDEO, Rat.LTE): 0.4,
    (TrafficType.VIDEO, Rat.NR): 0.9,
    (TrafficType.GAMING, Rat.LTE): 0.5,
    (TrafficType.GAMING, Rat.NR): 0.8,
}

DEFAULT_WEIGHTS = (1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class HeuristicWeights:
    w_load: float
    w_channel: float
    w_service: float

    def __post_init__(self):
        if min(self.w_load, self.w_channel, self.w_service) < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_load + self.w_channel + self.w_service - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class RatScore:
    rat: Rat
    load_metric: float
    channel_metric: float
    service_metric: float
    w_score: float   # weighted combination
    t_th: float      # unweighted mean of the three metrics


def rat_metrics(obs: UeObservation, rat: Rat) -> tuple[float, float, float]:
    """(load, channel, service) in [0, 1], higher is better."""
    load = 1.0 - obs.occupancy(rat)
    channel = normalize_sinr(obs.sinr_lte_db if rat is Rat.LTE else obs.sinr_nr_db)
    service = SERVICE_AFFINITY[(obs.traffic_type, rat)]
    return load, channel, service


def make_rat_score(rat: Rat, metrics: tuple[float, float, float], weights: HeuristicWeights) -> RatScore:
    load, channel, service = metrics
    w_score = weights.w_load * load + weights.w_channel * channel + weights.w_service * service
    return RatScore(rat, load, channel, service, w_score, (load + channel + service) / 3.0)


def heuristic_decide(scores_lte: RatScore, scores_nr: RatScore) -> Rat:
    """Prefer the RAT whose weighted score clears its own unweighted-mean
    threshold; fall back to the larger weighted score; exact tie goes LTE."""
    candidates = [s for s in (scores_lte, scores_nr) if s.w_score > s.t_th]
    pool = candidates if candidates else [scores_lte, scores_nr]
    best = max(pool, key=lambda s: s.w_score)
    others = [s for s in pool if s is not best]
    if others and others[0].w_score == best.w_score:
        return Rat.LTE
    return best.rat


class HeuristicSteering:
    """Stateless threshold heuristic; same decide() surface as the learners."""

    def __init__(self, weights: HeuristicWeights | None = None):
        self.weights = weights or HeuristicWeights(*DEFAULT_WEIGHTS)
        self.training = False

    def reset_episode(self) -> None:
        pass

    def decide(self, obs: UeObservation) -> DecisionInfo:
        lte = make_rat_score(Rat.LTE, rat_metrics(obs, Rat.LTE), self.weights)
        nr = make_rat_score(Rat.NR, rat_metrics(obs, Rat.NR), self.weights)
        return DecisionInfo(heuristic_decide(lte, nr))

    def finish_flow(self, obs: UeObservation) -> None:
        pass

    def drain_evaluations(self) -> list[StepEvaluation]:
        return []

    def drain_epochs(self) -> list:
        return []


def build_flat_dqn(config: DqnConfig, seed: int) -> DqnAgent:
    """Single-level agent over the 7-dim steering state, actions {LTE, NR}."""
    return DqnAgent(META_STATE_DIM, len(RAT_ACTIONS), config, seed)


@dataclass
class _FlatPending:
    state: np.ndarray
    action: int
    tti: int


class FlatDqnSteering:
    """Flat DQN baseline: same state and decision cadence as the hierarchical
    scheme but no goals, and the reward drops the goal-miss penalty."""

    def __init__(self, agent: DqnAgent, training: bool = True):
        if agent.input_dim != META_STATE_DIM or agent.n_actions != len(RAT_ACTIONS):
            raise ValueError("flat agent dims must be 7 -> 2")
        self.agent = agent
        self.training = training
        self.buffer = ReplayBuffer(agent.config.replay_capacity)
        self.step = 0
        self._pending: dict[int, _FlatPending] = {}
        self._evaluations: list[StepEvaluation] = []

    def reset_episode(self) -> None:
        self._pending.clear()
        self._evaluations.clear()

    def drain_evaluations(self) -> list[StepEvaluation]:
        out = self._evaluations
        self._evaluations = []
        return out

    def drain_epochs(self) -> list:
        return []

    def _evaluate(self, obs: UeObservation, next_vec: np.ndarray, terminal: bool) -> None:
        pending = self._pending.pop(obs.ue_id, None)
        if pending is None:
            return
        reward = flow_performance_reward(obs.window, qos_spec(obs.traffic_type))
        if self.training:
            self.buffer.push(Transition(pending.state, pending.action, reward, next_vec, terminal))
            self.agent.learn_batch(self.buffer)
        self._evaluations.append(StepEvaluation(obs.ue_id, pending.tti, reward))

    def decide(self, obs: UeObservation) -> DecisionInfo:
        vec = encode_meta_state(obs).vector()
        self._evaluate(obs, vec, terminal=False)
        action = self.agent.select_action(vec, self.step if self.training else None)
        if self.training:
            self.step += 1
        self._pending[obs.ue_id] = _FlatPending(vec, action, obs.tti)
        return DecisionInfo(RAT_ACTIONS[action])

    def finish_flow(self, obs: UeObservation) -> None:
        self._evaluate(obs, encode_meta_state(obs).vector(), terminal=True)
