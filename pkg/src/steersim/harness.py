"""Episode and experiment orchestration: seeding, the TTI loop, steering
decision cadence, metric aggregation across seeds, and scenario support."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import FlatDqnSteering, HeuristicSteering, HeuristicWeights, build_flat_dqn
from .config import ExperimentConfig
from .errors import ConfigError, SimulationError
from .hdqn import (
    CONTROLLER_INPUT_DIM,
    GOAL_THRESHOLDS,
    META_STATE_DIM,
    RAT_ACTIONS,
    EpochRecord,
    HdqnSteering,
    UeObservation,
)
from .output import emit_csv
from .queues import MetricsWindow, RatQueue, window_from_counts
from .radio import Rat, UserEquipment, build_topology, link_rate_bps, sinr_db
from .rl import DqnAgent, load_checkpoint, save_checkpoint
from .traffic import TrafficType, make_generator

AGENT_ORDER = ("hdqn", "dqn", "heuristic")


def derive_stream_seed(master_seed: int, component_tag: str) -> int:
    """Stable 63-bit stream seed: first 8 bytes (big-endian) of
    SHA-256("{master_seed}:{component_tag}"), high bit cleared."""
    digest = hashlib.sha256(f"{master_seed}:{component_tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


@dataclass(frozen=True)
class ScenarioEvent:
    tti: int
    x: float
    y: float
    traffic_type: TrafficType


def parse_scenario(path: str | Path) -> list[ScenarioEvent]:
    """Scenario files: '#' comments plus lines of the form
    'add_ue tti=<int> x=<float> y=<float> traffic=<voice|video|gaming>'."""
    events: list[ScenarioEvent] = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] != "add_ue":
            raise ConfigError(f"{path}:{lineno}: unknown scenario directive {parts[0]!r}")
        kv = {}
        for p in parts[1:]:
            if "=" not in p:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {p!r}")
            k, v = p.split("=", 1)
            kv[k] = v
        try:
            events.append(
                ScenarioEvent(int(kv["tti"]), float(kv["x"]), float(kv["y"]), TrafficType(kv["traffic"]))
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad add_ue line: {exc}") from exc
    return sorted(events, key=lambda e: e.tti)


@dataclass
class DecisionRow:
    """One steering decision; intrinsic is filled in when the step is credited."""

    tti: int
    ue_id: int
    traffic_type: str
    rat: str
    goal_threshold: float | None
    occ_lte: float
    occ_nr: float
    changed: bool
    intrinsic: float | None = None


@dataclass
class EpisodeLog:
    episode_seed: int
    episode_ttis: int
    trace_hash: str
    metrics: MetricsWindow
    decision_rows: list[DecisionRow]
    epochs: list[EpochRecord]
    ue_info: list[tuple[int, str, int]]  # (ue_id, traffic_type, serving_nr_bs)
    controller_steps: int
    meta_transitions: int
    conservation_ok: bool
    queue_rows: list[tuple] = field(default_factory=list)
    traffic_trace: list[tuple] = field(default_factory=list)

    def steering_events(self) -> list[DecisionRow]:
        return [r for r in self.decision_rows if r.changed]


@dataclass
class _Flow:
    ue: UserEquipment
    gen: object
    sinr_lte: float
    sinr_nr: float
    rate_lte: float
    rate_nr: float
    assignment: Rat | None = None
    next_decision_tti: int = 0
    last_decision_tti: int = 0
    win_served_bytes: int = 0
    win_delay_sum_ms: float = 0.0
    win_delay_count: int = 0
    win_dropped_bytes: int = 0

    def reset_window(self, tti: int) -> None:
        self.last_decision_tti = tti
        self.win_served_bytes = 0
        self.win_delay_sum_ms = 0.0
        self.win_delay_count = 0
        self.win_dropped_bytes = 0

    def window(self, tti: int) -> MetricsWindow:
        return window_from_counts(
            max(1, tti - self.last_decision_tti),
            self.win_served_bytes,
            self.win_delay_sum_ms,
            self.win_delay_count,
            self.win_dropped_bytes,
        )


def build_policy(config: ExperimentConfig, kind: str, checkpoint_dir: str | Path | None = None):
    """Construct a steering policy; optionally restore trained agents."""
    seed_root = config.master_seed
    if kind == "hdqn":
        if checkpoint_dir is not None:
            meta = load_checkpoint(Path(checkpoint_dir) / "hdqn_meta.ckpt")
            ctrl = load_checkpoint(Path(checkpoint_dir) / "hdqn_ctrl.ckpt")
        else:
            meta = DqnAgent(META_STATE_DIM, len(GOAL_THRESHOLDS), config.rl,
                            derive_stream_seed(seed_root, "agent:hdqn:meta"))
            ctrl = DqnAgent(CONTROLLER_INPUT_DIM, len(RAT_ACTIONS), config.rl,
                            derive_stream_seed(seed_root, "agent:hdqn:ctrl"))
        return HdqnSteering(meta, ctrl, config.max_epoch_steps, config.goal_miss_penalty)
    if kind == "dqn":
        if checkpoint_dir is not None:
            agent = load_checkpoint(Path(checkpoint_dir) / "dqn.ckpt")
        else:
            agent = build_flat_dqn(config.rl, derive_stream_seed(seed_root, "agent:dqn:flat"))
        return FlatDqnSteering(agent)
    if kind == "heuristic":
        return HeuristicSteering(HeuristicWeights(*config.heuristic_weights))
    raise ConfigError(f"unknown agent kind {kind!r}")


def save_policy(policy, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(policy, HdqnSteering):
        save_checkpoint(policy.meta, out / "hdqn_meta.ckpt")
        save_checkpoint(policy.controller, out / "hdqn_ctrl.ckpt")
    elif isinstance(policy, FlatDqnSteering):
        save_checkpoint(policy.agent, out / "dqn.ckpt")


def run_episode(
    config: ExperimentConfig,
    policy,
    episode_seed: int,
    training: bool,
    scenario: list[ScenarioEvent] | None = None,
    collect_queue_rows: bool = False,
    collect_traffic_trace: bool = False,
) -> EpisodeLog:
    """Advance one episode TTI by TTI, routing steering decisions through the
    given policy. Deterministic in (config, episode_seed, policy state)."""
    policy.training = training
    policy.reset_episode()
    topo = build_topology(
        config.n_small_cells,
        config.n_ues,
        config.macro_radius_m,
        derive_stream_seed(episode_seed, "topology"),
        traffic_mix=config.traffic_mix,
        min_site_distance_m=config.min_site_distance_m,
    )
    queues = {bs.id: RatQueue(bs.id, config.queue_capacity_bytes) for bs in topo.base_stations}
    lte_id = topo.lte_bs.id
    interval = config.decision_interval_ttis
    hasher = hashlib.sha256()
    events = list(scenario or [])
    next_event = 0

    flows: list[_Flow] = []

    def add_flow(ue: UserEquipment, tti: int) -> _Flow:
        lte_bs = topo.bs(ue.serving_lte)
        nr_bs = topo.bs(ue.serving_nr)
        s_lte = sinr_db(ue, lte_bs, topo)
        s_nr = sinr_db(ue, nr_bs, topo)
        fl = _Flow(
            ue=ue,
            gen=make_generator(ue.traffic_type, derive_stream_seed(episode_seed, f"traffic:{ue.id}"), ue.id),
            sinr_lte=s_lte,
            sinr_nr=s_nr,
            rate_lte=link_rate_bps(s_lte, lte_bs.bandwidth_hz),
            rate_nr=link_rate_bps(s_nr, nr_bs.bandwidth_hz),
            next_decision_tti=tti,
        )
        flows.append(fl)
        return fl

    for ue in topo.ues:
        add_flow(ue, 0)

    def observe(fl: _Flow, tti: int) -> UeObservation:
        return UeObservation(
            ue_id=fl.ue.id,
            traffic_type=fl.ue.traffic_type,
            sinr_lte_db=fl.sinr_lte,
            sinr_nr_db=fl.sinr_nr,
            occ_lte=queues[lte_id].occupancy(),
            occ_nr=queues[fl.ue.serving_nr].occupancy(),
            window=fl.window(tti),
            tti=tti,
        )

    decision_rows: list[DecisionRow] = []
    queue_rows: list[tuple] = []
    traffic_trace: list[tuple] = []
    total_served = 0
    total_delay_sum = 0.0
    total_delay_count = 0
    total_dropped = 0
    conservation = True

    for tti in range(config.episode_ttis):
        while next_event < len(events) and events[next_event].tti == tti:
            ev = events[next_event]
            add_flow(topo.add_ue(ev.x, ev.y, ev.traffic_type), tti)
            next_event += 1

        for fl in flows:
            if tti != fl.next_decision_tti:
                continue
            obs = observe(fl, tti)
            decision = policy.decide(obs)
            decision_rows.append(
                DecisionRow(
                    tti=tti,
                    ue_id=fl.ue.id,
                    traffic_type=fl.ue.traffic_type.value,
                    rat=decision.rat.value,
                    goal_threshold=decision.goal_threshold,
                    occ_lte=obs.occ_lte,
                    occ_nr=obs.occ_nr,
                    changed=fl.assignment is not None and decision.rat is not fl.assignment,
                )
            )
            if fl.assignment is None:
                fl.next_decision_tti = tti + 1 + (fl.ue.id % interval)
            else:
                fl.next_decision_tti = tti + interval
            fl.assignment = decision.rat
            fl.reset_window(tti)

        for fl in flows:
            packets = fl.gen.generate_tti(tti)
            if not packets:
                continue
            for p in packets:
                hasher.update(f"{tti},{p.flow_id},{p.size_bytes};".encode())
                if collect_traffic_trace:
                    traffic_trace.append((tti, p.flow_id, p.size_bytes))
            target = lte_id if fl.assignment is Rat.LTE else fl.ue.serving_nr
            queues[target].enqueue(packets)

        for bs in topo.base_stations:
            q = queues[bs.id]
            head_flow = q.head_flow_id()
            if head_flow is None:
                rate = 0.0
            else:
                owner = flows[head_flow]
                rate = owner.rate_lte if bs.rat is Rat.LTE else owner.rate_nr
            report = q.serve_tti(rate, tti)
            total_served += report.served_bytes
            for fid, nbytes in report.transmitted:
                flows[fid].win_served_bytes += nbytes
            for fid, _, delay_ms in report.completed:
                flows[fid].win_delay_sum_ms += delay_ms
                flows[fid].win_delay_count += 1
                total_delay_sum += delay_ms
                total_delay_count += 1
            for fid, nbytes, _ in report.dropped:
                flows[fid].win_dropped_bytes += nbytes
                total_dropped += nbytes
            if not q.conservation_ok():
                conservation = False
            if collect_queue_rows:
                queue_rows.append(
                    (tti, bs.id, q.occupancy(), report.served_bytes * 8, report.dropped_bytes,
                     q.queued_bytes, q.cum_enqueued_bytes, q.cum_served_bytes, q.cum_dropped_bytes)
                )

    for fl in flows:
        policy.finish_flow(observe(fl, config.episode_ttis))

    rows_by_key = {(r.ue_id, r.tti): r for r in decision_rows}
    for ev in policy.drain_evaluations():
        row = rows_by_key.get((ev.ue_id, ev.decision_tti))
        if row is not None:
            row.intrinsic = ev.intrinsic
    epochs = policy.drain_epochs()

    if not conservation:
        raise SimulationError("queue byte conservation violated")

    return EpisodeLog(
        episode_seed=episode_seed,
        episode_ttis=config.episode_ttis,
        trace_hash=hasher.hexdigest(),
        metrics=window_from_counts(
            config.episode_ttis, total_served, total_delay_sum, total_delay_count, total_dropped
        ),
        decision_rows=decision_rows,
        epochs=epochs,
        ue_info=[(f.ue.id, f.ue.traffic_type.value, f.ue.serving_nr) for f in flows],
        controller_steps=getattr(policy, "controller_steps_evaluated", 0),
        meta_transitions=getattr(policy, "meta_transitions_stored", 0),
        conservation_ok=conservation,
        queue_rows=queue_rows,
        traffic_trace=traffic_trace,
    )


@dataclass
class AgentResult:
    kind: str
    per_seed: list[MetricsWindow]

    def _values(self, attr: str) -> np.ndarray:
        return np.array([getattr(m, attr) for m in self.per_seed])

    def mean_std(self, attr: str) -> tuple[float, float]:
        v = self._values(attr)
        return float(np.mean(v)), float(np.std(v))

    def median(self, attr: str) -> float:
        return float(np.median(self._values(attr)))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    agents: dict[str, AgentResult]
    eval_seeds: list[int]
    trace_hashes: list[str]
    checkpoint_dir: str

    def table_rows(self) -> list[tuple]:
        rows = []
        for kind in AGENT_ORDER:
            if kind not in self.agents:
                continue
            a = self.agents[kind]
            thr = a.mean_std("avg_throughput_bps")
            delay = a.mean_std("avg_delay_ms")
            drop = a.mean_std("drop_ratio")
            rows.append((kind, thr[0], thr[1], delay[0], delay[1], drop[0]))
        return rows

    def gain_rows(self) -> list[tuple]:
        """Relative gains of hdqn over each baseline: (hdqn - x) / x."""
        if "hdqn" not in self.agents:
            return []
        h = self.agents["hdqn"]
        rows = []
        for kind in AGENT_ORDER:
            if kind == "hdqn" or kind not in self.agents:
                continue
            x = self.agents[kind]
            rows.append(
                (
                    kind,
                    _rel_gain(h.mean_std("avg_throughput_bps")[0], x.mean_std("avg_throughput_bps")[0]),
                    _rel_gain(h.mean_std("avg_delay_ms")[0], x.mean_std("avg_delay_ms")[0]),
                    _rel_gain(h.mean_std("drop_ratio")[0], x.mean_std("drop_ratio")[0]),
                )
            )
        return rows


def _rel_gain(hdqn_value: float, other: float) -> float:
    return (hdqn_value - other) / other if other else 0.0


PER_SEED_HEADER = ["agent", "seed_index", "episode_seed", "throughput_bps", "delay_ms", "drop_ratio"]
COMPARISON_HEADER = [
    "agent", "throughput_bps_mean", "throughput_bps_std", "delay_ms_mean", "delay_ms_std", "drop_ratio_mean",
]
GAINS_HEADER = ["agent", "throughput_gain", "delay_gain", "drop_ratio_gain"]
STEERING_HEADER = [
    "tti", "ue_id", "traffic_type", "chosen_rat", "active_goal", "occupancy_lte", "occupancy_nr", "intrinsic",
]
QUEUE_HEADER = ["tti", "bs_id", "occupancy", "served_bits", "dropped_bytes"]
TRACE_HEADER = ["tti", "flow_id", "size_bytes"]


def steering_rows(log: EpisodeLog) -> list[tuple]:
    rows = []
    for r in sorted(log.decision_rows, key=lambda r: (r.tti, r.ue_id)):
        rows.append(
            (
                r.tti,
                r.ue_id,
                r.traffic_type,
                r.rat,
                "" if r.goal_threshold is None else r.goal_threshold,
                r.occ_lte,
                r.occ_nr,
                "" if r.intrinsic is None else r.intrinsic,
            )
        )
    return rows


def train_agent(config: ExperimentConfig, kind: str, scenario: list[ScenarioEvent] | None = None):
    """Train one learner over the configured training episodes (shared seeds)."""
    policy = build_policy(config, kind)
    if kind == "heuristic":
        return policy
    for ep in range(config.n_train_episodes):
        run_episode(config, policy, derive_stream_seed(config.master_seed, f"train:{ep}"),
                    training=True, scenario=scenario)
    return policy


def evaluate_agent(
    config: ExperimentConfig,
    policy,
    eval_seeds: list[int],
    scenario: list[ScenarioEvent] | None = None,
) -> list[EpisodeLog]:
    return [
        run_episode(config, policy, seed, training=False, scenario=scenario) for seed in eval_seeds
    ]


def eval_seeds_for(config: ExperimentConfig) -> list[int]:
    return [
        derive_stream_seed(config.master_seed, f"eval:{k}") for k in range(config.n_eval_episodes)
    ]


def run_experiment(config: ExperimentConfig, agents: tuple[str, ...] = AGENT_ORDER) -> ExperimentResult:
    """Train hdqn and dqn, evaluate all agents on identical evaluation seeds,
    save checkpoints and CSVs under config.output_dir."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = parse_scenario(config.scenario_path) if config.scenario_path else None
    seeds = eval_seeds_for(config)
    results: dict[str, AgentResult] = {}
    per_seed_rows: list[tuple] = []
    trace_hashes: list[str] | None = None
    for kind in agents:
        policy = train_agent(config, kind, scenario)
        save_policy(policy, out)
        logs = evaluate_agent(config, policy, seeds, scenario)
        hashes = [log.trace_hash for log in logs]
        if trace_hashes is None:
            trace_hashes = hashes
        elif hashes != trace_hashes:
            raise SimulationError("evaluation traffic traces differ across agents")
        results[kind] = AgentResult(kind, [log.metrics for log in logs])
        for i, log in enumerate(logs):
            m = log.metrics
            per_seed_rows.append((kind, i, log.episode_seed, m.avg_throughput_bps, m.avg_delay_ms, m.drop_ratio))
    result = ExperimentResult(config, results, seeds, trace_hashes or [], str(out))
    emit_csv(out / "per_seed.csv", "per-seed-metrics", PER_SEED_HEADER, per_seed_rows)
    emit_csv(out / "comparison.csv", "comparison", COMPARISON_HEADER, result.table_rows())
    emit_csv(out / "gains.csv", "relative-gains", GAINS_HEADER, result.gain_rows())
    return result


def threshold_response_lag(log: EpisodeLog, hotspot_bs_id: int) -> int | None:
    """TTIs between the first decision where an affected flow saw its NR cell's
    occupancy above the active goal threshold, and the first subsequent RAT
    change of any affected flow. None if the threshold was never exceeded or
    nobody was steered afterwards."""
    affected = {ue_id for ue_id, _, serving in log.ue_info if serving == hotspot_bs_id}
    exceeded_tti = None
    for r in sorted(log.decision_rows, key=lambda r: (r.tti, r.ue_id)):
        if r.ue_id in affected and r.goal_threshold is not None and r.occ_nr > r.goal_threshold:
            exceeded_tti = r.tti
            break
    if exceeded_tti is None:
        return None
    for r in sorted(log.decision_rows, key=lambda r: (r.tti, r.ue_id)):
        if r.ue_id in affected and r.changed and r.tti >= exceeded_tti:
            return r.tti - exceeded_tti
    return None
