"""Per-UE downlink traffic sources: voice (ON/OFF), video (30 fps frames),
gaming (jittered periodic), with per-type QoS specs and analytic mean rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

TTI_MS = 1.0
TTI_S = TTI_MS / 1000.0


class TrafficType(Enum):
    VOICE = "voice"
    VIDEO = "video"
    GAMING = "gaming"


@dataclass(frozen=True)
class QoSSpec:
    traffic_type: TrafficType
    delay_budget_ms: float
    nominal_rate_bps: float


_QOS_TABLE = {
    TrafficType.VOICE: QoSSpec(TrafficType.VOICE, 100.0, 64_000.0),
    TrafficType.VIDEO: QoSSpec(TrafficType.VIDEO, 150.0, 2_000_000.0),
    TrafficType.GAMING: QoSSpec(TrafficType.GAMING, 50.0, 500_000.0),
}


def qos_spec(traffic_type: TrafficType) -> QoSSpec:
    """Delay budget and nominal rate for one traffic class."""
    return _QOS_TABLE[traffic_type]


@dataclass(slots=True)
class Packet:
    flow_id: int
    size_bytes: int
    arrival_tti: int
    deadline_tti: int


# Voice: exponential ON/OFF, both phases mean 3 s; 40-byte packet every 20 ms while ON.
VOICE_PACKET_BYTES = 40
VOICE_PACKET_INTERVAL_TTIS = 20
VOICE_MEAN_PHASE_TTIS = 3000.0

# Video: 30 frames/s, one packet per frame, truncated-Pareto frame sizes.
VIDEO_FPS = 30.0
VIDEO_FRAME_MEAN_BYTES = 8250.0
VIDEO_PARETO_SHAPE = 1.2
VIDEO_FRAME_CAP_BYTES = 60_000

# Gaming: 60-byte packet every 40 ms with uniform +-10 ms jitter.
GAMING_PACKET_BYTES = 60
GAMING_INTERVAL_TTIS = 40
GAMING_JITTER_TTIS = 10


def truncated_pareto_mean(scale: float, shape: float, cap: float) -> float:
    """Closed-form mean of a Pareto(shape, scale) truncated to [scale, cap]."""
    a = shape
    num = a * scale**a * (cap ** (1.0 - a) - scale ** (1.0 - a))
    den = (1.0 - a) * (1.0 - (scale / cap) ** a)
    return num / den


def _solve_video_scale() -> float:
    # Bisect the scale so the truncated mean hits VIDEO_FRAME_MEAN_BYTES exactly.
    lo, hi = 1.0, float(VIDEO_FRAME_CAP_BYTES) - 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if truncated_pareto_mean(mid, VIDEO_PARETO_SHAPE, VIDEO_FRAME_CAP_BYTES) < VIDEO_FRAME_MEAN_BYTES:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


VIDEO_PARETO_SCALE = _solve_video_scale()


def expected_rate_bps(traffic_type: TrafficType) -> float:
    """Analytic long-run mean rate of the generator model (test oracle)."""
    if traffic_type is TrafficType.VOICE:
        return VOICE_PACKET_BYTES * 8 / (VOICE_PACKET_INTERVAL_TTIS * TTI_S) * 0.5
    if traffic_type is TrafficType.VIDEO:
        return VIDEO_FRAME_MEAN_BYTES * 8 * VIDEO_FPS
    return GAMING_PACKET_BYTES * 8 / (GAMING_INTERVAL_TTIS * TTI_S)


class FlowGenerator:
    """Stateful per-flow packet source driven by one dedicated PRNG stream.

    generate_tti() must be called with strictly increasing TTI indices; the
    output depends only on (traffic_type, seed, TTI sequence).
    """

    def __init__(self, traffic_type: TrafficType, seed: int, flow_id: int = 0):
        self.traffic_type = traffic_type
        self.flow_id = flow_id
        self.qos = qos_spec(traffic_type)
        self._deadline_ttis = math.ceil(self.qos.delay_budget_ms / TTI_MS)
        self._rng = np.random.default_rng(seed)
        self._last_tti = -1
        if traffic_type is TrafficType.VOICE:
            # Start in a stationary random phase; exponential residual is exact
            # by memorylessness.
            self._on = bool(self._rng.random() < 0.5)
            self._phase_end = self._draw_phase_ttis()
            self._next_packet_tti = 0 if self._on else -1
        elif traffic_type is TrafficType.VIDEO:
            self._frame_index = 0
            self._next_frame_tti = 0
        else:
            self._emit_index = 0
            self._next_emit_tti = max(0, self._draw_gaming_tti(0))

    def _draw_phase_ttis(self) -> int:
        return max(1, round(self._rng.exponential(VOICE_MEAN_PHASE_TTIS)))

    def _draw_gaming_tti(self, index: int) -> int:
        jitter = int(self._rng.integers(-GAMING_JITTER_TTIS, GAMING_JITTER_TTIS + 1))
        return index * GAMING_INTERVAL_TTIS + jitter

    def _draw_frame_bytes(self) -> int:
        u = self._rng.random()
        ratio = (VIDEO_PARETO_SCALE / VIDEO_FRAME_CAP_BYTES) ** VIDEO_PARETO_SHAPE
        x = VIDEO_PARETO_SCALE / (1.0 - u * (1.0 - ratio)) ** (1.0 / VIDEO_PARETO_SHAPE)
        return min(VIDEO_FRAME_CAP_BYTES, max(1, round(x)))

    def _packet(self, size_bytes: int, tti: int) -> Packet:
        return Packet(self.flow_id, size_bytes, tti, tti + self._deadline_ttis)

    def generate_tti(self, tti: int) -> list[Packet]:
        """Packets emitted at this TTI (possibly empty); advances internal state."""
        if tti <= self._last_tti:
            raise ValueError(f"generate_tti requires strictly increasing tti (got {tti} after {self._last_tti})")
        self._last_tti = tti
        if self.traffic_type is TrafficType.VOICE:
            return self._voice_step(tti)
        if self.traffic_type is TrafficType.VIDEO:
            return self._video_step(tti)
        return self._gaming_step(tti)

    def _voice_step(self, tti: int) -> list[Packet]:
        while tti >= self._phase_end:
            start = self._phase_end
            self._on = not self._on
            self._phase_end = start + self._draw_phase_ttis()
            if self._on:
                self._next_packet_tti = start
        if not self._on:
            return []
        # Catch up in case the caller skipped TTIs; skipped emissions are lost.
        while self._next_packet_tti < tti:
            self._next_packet_tti += VOICE_PACKET_INTERVAL_TTIS
        if tti == self._next_packet_tti:
            self._next_packet_tti += VOICE_PACKET_INTERVAL_TTIS
            return [self._packet(VOICE_PACKET_BYTES, tti)]
        return []

    def _video_step(self, tti: int) -> list[Packet]:
        out: list[Packet] = []
        while tti >= self._next_frame_tti:
            if tti == self._next_frame_tti:
                out.append(self._packet(self._draw_frame_bytes(), tti))
            else:
                self._draw_frame_bytes()  # keep stream aligned across skipped TTIs
            self._frame_index += 1
            self._next_frame_tti = round(self._frame_index * 1000.0 / VIDEO_FPS / TTI_MS)
        return out

    def _gaming_step(self, tti: int) -> list[Packet]:
        out: list[Packet] = []
        while tti >= self._next_emit_tti:
            if tti == self._next_emit_tti:
                out.append(self._packet(GAMING_PACKET_BYTES, tti))
            self._emit_index += 1
            self._next_emit_tti = self._draw_gaming_tti(self._emit_index)
        return out


def make_generator(traffic_type: TrafficType, seed: int, flow_id: int = 0) -> FlowGenerator:
    """Fresh generator with its own PRNG stream."""
    return FlowGenerator(traffic_type, seed, flow_id)
