"""Per-BS byte-accounted FIFO queues with deadline expiry, partial
head-of-line service, and windowed throughput/delay/drop metrics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .traffic import TTI_MS, TTI_S, Packet

DEFAULT_QUEUE_CAPACITY_BYTES = 2_000_000

_NO_DEADLINE = 1 << 62


@dataclass(slots=True)
class TtiReport:
    """What one queue did during one TTI."""

    tti: int
    bs_id: int
    served_bytes: int = 0
    # (flow_id, bytes) actually transmitted this TTI, partial packets included.
    transmitted: list = field(default_factory=list)
    # (flow_id, size_bytes, delay_ms) for packets fully served this TTI.
    completed: list = field(default_factory=list)
    # (flow_id, bytes, reason) with reason in {"overflow", "expired"}.
    dropped: list = field(default_factory=list)

    @property
    def dropped_bytes(self) -> int:
        return sum(b for _, b, _ in self.dropped)


@dataclass(frozen=True)
class MetricsWindow:
    window_ttis: int
    avg_throughput_bps: float
    avg_delay_ms: float
    drop_ratio: float


def window_from_counts(
    window_ttis: int,
    served_bytes: int,
    delay_sum_ms: float,
    delay_count: int,
    dropped_bytes: int,
) -> MetricsWindow:
    if window_ttis < 1:
        raise ValueError("window_ttis must be >= 1")
    throughput = served_bytes * 8 / (window_ttis * TTI_S)
    delay = delay_sum_ms / delay_count if delay_count else 0.0
    total = served_bytes + dropped_bytes
    drop_ratio = dropped_bytes / total if total else 0.0
    return MetricsWindow(window_ttis, throughput, delay, drop_ratio)


def window_metrics(reports: list[TtiReport], window_ttis: int) -> MetricsWindow:
    """Aggregate a batch of per-TTI reports into one metrics window."""
    served = 0
    delay_sum = 0.0
    delay_count = 0
    dropped = 0
    for r in reports:
        served += r.served_bytes
        dropped += r.dropped_bytes
        for _, _, d in r.completed:
            delay_sum += d
            delay_count += 1
    return window_from_counts(window_ttis, served, delay_sum, delay_count, dropped)


class RatQueue:
    """FIFO queue for one base station.

    Byte conservation (cum_enqueued = cum_served + cum_dropped + queued) holds
    exactly after every operation; cum_enqueued counts every byte offered,
    including tail-dropped overflow.
    """

    def __init__(self, bs_id: int, capacity_bytes: int = DEFAULT_QUEUE_CAPACITY_BYTES):
        if capacity_bytes <= 0:
            raise ValueError("capacity_bytes must be positive")
        self.bs_id = bs_id
        self.capacity_bytes = capacity_bytes
        self._fifo: deque[Packet] = deque()
        self._head_served_bytes = 0
        self._budget_carry = 0.0
        self._next_deadline = _NO_DEADLINE  # stale-low watermark, refreshed on expiry scans
        self._pending_drops: list = []
        self.queued_bytes = 0
        self.cum_enqueued_bytes = 0
        self.cum_served_bytes = 0
        self.cum_dropped_bytes = 0

    def occupancy(self) -> float:
        return self.queued_bytes / self.capacity_bytes

    def head_flow_id(self) -> int | None:
        """Owner of the head-of-line packet (the flow the next TTI serves)."""
        return self._fifo[0].flow_id if self._fifo else None

    def conservation_ok(self) -> bool:
        return self.cum_enqueued_bytes == self.cum_served_bytes + self.cum_dropped_bytes + self.queued_bytes

    def enqueue(self, packets: list[Packet]) -> int:
        """Append FIFO until capacity; overflow tail-drops. Returns accepted count."""
        accepted = 0
        for p in packets:
            self.cum_enqueued_bytes += p.size_bytes
            if self.queued_bytes + p.size_bytes <= self.capacity_bytes:
                self._fifo.append(p)
                self.queued_bytes += p.size_bytes
                if p.deadline_tti < self._next_deadline:
                    self._next_deadline = p.deadline_tti
                accepted += 1
            else:
                self.cum_dropped_bytes += p.size_bytes
                self._pending_drops.append((p.flow_id, p.size_bytes, "overflow"))
        return accepted

    def _expire(self, tti: int, report: TtiReport) -> None:
        if not self._fifo or tti <= self._next_deadline:
            return
        survivors: deque[Packet] = deque()
        next_deadline = _NO_DEADLINE
        head = True
        for p in self._fifo:
            if p.deadline_tti < tti:
                remaining = p.size_bytes - (self._head_served_bytes if head else 0)
                if head:
                    self._head_served_bytes = 0
                self.queued_bytes -= remaining
                self.cum_dropped_bytes += remaining
                report.dropped.append((p.flow_id, remaining, "expired"))
            else:
                survivors.append(p)
                if p.deadline_tti < next_deadline:
                    next_deadline = p.deadline_tti
            head = False
        self._fifo = survivors
        self._next_deadline = next_deadline

    def serve_tti(self, rate_bps: float, tti: int) -> TtiReport:
        """Expire overdue packets, then transmit up to rate_bps*TTI of bytes
        FIFO; a partially sent head carries its residual to the next TTI."""
        if rate_bps < 0:
            raise ValueError("rate_bps must be >= 0")
        report = TtiReport(tti=tti, bs_id=self.bs_id)
        if self._pending_drops:
            report.dropped.extend(self._pending_drops)
            self._pending_drops.clear()
        self._expire(tti, report)

        budget_f = rate_bps * TTI_S / 8.0 + self._budget_carry
        budget = int(budget_f)
        self._budget_carry = budget_f - budget
        while budget > 0 and self._fifo:
            head_pkt = self._fifo[0]
            remaining = head_pkt.size_bytes - self._head_served_bytes
            take = remaining if remaining <= budget else budget
            budget -= take
            self._head_served_bytes += take
            self.queued_bytes -= take
            self.cum_served_bytes += take
            report.served_bytes += take
            report.transmitted.append((head_pkt.flow_id, take))
            if self._head_served_bytes == head_pkt.size_bytes:
                self._fifo.popleft()
                self._head_served_bytes = 0
                delay_ms = (tti - head_pkt.arrival_tti) * TTI_MS
                report.completed.append((head_pkt.flow_id, head_pkt.size_bytes, delay_ms))
        if not self._fifo:
            self._next_deadline = _NO_DEADLINE
        return report
