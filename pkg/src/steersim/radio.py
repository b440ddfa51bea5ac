"""Static LTE macro + NR small-cell layout with log-distance pathloss,
co-channel SINR, and Shannon link rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError
from .traffic import TrafficType


class Rat(Enum):
    LTE = "LTE"
    NR = "NR"


LTE_CARRIER_GHZ = 0.8
LTE_BANDWIDTH_HZ = 10e6
LTE_TX_POWER_DBM = 46.0
NR_CARRIER_GHZ = 3.5
NR_BANDWIDTH_HZ = 20e6
NR_TX_POWER_DBM = 30.0

NOISE_DENSITY_DBM_PER_HZ = -174.0
NOISE_FIGURE_DB = 9.0
SPECTRAL_EFFICIENCY_CAP = 7.4  # bit/s/Hz
NEAR_FIELD_CLAMP_M = 35.0
DEFAULT_MIN_SITE_DISTANCE_M = 50.0
_PLACEMENT_RETRIES = 10_000


@dataclass(frozen=True)
class BaseStation:
    id: int
    rat: Rat
    x: float
    y: float
    carrier_ghz: float
    bandwidth_hz: float
    tx_power_dbm: float


@dataclass(frozen=True)
class UserEquipment:
    id: int
    x: float
    y: float
    traffic_type: TrafficType
    serving_lte: int
    serving_nr: int


@dataclass(frozen=True)
class LinkQuality:
    ue_id: int
    bs_id: int
    sinr_db: float
    rate_bps: float


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * math.log10(linear)


def distance_m(bs: BaseStation, ue: UserEquipment) -> float:
    return math.hypot(bs.x - ue.x, bs.y - ue.y)


def pathloss_db(bs: BaseStation, ue: UserEquipment) -> float:
    """Log-distance pathloss; near-field clamped at 35 m so d=0 is safe."""
    d_km = max(distance_m(bs, ue), NEAR_FIELD_CLAMP_M) / 1000.0
    if bs.rat is Rat.LTE:
        return 128.1 + 37.6 * math.log10(d_km)
    return 140.7 + 36.7 * math.log10(d_km)


def noise_floor_dbm(bandwidth_hz: float) -> float:
    return NOISE_DENSITY_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + NOISE_FIGURE_DB


def sinr_from_powers(signal_dbm: float, interferer_dbm: list[float], noise_dbm: float) -> float:
    """Combine received powers in the linear domain; result in dB."""
    denom = db_to_linear(noise_dbm) + sum(db_to_linear(p) for p in interferer_dbm)
    return linear_to_db(db_to_linear(signal_dbm) / denom)


@dataclass
class Topology:
    """Immutable-after-construction layout; scenario UE additions are the one
    sanctioned mutation and happen on the single simulation thread."""

    base_stations: list[BaseStation]
    ues: list[UserEquipment]
    macro_radius_m: float
    _bs_index: dict[int, BaseStation] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._bs_index = {bs.id: bs for bs in self.base_stations}

    def bs(self, bs_id: int) -> BaseStation:
        return self._bs_index[bs_id]

    def ue(self, ue_id: int) -> UserEquipment:
        for u in self.ues:
            if u.id == ue_id:
                return u
        raise KeyError(ue_id)

    @property
    def lte_bs(self) -> BaseStation:
        return next(b for b in self.base_stations if b.rat is Rat.LTE)

    @property
    def nr_cells(self) -> list[BaseStation]:
        return [b for b in self.base_stations if b.rat is Rat.NR]

    def nearest_nr_cell(self, x: float, y: float) -> BaseStation:
        cells = self.nr_cells
        dists = [math.hypot(b.x - x, b.y - y) for b in cells]
        return cells[int(np.argmin(dists))]

    def add_ue(self, x: float, y: float, traffic_type: TrafficType) -> UserEquipment:
        """Attach one more UE (timed scenario arrival); serving set as usual."""
        ue = UserEquipment(
            id=len(self.ues),
            x=x,
            y=y,
            traffic_type=traffic_type,
            serving_lte=self.lte_bs.id,
            serving_nr=self.nearest_nr_cell(x, y).id,
        )
        self.ues.append(ue)
        return ue


def _uniform_disc(rng: np.random.Generator, radius: float) -> tuple[float, float]:
    r = radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return r * math.cos(theta), r * math.sin(theta)


def _apportion(fractions: tuple[float, float, float], n: int) -> list[int]:
    """Largest-remainder apportionment of n items over the traffic mix."""
    raw = [f * n for f in fractions]
    counts = [int(math.floor(v)) for v in raw]
    remainders = sorted(range(3), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in range(n - sum(counts)):
        counts[remainders[i % 3]] += 1
    return counts


def build_topology(
    n_small_cells: int,
    n_ues: int,
    macro_radius_m: float,
    rng_seed: int,
    traffic_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
    min_site_distance_m: float = DEFAULT_MIN_SITE_DISTANCE_M,
) -> Topology:
    """Place one LTE macro at the origin, NR small cells and UEs uniformly at
    random inside the macro radius. Deterministic for a given seed.

    traffic_mix orders (voice, video, gaming) fractions and must sum to 1.
    """
    if n_small_cells < 1 or n_ues < 1 or macro_radius_m <= 0:
        raise ConfigError("need n_small_cells >= 1, n_ues >= 1, macro_radius_m > 0")
    if abs(sum(traffic_mix) - 1.0) > 1e-9 or any(f < 0 for f in traffic_mix):
        raise ConfigError(f"traffic_mix must be non-negative and sum to 1, got {traffic_mix}")
    rng = np.random.default_rng(rng_seed)

    stations = [
        BaseStation(0, Rat.LTE, 0.0, 0.0, LTE_CARRIER_GHZ, LTE_BANDWIDTH_HZ, LTE_TX_POWER_DBM)
    ]
    tries = 0
    while len(stations) < n_small_cells + 1:
        x, y = _uniform_disc(rng, macro_radius_m)
        tries += 1
        if all(math.hypot(b.x - x, b.y - y) >= min_site_distance_m for b in stations):
            stations.append(
                BaseStation(len(stations), Rat.NR, x, y, NR_CARRIER_GHZ, NR_BANDWIDTH_HZ, NR_TX_POWER_DBM)
            )
        elif tries > _PLACEMENT_RETRIES:
            raise ConfigError(
                f"could not place {n_small_cells} small cells with min distance "
                f"{min_site_distance_m} m inside radius {macro_radius_m} m"
            )

    counts = _apportion(traffic_mix, n_ues)
    types = (
        [TrafficType.VOICE] * counts[0]
        + [TrafficType.VIDEO] * counts[1]
        + [TrafficType.GAMING] * counts[2]
    )
    order = rng.permutation(n_ues)
    topo = Topology(stations, [], macro_radius_m)
    for i in range(n_ues):
        x, y = _uniform_disc(rng, macro_radius_m)
        topo.ues.append(
            UserEquipment(
                id=i,
                x=x,
                y=y,
                traffic_type=types[int(order[i])],
                serving_lte=0,
                serving_nr=topo.nearest_nr_cell(x, y).id,
            )
        )
    return topo


def sinr_db(ue: UserEquipment, bs: BaseStation, topology: Topology) -> float:
    """SINR over noise plus all same-RAT co-channel interferers."""
    rx = bs.tx_power_dbm - pathloss_db(bs, ue)
    interferers = [
        b.tx_power_dbm - pathloss_db(b, ue)
        for b in topology.base_stations
        if b.rat is bs.rat and b.id != bs.id
    ]
    return sinr_from_powers(rx, interferers, noise_floor_dbm(bs.bandwidth_hz))


def link_rate_bps(sinr_db_value: float, bandwidth_hz: float) -> float:
    """Shannon rate, capped at the spectral-efficiency ceiling."""
    rate = bandwidth_hz * math.log2(1.0 + db_to_linear(sinr_db_value))
    return min(rate, SPECTRAL_EFFICIENCY_CAP * bandwidth_hz)


def link_quality(ue: UserEquipment, bs: BaseStation, topology: Topology) -> LinkQuality:
    s = sinr_db(ue, bs, topology)
    return LinkQuality(ue.id, bs.id, s, link_rate_bps(s, bs.bandwidth_hz))


def bs_rows(topology: Topology) -> list[tuple]:
    return [(b.id, b.rat.value, b.x, b.y) for b in topology.base_stations]


def ue_rows(topology: Topology) -> list[tuple]:
    return [(u.id, u.x, u.y, u.traffic_type.value, u.serving_nr) for u in topology.ues]
