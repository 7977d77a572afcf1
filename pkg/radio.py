"""
AI-driven development file
Purpose: Stochastic ground-to-UAV LoRa link model and RSSI/SNR conversions
Module: UAV_LoRa_SAR_Lab/radio.py
Dependencies: numpy, geo_utils
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from geo_utils import GeoUtils

logger = logging.getLogger(__name__)

# Rician K-factors at or above this are treated as a pure line-of-sight link.
K_FACTOR_CAP_DB = 60.0
# Half-width of the shadowing lattice when no search area has set it.
DEFAULT_SHADOW_EXTENT_M = 2000.0
MIN_SHADOW_DECORRELATION_M = 10.0

TERRAIN_PRESETS = {
    "plain": {"path_loss_exponent": 2.7, "rician_k_db": 10.0},
    "canyon": {"path_loss_exponent": 3.5, "rician_k_db": 0.0},
}


@dataclass(frozen=True)
class RadioGeometry:
    """
    All stochastic channel parameters of one search area.

    Fixing `seed` fixes the shadowing field; the per-slot fading stream is
    supplied by the caller.
    """

    tx_power_dbm: float = 17.0
    gain_tx_db: float = 0.0
    gain_rx_db: float = 0.0
    ref_loss_db: float = 40.0
    ref_distance_m: float = 1.0
    path_loss_exponent: float = 2.7
    shadow_sigma_db: float = 4.0
    shadow_decorrelation_m: float = 100.0
    rician_k_db: float = 10.0
    noise_floor_dbm: float = -120.0
    seed: int = 0
    shadow_extent_m: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.ref_distance_m > 0:
            raise ValueError(f"ref_distance_m must be > 0, got {self.ref_distance_m}")
        if not self.path_loss_exponent >= 2:
            raise ValueError(f"path_loss_exponent must be >= 2, got {self.path_loss_exponent}")
        if not self.shadow_sigma_db >= 0:
            raise ValueError(f"shadow_sigma_db must be >= 0, got {self.shadow_sigma_db}")
        if not self.shadow_decorrelation_m >= MIN_SHADOW_DECORRELATION_M:
            raise ValueError(
                f"shadow_decorrelation_m must be >= {MIN_SHADOW_DECORRELATION_M}, got {self.shadow_decorrelation_m}"
            )
        if self.shadow_extent_m is not None and not self.shadow_extent_m > 0:
            raise ValueError(f"shadow_extent_m must be > 0, got {self.shadow_extent_m}")
        if self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")

    @classmethod
    def for_terrain(cls, terrain: str, **overrides) -> "RadioGeometry":
        """
        Build the default geometry of a terrain preset, then apply field overrides.

        Args:
            terrain: "plain" or "canyon"
            **overrides: RadioGeometry fields to replace

        Returns:
            The resulting RadioGeometry
        """
        if terrain not in TERRAIN_PRESETS:
            raise ValueError(f"Unknown terrain '{terrain}', expected one of {sorted(TERRAIN_PRESETS)}")
        return cls(**{**TERRAIN_PRESETS[terrain], **overrides})

    def noiseless(self) -> "RadioGeometry":
        """Copy of this geometry without shadowing and with a pure LoS fading term."""
        return replace(self, shadow_sigma_db=0.0, rician_k_db=K_FACTOR_CAP_DB)


@dataclass(frozen=True)
class LinkSample:
    """One received beacon: true signal power and the (RSSI, SNR) pair the gateway reports."""

    signal_power_dbm: float
    rssi_dbm: float
    snr_db: float


@dataclass(frozen=True)
class Corridor:
    """
    Axis-aligned canyon corridor.

    A node inside the corridor is shadowed by the walls (extra `wall_loss_db`)
    whenever the UAV's horizontal offset from the corridor axis exceeds half the
    corridor width.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    wall_loss_db: float = 20.0

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"Corridor must have positive extent, got {self}")

    def contains(self, point: Sequence[float]) -> bool:
        return self.x_min <= point[0] <= self.x_max and self.y_min <= point[1] <= self.y_max

    def axis_offset(self, point: Sequence[float]) -> Tuple[float, float]:
        """
        Offset of a point from the corridor's long axis.

        Returns:
            (absolute offset, half width) in meters
        """
        if (self.x_max - self.x_min) >= (self.y_max - self.y_min):
            center = 0.5 * (self.y_min + self.y_max)
            return abs(point[1] - center), 0.5 * (self.y_max - self.y_min)
        center = 0.5 * (self.x_min + self.x_max)
        return abs(point[0] - center), 0.5 * (self.x_max - self.x_min)

    def blocks(self, uav: Sequence[float], node: Sequence[float]) -> bool:
        if not self.contains(node):
            return False
        offset, half_width = self.axis_offset(uav)
        return offset > half_width


def far_field_power(d: float, g: RadioGeometry) -> float:
    """
    Mean far-field received power under the log-distance path gain.

    Args:
        d: 3-D link distance in meters
        g: Radio geometry

    Returns:
        Received power in dBm

    Raises:
        ValueError: If d is not positive or lies inside the reference distance
    """
    if not d > 0:
        raise ValueError(f"Link distance must be positive, got {d}")
    if d < g.ref_distance_m:
        raise ValueError(
            f"Link distance {d} m is inside the reference distance {g.ref_distance_m} m"
        )
    return (
        g.tx_power_dbm
        + g.gain_tx_db
        + g.gain_rx_db
        - g.ref_loss_db
        - 10.0 * g.path_loss_exponent * math.log10(d / g.ref_distance_m)
    )


def distance_for_power(power_dbm: float, g: RadioGeometry) -> float:
    """Invert far_field_power: distance whose mean power equals `power_dbm`."""
    at_reference = far_field_power(g.ref_distance_m, g)
    return g.ref_distance_m * 10.0 ** ((at_reference - power_dbm) / (10.0 * g.path_loss_exponent))


@lru_cache(maxsize=32)
def _unit_lattice(seed: int, extent: float, spacing: float) -> np.ndarray:
    coords = GeoUtils.lattice_coordinates(extent, spacing)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5AD0]))
    field = rng.standard_normal((coords.size, coords.size))
    field.setflags(write=False)
    return field


def shadowing_at(pos: Sequence[float], g: RadioGeometry) -> float:
    """
    Value of the seed-fixed spatially correlated shadowing field at a ground point.

    The field is a lattice of i.i.d. unit normals at the decorrelation spacing,
    scaled by shadow_sigma_db and bilinearly interpolated. The lattice spans
    [-shadow_extent_m, shadow_extent_m] on both axes; positions outside it are
    clamped to its edge.

    Args:
        pos: Ground point (x, y) in meters
        g: Radio geometry

    Returns:
        Shadowing in dB
    """
    if g.shadow_sigma_db == 0:
        return 0.0
    spacing = g.shadow_decorrelation_m
    extent = g.shadow_extent_m if g.shadow_extent_m is not None else DEFAULT_SHADOW_EXTENT_M
    field = _unit_lattice(g.seed, extent, spacing)
    last = field.shape[0] - 1

    def locate(coord: float) -> Tuple[int, float]:
        u = (min(max(coord, -extent), -extent + last * spacing) + extent) / spacing
        i = min(int(math.floor(u)), last - 1)
        return i, u - i

    ix, fx = locate(pos[0])
    iy, fy = locate(pos[1])
    value = (
        field[ix, iy] * (1 - fx) * (1 - fy)
        + field[ix + 1, iy] * fx * (1 - fy)
        + field[ix, iy + 1] * (1 - fx) * fy
        + field[ix + 1, iy + 1] * fx * fy
    )
    return float(g.shadow_sigma_db * value)


def fading_sample(rng: np.random.Generator, g: RadioGeometry) -> float:
    """
    Draw one unit-mean Rician power sample and return it in dB.

    Args:
        rng: Caller-owned random stream
        g: Radio geometry (uses rician_k_db)

    Returns:
        10*log10(nu^2) in dB
    """
    if g.rician_k_db >= K_FACTOR_CAP_DB:
        return 0.0
    k = 10.0 ** (g.rician_k_db / 10.0)
    los = math.sqrt(k / (k + 1.0))
    scatter = math.sqrt(1.0 / (2.0 * (k + 1.0)))
    in_phase, quadrature = rng.standard_normal(2)
    power = (los + scatter * in_phase) ** 2 + (scatter * quadrature) ** 2
    return 10.0 * math.log10(max(power, 1e-30))


def received_power(
    uav: Sequence[float],
    node: Sequence[float],
    g: RadioGeometry,
    rng: np.random.Generator,
    corridor: Optional[Corridor] = None,
) -> float:
    """
    Sample the received beacon power at the UAV.

    Args:
        uav: UAV position (x, y, z) in meters
        node: Ground node position (x, y) in meters
        g: Radio geometry
        rng: Caller-owned random stream for fading
        corridor: Canyon corridor adding wall loss in NLoS geometry

    Returns:
        Received signal power in dBm
    """
    d = math.sqrt((uav[0] - node[0]) ** 2 + (uav[1] - node[1]) ** 2 + uav[2] ** 2)
    midpoint = (0.5 * (uav[0] + node[0]), 0.5 * (uav[1] + node[1]))
    power = far_field_power(d, g) + shadowing_at(midpoint, g) + fading_sample(rng, g)
    if corridor is not None and corridor.blocks(uav, node):
        power -= corridor.wall_loss_db
    return power


def to_rssi_snr(signal_power_dbm: float, g: RadioGeometry) -> Tuple[float, float]:
    """
    Convert a signal power to the (RSSI, SNR) pair reported by the gateway.

    RSSI measures signal plus noise, so recover_signal_power inverts this exactly.

    Returns:
        (rssi_dbm, snr_db)
    """
    snr = signal_power_dbm - g.noise_floor_dbm
    rssi = signal_power_dbm + 10.0 * math.log1p(10.0 ** (-snr / 10.0)) / math.log(10.0)
    return rssi, snr


def recover_signal_power(rssi_dbm: float, snr_db: float) -> float:
    """Strip the noise contribution from an RSSI reading given its SNR."""
    return rssi_dbm - 10.0 * math.log1p(10.0 ** (-snr_db / 10.0)) / math.log(10.0)


def link_sample(signal_power_dbm: float, g: RadioGeometry) -> LinkSample:
    rssi, snr = to_rssi_snr(signal_power_dbm, g)
    return LinkSample(signal_power_dbm=signal_power_dbm, rssi_dbm=rssi, snr_db=snr)


def view_circle_radius(msg, g: RadioGeometry, altitude_m: float) -> float:
    """
    Horizontal radius of the circle of POI positions implied by one message.

    A diagnostic estimate: the recovered power is mapped back through the mean
    path gain, ignoring shadowing and fading.

    Args:
        msg: GatewayMessage with rssi_dbm and snr_db
        g: Radio geometry
        altitude_m: UAV altitude in meters

    Returns:
        Radius in meters; 0 when the implied distance does not exceed the altitude
    """
    power = recover_signal_power(msg.rssi_dbm, msg.snr_db)
    implied = distance_for_power(power, g)
    if implied <= altitude_m:
        return 0.0
    return math.sqrt(implied ** 2 - altitude_m ** 2)
