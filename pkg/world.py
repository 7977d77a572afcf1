"""
AI-driven development file
Purpose: Search-and-rescue POMDP environment for the flying LoRa gateway
Module: UAV_LoRa_SAR_Lab/world.py
Dependencies: numpy, radio, geo_utils
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import List, Optional, Tuple

import numpy as np

from geo_utils import GeoUtils, Point
from radio import (
    Corridor,
    LinkSample,
    RadioGeometry,
    far_field_power,
    link_sample,
    received_power,
    recover_signal_power,
)

logger = logging.getLogger(__name__)

TERRAINS = ("plain", "canyon")
DEFAULT_CORRIDOR_WIDTH_M = 200.0


class ScenarioError(ValueError):
    """Raised when a scenario violates one of its invariants."""


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an episode that is already done."""


class Action(IntEnum):
    """Cardinal moves plus hover, with their canonical integer codes."""

    E = 0
    W = 1
    N = 2
    S = 3
    H = 4

    @property
    def delta(self) -> Point:
        return _DELTAS[self]

    @property
    def opposite(self) -> "Action":
        return _OPPOSITES[self]


_DELTAS = {
    Action.E: (1.0, 0.0),
    Action.W: (-1.0, 0.0),
    Action.N: (0.0, 1.0),
    Action.S: (0.0, -1.0),
    Action.H: (0.0, 0.0),
}
_OPPOSITES = {
    Action.E: Action.W,
    Action.W: Action.E,
    Action.N: Action.S,
    Action.S: Action.N,
    Action.H: Action.H,
}


@dataclass(frozen=True)
class GatewayMessage:
    """The (rssi, snr, x, y) report the flying gateway sends each slot."""

    rssi_dbm: float
    snr_db: float
    x_m: float
    y_m: float

    @property
    def signal_power_dbm(self) -> float:
        return recover_signal_power(self.rssi_dbm, self.snr_db)


@dataclass(frozen=True)
class Step:
    action: Action
    message: GatewayMessage
    reward: float


@dataclass(frozen=True)
class Trajectory:
    """Actions, messages and rewards for the slots following `start_slot`."""

    start_slot: int
    steps: Tuple[Step, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def rewards(self) -> List[float]:
        return [s.reward for s in self.steps]

    def extend(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.start_slot, self.steps + other.steps)


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Geometry, kinematics and stopping rule of one SAR scenario.

    `poi`, `found_radius_m`, `r_target_dbm`, `max_slots` and `corridor` may be
    left as None and are filled in by `resolve`, which also sizes an unset
    shadowing lattice to the SAI.
    """

    sai_radius_m: float = 2000.0
    poi: Optional[Point] = None
    uav_start: Point = (0.0, 0.0)
    altitude_m: float = 300.0
    speed_mps: float = 20.0
    slot_s: float = 2.0
    battery_s: float = 1200.0
    max_slots: Optional[int] = None
    terrain: str = "plain"
    corridor: Optional[Corridor] = None
    radio: RadioGeometry = field(default_factory=RadioGeometry)
    found_radius_m: Optional[float] = None
    r_target_dbm: Optional[float] = None
    start_fraction: float = 0.8

    @property
    def step_m(self) -> float:
        return self.speed_mps * self.slot_s

    def resolve(self, seed: int) -> "ScenarioConfig":
        """
        Fill in every derived default and validate the result.

        When no POI is given it is placed at start_fraction * R from the UAV start,
        at a bearing drawn from `seed`.

        Raises:
            ScenarioError: If an invariant is violated
        """
        poi = self.poi
        if poi is None:
            rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9017]))
            bearing = float(rng.uniform(0.0, 2.0 * math.pi))
            poi = GeoUtils.point_on_circle(self.uav_start, self.start_fraction * self.sai_radius_m, bearing)
        max_slots = self.max_slots
        if max_slots is None:
            max_slots = int(math.floor(self.battery_s / self.slot_s))
        found_radius = self.found_radius_m if self.found_radius_m is not None else self.step_m
        r_target = self.r_target_dbm
        if r_target is None:
            r_target = far_field_power(math.hypot(self.altitude_m, found_radius), self.radio)
        corridor = self.corridor
        if self.terrain == "canyon" and corridor is None:
            half = 0.5 * DEFAULT_CORRIDOR_WIDTH_M
            corridor = Corridor(poi[0] - half, poi[0] + half, -self.sai_radius_m, self.sai_radius_m)
        radio = self.radio
        if radio.shadow_extent_m is None:
            radio = replace(radio, shadow_extent_m=self.sai_radius_m)
        resolved = replace(
            self,
            poi=(float(poi[0]), float(poi[1])),
            uav_start=(float(self.uav_start[0]), float(self.uav_start[1])),
            max_slots=max_slots,
            found_radius_m=found_radius,
            r_target_dbm=r_target,
            corridor=corridor,
            radio=radio,
        )
        resolved.validate()
        return resolved

    def validate(self) -> None:
        """
        Check the invariants of a resolved scenario.

        Raises:
            ScenarioError: Naming the violated invariant
        """
        if self.terrain not in TERRAINS:
            raise ScenarioError(f"terrain must be one of {TERRAINS}, got '{self.terrain}'")
        for name in ("sai_radius_m", "altitude_m", "speed_mps", "slot_s", "battery_s"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.poi is None or self.max_slots is None or self.found_radius_m is None or self.r_target_dbm is None:
            raise ScenarioError("scenario is not resolved: call resolve(seed) first")
        if not GeoUtils.is_point_in_sai(self.poi[0], self.poi[1], self.sai_radius_m):
            raise ScenarioError(f"poi {self.poi} must lie inside the SAI of radius {self.sai_radius_m}")
        if not GeoUtils.is_point_in_sai(self.uav_start[0], self.uav_start[1], self.sai_radius_m):
            raise ScenarioError(
                f"uav_start {self.uav_start} must lie inside the SAI of radius {self.sai_radius_m}"
            )
        expected_slots = int(math.floor(self.battery_s / self.slot_s))
        if self.max_slots != expected_slots:
            raise ScenarioError(
                f"max_slots must equal floor(battery_s / slot_s) = {expected_slots}, got {self.max_slots}"
            )
        if self.found_radius_m < self.step_m / 2:
            raise ScenarioError(
                f"found_radius_m must be >= speed*slot/2 = {self.step_m / 2}, got {self.found_radius_m}"
            )
        if self.altitude_m < self.radio.ref_distance_m:
            raise ScenarioError("altitude_m must be at least the radio reference distance")


class PrivilegedView:
    """
    Ground-truth accessors for baselines and metrics.

    Learned policies never receive this object; they only see GatewayMessage
    histories.
    """

    def __init__(self, env: "SearchEnvironment") -> None:
        self._env = env

    @property
    def poi(self) -> Point:
        return self._env.scenario.poi

    @property
    def position(self) -> Point:
        return self._env.position

    def horizontal_distance(self) -> float:
        return GeoUtils.horizontal_distance(self._env.position, self.poi)

    def link_distance(self) -> float:
        return math.hypot(self.horizontal_distance(), self._env.scenario.altitude_m)

    def is_found(self) -> bool:
        return self.horizontal_distance() < self._env.scenario.found_radius_m

    def last_link(self) -> Optional[LinkSample]:
        """True signal power and reported pair behind the latest beacon."""
        return self._env.last_link


class SearchEnvironment:
    """
    The SAR POMDP: hidden POI, UAV kinematics, beacon reports and rewards.

    A single instance is mutable and single-threaded; run several instances for
    parallel rollouts.
    """

    def __init__(self, config: ScenarioConfig) -> None:
        """
        Args:
            config: Scenario; unresolved fields are resolved per seed in reset()
        """
        self.config = config
        self.scenario: Optional[ScenarioConfig] = None
        self.position: Point = (0.0, 0.0)
        self.slot = 0
        self.done = True
        self.success = False
        self.last_message: Optional[GatewayMessage] = None
        self.last_link: Optional[LinkSample] = None
        self._rng: Optional[np.random.Generator] = None

    def reset(self, seed: int) -> GatewayMessage:
        """
        Start a new episode at the UAV start position.

        Args:
            seed: Seeds POI placement (when unset) and the fading stream

        Returns:
            The initial observation

        Raises:
            ScenarioError: If the scenario is invalid
        """
        self.scenario = self.config.resolve(seed)
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1F]))
        self.position = self.scenario.uav_start
        self.slot = 0
        self.done = False
        self.success = False
        self.last_message = self._beacon()
        logger.debug(f"Reset episode seed={seed} start={self.position} poi={self.scenario.poi}")
        return self.last_message

    def step(self, action: Action) -> Tuple[GatewayMessage, float, bool]:
        """
        Move one slot, receive a beacon and score it.

        Args:
            action: The cardinal move or hover

        Returns:
            (message, reward in dBm, done flag)

        Raises:
            EpisodeFinishedError: If the episode is already done
        """
        if self.done or self.scenario is None:
            raise EpisodeFinishedError("Cannot step a finished episode; call reset() first")
        action = Action(action)
        dx, dy = action.delta
        step = self.scenario.step_m
        self.position = GeoUtils.clamped_move(self.position, (dx * step, dy * step), self.scenario.sai_radius_m)
        self.slot += 1
        message = self._beacon()
        reward = recover_signal_power(message.rssi_dbm, message.snr_db)
        self.last_message = message
        if reward > self.scenario.r_target_dbm:
            self.success = True
            self.done = True
        elif self.slot >= self.scenario.max_slots:
            self.done = True
        return message, reward, self.done

    def privileged(self) -> PrivilegedView:
        return PrivilegedView(self)

    def _beacon(self) -> GatewayMessage:
        s = self.scenario
        uav = (self.position[0], self.position[1], s.altitude_m)
        power = received_power(uav, s.poi, s.radio, self._rng, corridor=s.corridor)
        self.last_link = link_sample(power, s.radio)
        return GatewayMessage(
            rssi_dbm=self.last_link.rssi_dbm, snr_db=self.last_link.snr_db, x_m=self.position[0], y_m=self.position[1]
        )


def episodic_return(traj: Trajectory, discount: float) -> float:
    """
    Discounted sum of the trajectory's rewards, the first step weighted by `discount`.

    Args:
        traj: Trajectory of rewards
        discount: Factor in (0, 1]

    Returns:
        Sum of discount**i * r_i for i = 1..len(traj); 0 for an empty trajectory
    """
    if not 0 < discount <= 1:
        raise ValueError(f"discount must lie in (0, 1], got {discount}")
    return float(sum(discount ** (i + 1) * step.reward for i, step in enumerate(traj.steps)))
