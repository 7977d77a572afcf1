"""
AI-driven development file
Purpose: Per-slot run log shared by trainers, baselines and the experiment harness
Module: UAV_LoRa_SAR_Lab/records.py
Dependencies: numpy, world
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from world import Action, GatewayMessage, SearchEnvironment

CSV_COLUMNS = ["slot", "x_m", "y_m", "action", "rssi_dbm", "snr_db", "reward_dbm", "dist_m", "return"]
NOT_FOUND = "NOT_FOUND"
STATUS_OK = "OK"
STATUS_FAILED = "FAILED"


@dataclass(frozen=True)
class RunRow:
    slot: int
    x_m: float
    y_m: float
    action: str
    rssi_dbm: float
    snr_db: float
    reward_dbm: float
    dist_m: float
    cumulative_return: float

    def as_list(self) -> List[Any]:
        return [
            self.slot, self.x_m, self.y_m, self.action, self.rssi_dbm,
            self.snr_db, self.reward_dbm, self.dist_m, self.cumulative_return,
        ]


@dataclass
class RunRecord:
    """
    Log of one SAR episode: per-slot rows plus a run summary.

    `dist_m` is privileged ground truth for analysis only. `samples` carries the
    experience gathered during the run and is not part of the CSV export.
    """

    policy: str
    seed: int
    config_hash: str = ""
    found_radius_m: float = 0.0
    rows: List[RunRow] = field(default_factory=list)
    status: str = STATUS_OK
    error: str = ""
    reached_target: bool = False
    samples: List[Any] = field(default_factory=list)
    messages: List[GatewayMessage] = field(default_factory=list)
    deviation_m: float = float("nan")

    @classmethod
    def for_env(cls, env: SearchEnvironment, policy: str, seed: int, config_hash: str = "") -> "RunRecord":
        return cls(policy=policy, seed=seed, config_hash=config_hash, found_radius_m=env.scenario.found_radius_m)

    def log_step(self, env: SearchEnvironment, action: Action, message: GatewayMessage, reward: float) -> None:
        """Append the row for the slot `env` has just completed."""
        previous = self.rows[-1].cumulative_return if self.rows else 0.0
        self.rows.append(
            RunRow(
                slot=env.slot,
                x_m=message.x_m,
                y_m=message.y_m,
                action=Action(action).name,
                rssi_dbm=message.rssi_dbm,
                snr_db=message.snr_db,
                reward_dbm=reward,
                dist_m=env.privileged().horizontal_distance(),
                cumulative_return=previous + reward,
            )
        )
        self.messages.append(message)
        self.reached_target = env.success

    def fail(self, error: Exception) -> None:
        self.status = STATUS_FAILED
        self.error = f"{type(error).__name__}: {error}"

    @property
    def slots(self) -> int:
        return len(self.rows)

    @property
    def slots_to_find(self) -> Optional[int]:
        """First slot whose ground-truth horizontal distance is below the found radius."""
        for row in self.rows:
            if row.dist_m < self.found_radius_m:
                return row.slot
        return None

    @property
    def found(self) -> bool:
        return self.slots_to_find is not None

    @property
    def mean_reward(self) -> float:
        return float(np.mean([r.reward_dbm for r in self.rows])) if self.rows else float("nan")

    @property
    def mean_distance(self) -> float:
        return float(np.mean([r.dist_m for r in self.rows])) if self.rows else float("nan")

    def positions(self) -> np.ndarray:
        return np.array([[r.x_m, r.y_m] for r in self.rows], dtype=np.float64).reshape(-1, 2)

    def summary(self) -> Dict[str, Any]:
        slots_to_find = self.slots_to_find
        return {
            "policy": self.policy,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "status": self.status,
            "error": self.error,
            "slots": self.slots,
            "slots_to_find": slots_to_find if slots_to_find is not None else NOT_FOUND,
            "reached_target": self.reached_target,
            "mean_reward_dbm": self.mean_reward,
            "mean_distance_m": self.mean_distance,
            "deviation_m": self.deviation_m,
        }
