"""
AI-driven development file
Purpose: Gymnasium view of the SAR environment for off-the-shelf agents
Module: UAV_LoRa_SAR_Lab/gym_env.py
Dependencies: gymnasium, numpy, world
"""

from typing import Any, Dict, Optional, Tuple

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from world import Action, GatewayMessage, ScenarioConfig, SearchEnvironment

SEED_BOUND = 2**31 - 1


class SearchGymEnv(gym.Env):
    """
    Wraps SearchEnvironment in the Gymnasium reset/step protocol.

    Observations are the gateway report (rssi, snr, x, y) only. An episode
    terminates when the target power is reached and is truncated when the
    battery runs out.
    """

    metadata = {"render_modes": []}

    def __init__(self, config: ScenarioConfig) -> None:
        super().__init__()
        self.env = SearchEnvironment(config)
        self.action_space = spaces.Discrete(len(Action))
        self.observation_space = spaces.Box(-np.inf, np.inf, (4,), np.float32)

    def reset(
        self, *, seed: Optional[int] = None, options: Optional[Dict[str, Any]] = None
    ) -> Tuple[np.ndarray, Dict[str, Any]]:
        super().reset(seed=seed)
        episode_seed = seed if seed is not None else int(self.np_random.integers(0, SEED_BOUND))
        message = self.env.reset(episode_seed)
        return self._observation(message), {"seed": episode_seed, "slot": 0}

    def step(self, action: int) -> Tuple[np.ndarray, float, bool, bool, Dict[str, Any]]:
        message, reward, done = self.env.step(Action(int(action)))
        terminated = self.env.success
        truncated = done and not terminated
        return self._observation(message), float(reward), terminated, truncated, {"slot": self.env.slot}

    @staticmethod
    def _observation(message: GatewayMessage) -> np.ndarray:
        return np.array([message.rssi_dbm, message.snr_db, message.x_m, message.y_m], dtype=np.float32)
