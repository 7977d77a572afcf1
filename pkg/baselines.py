"""
AI-driven development file
Purpose: Comparison controllers: the privileged optimal mover and the sense-then-act greedy policy
Module: UAV_LoRa_SAR_Lab/baselines.py
Dependencies: numpy, world, geo_utils, records
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from geo_utils import GeoUtils, Point
from records import RunRecord
from world import Action, SearchEnvironment

logger = logging.getLogger(__name__)

CARDINALS = (Action.E, Action.W, Action.N, Action.S)
# Outward sensing move followed by the move back to its origin, for each direction.
SENSE_SEQUENCE = (Action.N, Action.S, Action.E, Action.W, Action.S, Action.N, Action.W, Action.E)
DEFAULT_SENSE_PROB = 0.1
# Candidate distances closer than this count as tied.
TIE_TOLERANCE_M = 1e-9
SENSING = "sensing"
ACTING = "acting"


def optimal_action(uav: Point, poi: Point, found_radius_m: float, step_m: float) -> Action:
    """
    Cardinal move with the largest decrease of horizontal distance to the POI.

    Ties go to the first of E, W, N, S. Hovers once the UAV is strictly inside
    the found radius.
    """
    if GeoUtils.horizontal_distance(uav, poi) < found_radius_m:
        return Action.H
    best, best_dist = Action.H, float("inf")
    for action in CARDINALS:
        dx, dy = action.delta
        dist = GeoUtils.horizontal_distance((uav[0] + dx * step_m, uav[1] + dy * step_m), poi)
        if dist < best_dist - TIE_TOLERANCE_M:
            best, best_dist = action, dist
    return best


@dataclass(frozen=True)
class GreedyState:
    """
    Sense/act controller state.

    During sensing, `phase_step` indexes SENSE_SEQUENCE and `sense_log` maps each
    sensed direction to the power received right after its outward move.
    """

    mode: str = ACTING
    phase_step: int = 0
    sense_log: Dict[Action, float] = field(default_factory=dict)
    committed_direction: Optional[Action] = None


def greedy_action(
    state: GreedyState,
    last_power: float,
    rng: np.random.Generator,
    sense_prob: float = DEFAULT_SENSE_PROB,
    force_sense: bool = False,
) -> Tuple[Action, GreedyState]:
    """
    Next greedy move.

    Args:
        state: Controller state after the previous slot
        last_power: Recovered signal power (dBm) received after the previous move
        rng: Stream deciding when to re-enter sensing
        sense_prob: Per-slot probability of starting a sense phase while acting
        force_sense: Start a sense phase now when acting

    Returns:
        (action, updated state)
    """
    if state.mode == SENSING:
        previous = state.phase_step - 1
        log = dict(state.sense_log)
        if previous >= 0 and previous % 2 == 0:
            log[SENSE_SEQUENCE[previous]] = last_power
        if state.phase_step == len(SENSE_SEQUENCE):
            direction = max(CARDINALS, key=lambda a: (log[a], -int(a)))
            logger.debug(f"Greedy sense phase done, committing {direction.name}")
            return direction, GreedyState(ACTING, 0, log, direction)
        # At the SAI edge an outward move is clamped in place but its return still moves,
        # so the phase ends one step inward and the later readings come from there.
        action = SENSE_SEQUENCE[state.phase_step]
        return action, replace(state, phase_step=state.phase_step + 1, sense_log=log)
    if state.committed_direction is None or force_sense or rng.random() < sense_prob:
        return greedy_action(GreedyState(SENSING, 0, {}, state.committed_direction), last_power, rng)
    return state.committed_direction, state


def run_optimal(env: SearchEnvironment, seed: int, config_hash: str = "") -> RunRecord:
    """One privileged optimal run; hovers once found until the episode ends."""
    env.reset(seed)
    record = RunRecord.for_env(env, "optimal", seed, config_hash)
    scenario = env.scenario
    while not env.done:
        view = env.privileged()
        action = optimal_action(view.position, view.poi, scenario.found_radius_m, scenario.step_m)
        message, reward, _ = env.step(action)
        record.log_step(env, action, message, reward)
    return record


def run_greedy(
    env: SearchEnvironment, seed: int, config_hash: str = "", sense_prob: float = DEFAULT_SENSE_PROB
) -> RunRecord:
    """One greedy run driven only by the received gateway messages."""
    message = env.reset(seed)
    record = RunRecord.for_env(env, "greedy", seed, config_hash)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6E]))
    state = GreedyState()
    while not env.done:
        action, state = greedy_action(state, message.signal_power_dbm, rng, sense_prob)
        message, reward, _ = env.step(action)
        record.log_step(env, action, message, reward)
    return record
