"""
AI-driven development file
Purpose: Online deep RL for FL gateway control (experience memory, REINFORCE, exploit/update/train loop)
Module: UAV_LoRa_SAR_Lab/train_rl.py
Dependencies: numpy, policy, world, records
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from policy import (
    BASE_FEATURES,
    HistoryWindow,
    PolicyParams,
    featurize,
    forward_batch,
    rollout,
    score_gradient,
)
from records import RunRecord
from world import Action, GatewayMessage, SearchEnvironment, Step, Trajectory, episodic_return

logger = logging.getLogger(__name__)

RETURN_MODES = ("to_go", "whole")


class NonFiniteGradientError(FloatingPointError):
    """Raised when a policy-gradient estimate or its update is not finite."""


class RunAbortedError(RuntimeError):
    """Wraps an error raised mid-run, carrying the partial RunRecord."""

    def __init__(self, record: RunRecord, cause: Exception) -> None:
        super().__init__(f"Run aborted at slot {record.slots}: {type(cause).__name__}: {cause}")
        self.record = record


@dataclass(frozen=True)
class TrainerConfig:
    """Online RL hyperparameters."""

    alpha_rl: float = 1e-3
    xi: float = 0.2
    batch_size: int = 32
    horizon: int = 16
    discount: float = 0.99
    baseline_enabled: bool = True
    return_mode: str = "to_go"
    max_grad_norm: float = 10.0
    memory_capacity: int = 4096
    max_episodes: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.xi <= 1:
            raise ValueError(f"xi must lie in [0, 1], got {self.xi}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0 < self.discount <= 1:
            raise ValueError(f"discount must lie in (0, 1], got {self.discount}")
        if self.return_mode not in RETURN_MODES:
            raise ValueError(f"return_mode must be one of {RETURN_MODES}, got '{self.return_mode}'")
        if self.memory_capacity < 1:
            raise ValueError(f"memory_capacity must be >= 1, got {self.memory_capacity}")


@dataclass(frozen=True, eq=False)
class MemorySample:
    """One experience sample: the history at slot t_m and the trajectory that followed."""

    window: HistoryWindow
    trajectory: Trajectory

    def sequence(self) -> np.ndarray:
        """Raw (rssi, snr, action) rows: the window followed by every trajectory step."""
        steps = [(s.message.rssi_dbm, s.message.snr_db, float(s.action)) for s in self.trajectory.steps]
        rows = np.asarray(steps, dtype=np.float64).reshape(-1, 3)
        return np.concatenate([self.window.raw(), rows])

    def step_windows(self) -> np.ndarray:
        """(len, window, 3) raw history windows, one before each trajectory action."""
        size, length = self.window.size, len(self.trajectory)
        if length == 0:
            return np.zeros((0, size, 3))
        seq = self.sequence()
        return np.stack([seq[j:j + size] for j in range(length)]).reshape(length, size, 3)

    def actions(self) -> np.ndarray:
        return np.array([int(s.action) for s in self.trajectory.steps], dtype=np.int64)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start_slot": self.trajectory.start_slot,
            "window_size": self.window.size,
            "window": [list(e) for e in self.window.entries],
            "steps": [
                [int(s.action), s.message.rssi_dbm, s.message.snr_db, s.message.x_m, s.message.y_m, s.reward]
                for s in self.trajectory.steps
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MemorySample":
        window = HistoryWindow(
            int(data["window_size"]),
            tuple((float(b), float(g), int(a)) for b, g, a in data["window"]),
        )
        steps = tuple(
            Step(Action(int(a)), GatewayMessage(float(b), float(g), float(x), float(y)), float(r))
            for a, b, g, x, y, r in data["steps"]
        )
        return cls(window, Trajectory(int(data["start_slot"]), steps))


class ExperienceMemory:
    """Bounded FIFO of experience samples with uniform sampling without replacement."""

    def __init__(self, capacity: int = 4096) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._samples: deque = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._samples)

    def __iter__(self):
        return iter(self._samples)

    def add(self, sample: MemorySample) -> None:
        self._samples.append(sample)

    def sample_indices(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if not 1 <= size <= len(self._samples):
            raise ValueError(f"Cannot draw {size} samples from a memory of {len(self._samples)}")
        return rng.choice(len(self._samples), size=size, replace=False)

    def sample(self, size: int, rng: np.random.Generator) -> List[MemorySample]:
        """Draw min(size, len) distinct samples uniformly at random."""
        size = min(size, len(self._samples))
        return [self._samples[i] for i in self.sample_indices(size, rng)]


def advantages(batch: Sequence[MemorySample], cfg: TrainerConfig) -> List[np.ndarray]:
    """
    Per-step advantage multipliers for a batch of samples.

    Returns are discounted returns-to-go (or the whole-trajectory return when
    return_mode is "whole"); the baseline is the batch mean of the returns at
    the same step offset.
    """
    lengths = [len(s.trajectory) for s in batch]
    width = max(lengths) if lengths else 0
    returns = np.zeros((len(batch), width))
    mask = np.zeros((len(batch), width), dtype=bool)
    for row, sample in enumerate(batch):
        rewards = np.asarray(sample.trajectory.rewards, dtype=np.float64)
        if cfg.return_mode == "whole":
            ret = np.full(len(rewards), episodic_return(sample.trajectory, cfg.discount))
        else:
            ret = np.zeros(len(rewards))
            running = 0.0
            for j in reversed(range(len(rewards))):
                running = rewards[j] + cfg.discount * running
                ret[j] = running
        returns[row, :len(rewards)] = ret
        mask[row, :len(rewards)] = True
    if cfg.baseline_enabled and width:
        counts = mask.sum(axis=0)
        baseline = np.where(mask, returns, 0.0).sum(axis=0) / np.maximum(counts, 1)
        returns = returns - baseline[None, :]
    return [returns[row, :length] for row, length in enumerate(lengths)]


def batch_tensors(
    batch: Sequence[MemorySample], weights: Sequence[np.ndarray], z: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten samples into (features, actions, weights) rows, one row per trajectory step."""
    windows = np.concatenate([s.step_windows() for s in batch])
    actions = np.concatenate([s.actions() for s in batch])
    flat_weights = np.concatenate([np.asarray(w, dtype=np.float64) for w in weights])
    return featurize(windows, z), actions, flat_weights


def policy_gradient(
    params: PolicyParams, batch: Sequence[MemorySample], cfg: TrainerConfig, z: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    REINFORCE estimate (1/M) sum_m sum_t' grad log pi(a|H) * advantage.

    Returns:
        (gradient w.r.t. the parameter vector, gradient w.r.t. z)
    """
    if not batch:
        raise ValueError("Cannot estimate a policy gradient from an empty batch")
    weights = [a / len(batch) for a in advantages(batch, cfg)]
    feats, actions, flat_weights = batch_tensors(batch, weights, z)
    if feats.shape[0] == 0:
        return np.zeros(params.arch.size), np.zeros_like(z)
    _, cache = forward_batch(params, feats)
    grad, dfeats = score_gradient(params, cache, actions, flat_weights)
    return grad, dfeats[..., BASE_FEATURES:].sum(axis=(0, 1))


def clip_gradient(grad: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.linalg.norm(grad))
    if max_norm > 0 and norm > max_norm:
        return grad * (max_norm / norm)
    return grad


def ascend(vector: np.ndarray, grad: np.ndarray, rate: float, max_norm: float) -> np.ndarray:
    """
    One clipped gradient-ascent step.

    Raises:
        NonFiniteGradientError: If the gradient or the updated vector is not finite
    """
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError("Policy gradient contains non-finite values; update aborted")
    updated = vector + rate * clip_gradient(grad, max_norm)
    if not np.all(np.isfinite(updated)):
        raise NonFiniteGradientError("Updated parameters are not finite; update aborted")
    return updated


def reinforce_update(
    params: PolicyParams,
    batch: Sequence[MemorySample],
    cfg: TrainerConfig,
    z: Optional[np.ndarray] = None,
    learning_rate: Optional[float] = None,
) -> PolicyParams:
    """
    Gradient-ascent step theta <- theta + alpha * grad J(theta) on a sampled batch.

    Args:
        params: Current parameters
        batch: M experience samples
        cfg: Trainer configuration
        z: Latent context, zeros when omitted
        learning_rate: Overrides cfg.alpha_rl

    Returns:
        Updated parameters

    Raises:
        ValueError: On an empty batch
        NonFiniteGradientError: If the update would not be finite
    """
    z = params.null_context() if z is None else z
    rate = cfg.alpha_rl if learning_rate is None else learning_rate
    grad, _ = policy_gradient(params, batch, cfg, z)
    return params.with_vector(ascend(params.vector, grad, rate, cfg.max_grad_norm))


TrainPhase = Callable[[PolicyParams, np.ndarray, np.random.Generator], Tuple[PolicyParams, np.ndarray]]


def online_loop(
    env: SearchEnvironment,
    params: PolicyParams,
    z: np.ndarray,
    cfg: TrainerConfig,
    rng: np.random.Generator,
    memory: ExperienceMemory,
    record: RunRecord,
    train_phase: TrainPhase,
    train_prob: float,
) -> Tuple[PolicyParams, np.ndarray]:
    """
    Exploit / update / train loop shared by the RL and meta-RL runners.

    Runs until the environment reports done. Each slot acts with the current
    policy, pushes the sample whose T-slot trajectory just completed into the
    memory, and with probability `train_prob` calls `train_phase`.
    """
    history = HistoryWindow.start(params.arch.window, env.last_message)
    windows = [history]
    steps: List[Step] = []

    def push(start: int) -> None:
        sample = MemorySample(windows[start], Trajectory(start, tuple(steps[start:start + cfg.horizon])))
        memory.add(sample)
        record.samples.append(sample)

    try:
        while not env.done:
            traj, history = rollout(env, params, z, 1, rng, history)
            step = traj.steps[0]
            record.log_step(env, step.action, step.message, step.reward)
            steps.append(step)
            windows.append(history)
            if len(steps) >= cfg.horizon:
                push(len(steps) - cfg.horizon)
            if rng.random() < train_prob and len(memory) > 0:
                try:
                    params, z = train_phase(params, z, rng)
                except NonFiniteGradientError as e:
                    logger.warning(f"Skipped update at slot {env.slot}: {e}")
        for start in range(max(0, len(steps) - cfg.horizon + 1), len(steps)):
            push(start)
    except Exception as e:
        record.fail(e)
        logger.error(f"Run {record.policy}/{record.seed} aborted: {e}")
        raise RunAbortedError(record, e) from e
    return params, z


def run_online(
    env: SearchEnvironment,
    params: PolicyParams,
    cfg: TrainerConfig,
    seed: int,
    memory: Optional[ExperienceMemory] = None,
    policy_name: str = "rl",
    config_hash: str = "",
) -> Tuple[PolicyParams, RunRecord]:
    """
    One SAR episode of online deep RL.

    Args:
        env: Environment (reset here with `seed`)
        params: Fresh or checkpointed parameters
        cfg: Trainer configuration
        seed: Episode seed for the environment and the learner's random stream
        memory: Experience memory persisting across episodes; a new one when None

    Returns:
        (final parameters, RunRecord)

    Raises:
        RunAbortedError: Wrapping any error raised mid-run, with the partial record
    """
    memory = ExperienceMemory(cfg.memory_capacity) if memory is None else memory
    env.reset(seed)
    record = RunRecord.for_env(env, policy_name, seed, config_hash)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA1]))

    def train_phase(current: PolicyParams, z: np.ndarray, gen: np.random.Generator):
        batch = memory.sample(cfg.batch_size, gen)
        return reinforce_update(current, batch, cfg, z), z

    params, _ = online_loop(env, params, params.null_context(), cfg, rng, memory, record, train_phase, cfg.xi)
    logger.debug(
        f"Online run seed={seed}: slots={record.slots} found={record.found} target={record.reached_target}"
    )
    return params, record


def episode_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, episode]).generate_state(1)[0])


def train_episodes(
    env: SearchEnvironment,
    params: PolicyParams,
    cfg: TrainerConfig,
    seed: int,
    episodes: Optional[int] = None,
    memory: Optional[ExperienceMemory] = None,
    config_hash: str = "",
) -> Tuple[PolicyParams, List[RunRecord], ExperienceMemory]:
    """
    Run online RL over consecutive episodes, persisting theta and the memory.

    A failed episode is kept as a FAILED record and training continues.

    Returns:
        (final parameters, one RunRecord per episode, experience memory)
    """
    episodes = cfg.max_episodes if episodes is None else episodes
    memory = ExperienceMemory(cfg.memory_capacity) if memory is None else memory
    records = []
    for episode in range(episodes):
        try:
            params, record = run_online(
                env, params, cfg, episode_seed(seed, episode), memory, policy_name="rl", config_hash=config_hash
            )
        except RunAbortedError as e:
            # theta stays at its value before the failed episode
            records.append(e.record)
            continue
        records.append(record)
        logger.info(
            f"Episode {episode + 1}/{episodes}: slots={record.slots} "
            f"found={record.found} mean reward={record.mean_reward:.2f} dBm"
        )
    return params, records, memory
