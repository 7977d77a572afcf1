"""
AI-driven development file
Purpose: Deep meta-RL for FL gateway control in a new environment (task encoder, adaptation and meta updates)
Module: UAV_LoRa_SAR_Lab/train_meta.py
Dependencies: numpy, policy, train_rl, world, records
"""

import logging
import math
import struct
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from policy import (
    BASE_FEATURES,
    INIT_SCALE,
    PAD_ROW,
    PolicyParams,
    featurize,
    forward_batch,
    lstm_backward,
    lstm_forward,
    score_gradient,
    unpack,
)
from records import RunRecord
from train_rl import (
    ExperienceMemory,
    MemorySample,
    NonFiniteGradientError,
    TrainerConfig,
    advantages,
    ascend,
    batch_tensors,
    online_loop,
    reinforce_update,
)
from world import SearchEnvironment

logger = logging.getLogger(__name__)

META_CHECKPOINT_VERSION = 2


@dataclass(frozen=True, eq=False)
class Task:
    """A (history, trajectory) pair from a successful prior SAR run, tagged with its source."""

    sample: MemorySample
    source: str

    def __post_init__(self) -> None:
        if len(self.sample.trajectory) == 0:
            raise ValueError("A task needs a nonempty trajectory")
        if not self.source:
            raise ValueError("A task needs a source environment tag")


@dataclass(frozen=True)
class MetaConfig:
    """Meta-RL hyperparameters."""

    alpha_meta1: float = 1e-3
    alpha_meta2: float = 1e-4
    m1: int = 32
    m2: int = 32
    k: int = 64
    xi: float = 0.2
    encoder_hidden: int = 16
    tail_fraction: float = 0.25
    psi_online: bool = True
    pretrain_iterations: int = 500
    seed: int = 0

    def __post_init__(self) -> None:
        if self.alpha_meta1 < 0 or self.alpha_meta2 < 0:
            raise ValueError("Meta learning rates must be non-negative")
        for name in ("m1", "m2", "k", "encoder_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.xi <= 1:
            raise ValueError(f"xi must lie in [0, 1], got {self.xi}")
        if not 0 < self.tail_fraction <= 1:
            raise ValueError(f"tail_fraction must lie in (0, 1], got {self.tail_fraction}")


@dataclass(frozen=True)
class EncoderArch:
    """Task encoder shape: per-step input width, recurrent width, latent width, sequence length."""

    inputs: int = BASE_FEATURES
    hidden: int = 16
    latent: int = 16
    seq_len: int = 24

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        n = self.hidden
        return {
            "Wx": (4 * n, self.inputs),
            "Wh": (4 * n, n),
            "b": (4 * n,),
            "Wp": (self.latent, n),
            "bp": (self.latent,),
        }

    @property
    def size(self) -> int:
        return int(sum(np.prod(s) for s in self.shapes().values()))


@dataclass(frozen=True, eq=False)
class EncoderParams:
    """psi: recurrent task encoder plus the projection of the pooled encoding to z."""

    arch: EncoderArch
    vector: np.ndarray

    def __post_init__(self) -> None:
        vector = np.array(self.vector, dtype=np.float64)
        if vector.shape != (self.arch.size,):
            raise ValueError(f"Encoder vector has shape {vector.shape}, expected ({self.arch.size},)")
        vector.setflags(write=False)
        object.__setattr__(self, "vector", vector)

    @classmethod
    def initialize(cls, arch: EncoderArch, seed: int) -> "EncoderParams":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE2C0]))
        vector = rng.uniform(-INIT_SCALE, INIT_SCALE, arch.size)
        unpack(vector, arch.shapes())["b"][arch.hidden:2 * arch.hidden] += 1.0
        return cls(arch, vector)

    @classmethod
    def for_policy(cls, policy: PolicyParams, hidden: int, horizon: int, seed: int) -> "EncoderParams":
        arch = EncoderArch(hidden=hidden, latent=policy.arch.latent, seq_len=policy.arch.window + horizon)
        return cls.initialize(arch, seed)

    def views(self) -> Dict[str, np.ndarray]:
        return unpack(self.vector, self.arch.shapes())

    def with_vector(self, vector: np.ndarray) -> "EncoderParams":
        return EncoderParams(self.arch, vector)

    def to_bytes(self) -> bytes:
        a = self.arch
        return struct.pack("<4I", a.inputs, a.hidden, a.latent, a.seq_len) + self.vector.astype("<f8").tobytes()

    @classmethod
    def from_buffer(cls, data: bytes, offset: int = 0) -> Tuple["EncoderParams", int]:
        arch = EncoderArch(*struct.unpack_from("<4I", data, offset))
        start = offset + struct.calcsize("<4I")
        end = start + 8 * arch.size
        if len(data) < end:
            raise ValueError(f"Meta checkpoint truncated: need {end} bytes, got {len(data)}")
        return cls(arch, np.frombuffer(data[start:end], dtype="<f8").astype(np.float64)), end


def save_meta_checkpoint(phi: PolicyParams, psi: EncoderParams) -> bytes:
    """Policy checkpoint layout with a bumped version byte and the encoder appended."""
    return bytes([META_CHECKPOINT_VERSION]) + phi.to_bytes()[1:] + psi.to_bytes()


def load_meta_checkpoint(data: bytes) -> Tuple[PolicyParams, EncoderParams]:
    if not data or data[0] != META_CHECKPOINT_VERSION:
        raise ValueError(f"Unsupported meta checkpoint version {data[:1]!r}")
    phi, offset = PolicyParams.from_buffer(data, 1)
    psi, end = EncoderParams.from_buffer(data, offset)
    if end != len(data):
        raise ValueError(f"Meta checkpoint has {len(data) - end} trailing bytes")
    if psi.arch.latent != phi.arch.latent:
        raise ValueError("Encoder latent width does not match the policy")
    return phi, psi


def task_sequences(tasks: Sequence[Task], seq_len: int) -> np.ndarray:
    """
    Encoder inputs: each task's window + trajectory rows, left-padded or left-cut to seq_len.

    Returns:
        Array of shape (tasks, seq_len, BASE_FEATURES)
    """
    empty = np.zeros(0)
    pad_row = np.asarray(PAD_ROW, dtype=np.float64)
    out = []
    for task in tasks:
        raw = task.sample.sequence()[-seq_len:]
        pad = seq_len - raw.shape[0]
        if pad:
            raw = np.concatenate([np.tile(pad_row, (pad, 1)), raw])
        out.append(featurize(raw, empty))
    return np.stack(out)


def _pool(hidden: np.ndarray) -> np.ndarray:
    """Mean over tasks with exactly rounded sums, independent of task order."""
    count = hidden.shape[0]
    return np.array([math.fsum(hidden[:, j]) / count for j in range(hidden.shape[1])])


def encode_tasks(psi: EncoderParams, tasks: Sequence[Task]) -> np.ndarray:
    """
    z = projection of the mean recurrent encoding of the tasks.

    Raises:
        ValueError: On an empty task set
    """
    z, _ = _encode(psi, tasks)
    return z


def _encode(psi: EncoderParams, tasks: Sequence[Task]) -> Tuple[np.ndarray, tuple]:
    if not tasks:
        raise ValueError("Cannot encode an empty task set")
    v = psi.views()
    x = task_sequences(tasks, psi.arch.seq_len)
    h, cache = lstm_forward(v["Wx"], v["Wh"], v["b"], x)
    pooled = _pool(h)
    return v["Wp"] @ pooled + v["bp"], (x, h, pooled, cache)


def adapt_phi(
    phi: PolicyParams,
    z0: np.ndarray,
    batch: Sequence[MemorySample],
    meta_cfg: MetaConfig,
    trainer_cfg: TrainerConfig,
) -> PolicyParams:
    """
    Adaptation phase: REINFORCE ascent on phi through pi_{phi, z0}, with z0 held fixed.

    Same estimator contract as reinforce_update, at rate alpha_meta1.
    """
    return reinforce_update(phi, batch, trainer_cfg, z=z0, learning_rate=meta_cfg.alpha_meta1)


def psi_objective_and_grad(
    psi: EncoderParams,
    phi: PolicyParams,
    tasks: Sequence[Task],
    trainer_cfg: TrainerConfig,
) -> Tuple[float, np.ndarray]:
    """
    Return-weighted log-likelihood of the task actions under pi_{phi, z(psi)} and its psi-gradient.

    z is the encoding of the same task batch; phi is held fixed (first order).

    Returns:
        (objective value, gradient w.r.t. the encoder vector)
    """
    z, (x, h, pooled, cache) = _encode(psi, tasks)
    samples = [t.sample for t in tasks]
    weights = [a / len(samples) for a in advantages(samples, trainer_cfg)]
    feats, actions, flat_weights = batch_tensors(samples, weights, z)
    probs, policy_cache = forward_batch(phi, feats)
    objective = float(np.sum(flat_weights * np.log(probs[np.arange(len(actions)), actions])))
    _, dfeats = score_gradient(phi, policy_cache, actions, flat_weights)
    dz = dfeats[..., BASE_FEATURES:].sum(axis=(0, 1))
    v = psi.views()
    grads = {"Wp": np.outer(dz, pooled), "bp": dz}
    dh = np.tile((v["Wp"].T @ dz) / len(tasks), (len(tasks), 1))
    grads["Wx"], grads["Wh"], grads["b"], _ = lstm_backward(v["Wx"], v["Wh"], x, cache, dh)
    return objective, np.concatenate([grads[name].ravel() for name in psi.arch.shapes()])


def update_psi(
    psi: EncoderParams,
    phi0: PolicyParams,
    tasks: Sequence[Task],
    meta_cfg: MetaConfig,
    trainer_cfg: TrainerConfig,
) -> EncoderParams:
    """
    Meta update: psi <- psi + alpha_meta2 * grad_psi J(phi0, psi) on a batch of M2 tasks.

    Raises:
        ValueError: On an empty task batch
        NonFiniteGradientError: If the update would not be finite
    """
    _, grad = psi_objective_and_grad(psi, phi0, tasks, trainer_cfg)
    return psi.with_vector(ascend(psi.vector, grad, meta_cfg.alpha_meta2, trainer_cfg.max_grad_norm))


def sample_tasks(tasks: Sequence[Task], size: int, rng: np.random.Generator) -> List[Task]:
    """Uniformly draw min(size, len) distinct tasks."""
    size = min(size, len(tasks))
    return [tasks[i] for i in rng.choice(len(tasks), size=size, replace=False)]


def meta_pretrain(
    phi: PolicyParams,
    psi: EncoderParams,
    tasks: Sequence[Task],
    meta_cfg: MetaConfig,
    trainer_cfg: TrainerConfig,
    iterations: Optional[int] = None,
) -> Tuple[PolicyParams, EncoderParams]:
    """
    Offline first-order meta training on prior tasks between operations.

    Each iteration draws M2 tasks, ascends phi on their returns under z = encode(psi, tasks)
    and then ascends psi with that phi fixed.
    """
    if not tasks:
        raise ValueError("Meta pretraining needs at least one prior task")
    iterations = meta_cfg.pretrain_iterations if iterations is None else iterations
    rng = np.random.default_rng(np.random.SeedSequence([meta_cfg.seed, 0x3E7A]))
    for iteration in range(iterations):
        batch = sample_tasks(tasks, meta_cfg.m2, rng)
        try:
            z = encode_tasks(psi, batch)
            phi = adapt_phi(phi, z, [t.sample for t in batch], meta_cfg, trainer_cfg)
            psi = update_psi(psi, phi, batch, meta_cfg, trainer_cfg)
        except NonFiniteGradientError as e:
            logger.warning(f"Skipped meta iteration {iteration + 1}: {e}")
        if (iteration + 1) % 100 == 0:
            logger.info(f"Meta pretraining {iteration + 1}/{iterations}")
    return phi, psi


def run_meta_online(
    env_new: SearchEnvironment,
    phi: PolicyParams,
    psi: EncoderParams,
    prior_tasks: Sequence[Task],
    meta_cfg: MetaConfig,
    trainer_cfg: TrainerConfig,
    seed: int,
    policy_name: str = "meta",
    config_hash: str = "",
) -> Tuple[PolicyParams, EncoderParams, RunRecord]:
    """
    One SAR episode of online deep meta-RL in a new environment.

    The meta-train set is K tasks drawn from the prior memories. Each training
    phase adapts phi on M1 new-environment samples with z fixed, then (when
    psi_online) updates psi on M2 meta-train tasks and re-encodes z. A
    non-finite psi step keeps the adapted phi with the previous psi and z.

    Raises:
        ValueError: If no prior task is available
        RunAbortedError: Wrapping any error raised mid-run, with the partial record
    """
    if not prior_tasks:
        raise ValueError("Meta-RL needs a nonempty prior memory of successful SAR runs")
    if psi.arch.latent != phi.arch.latent:
        raise ValueError("Encoder latent width does not match the policy")
    env_new.reset(seed)
    record = RunRecord.for_env(env_new, policy_name, seed, config_hash)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB2]))
    meta_train = sample_tasks(prior_tasks, meta_cfg.k, rng)
    test_memory = ExperienceMemory(trainer_cfg.memory_capacity)
    state = {"psi": psi}

    def train_phase(current: PolicyParams, z: np.ndarray, gen: np.random.Generator):
        batch = test_memory.sample(meta_cfg.m1, gen)
        current = adapt_phi(current, z, batch, meta_cfg, trainer_cfg)
        if meta_cfg.psi_online:
            tasks = sample_tasks(meta_train, meta_cfg.m2, gen)
            try:
                state["psi"] = update_psi(state["psi"], current, tasks, meta_cfg, trainer_cfg)
            except NonFiniteGradientError as e:
                # phi is already adapted; keep it with the previous psi and z
                logger.warning(f"Skipped encoder update at slot {env_new.slot}: {e}")
                return current, z
            z = encode_tasks(state["psi"], meta_train)
        return current, z

    z0 = encode_tasks(psi, meta_train)
    phi, _ = online_loop(env_new, phi, z0, trainer_cfg, rng, test_memory, record, train_phase, meta_cfg.xi)
    logger.debug(f"Meta run seed={seed}: slots={record.slots} found={record.found}")
    return phi, state["psi"], record
