"""
AI-driven development file
Purpose: Experiment orchestration: training, evaluation, comparison, metrics and exports
Module: UAV_LoRa_SAR_Lab/harness.py
Dependencies: numpy, pandas, config, world, policy, train_rl, train_meta, baselines, cleaner, export, telemetry
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from baselines import run_greedy, run_optimal
from cleaner import MemoryCleaner
from config import ExperimentConfig
from export import DataExporter
from policy import CHECKPOINT_VERSION, PolicyParams
from radio import view_circle_radius
from records import STATUS_FAILED, RunRecord
from telemetry import read_frames
from train_meta import (
    META_CHECKPOINT_VERSION,
    EncoderParams,
    Task,
    load_meta_checkpoint,
    meta_pretrain,
    run_meta_online,
    save_meta_checkpoint,
)
from train_rl import RunAbortedError, run_online, train_episodes
from world import ScenarioConfig, SearchEnvironment

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "policy", "runs", "failed", "found", "success_rate", "median_slots_to_find",
    "mean_slots_to_find", "mean_reward_dbm", "mean_distance_m", "mean_deviation_m",
]
CURVE_COLUMNS = ["policy", "slot", "runs", "mean_reward_dbm", "mean_distance_m"]
REPLAY_COLUMNS = ["seq", "rssi_dbm", "snr_db", "x_m", "y_m", "signal_power_dbm", "view_radius_m"]


@dataclass
class Learners:
    """Parameters a learned policy starts every evaluation run from."""

    phi: PolicyParams
    psi: Optional[EncoderParams] = None
    tasks: List[Task] = field(default_factory=list)


@dataclass
class ExperimentResult:
    config_hash: str
    records: List[RunRecord]
    summary: pd.DataFrame
    curves: pd.DataFrame

    @property
    def failed(self) -> bool:
        return any(r.status == STATUS_FAILED for r in self.records)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def trajectory_deviation(record: RunRecord, optimal_record: RunRecord) -> float:
    """
    Mean Euclidean distance between the two UAV tracks, slot by slot.

    The average runs over `record`'s slots; once the optimal run has ended its
    final (hover) position is used.

    Returns:
        Meters; NaN if either run has no slots
    """
    track = record.positions()
    reference = optimal_record.positions()
    if len(track) == 0 or len(reference) == 0:
        return float("nan")
    held = reference[np.minimum(np.arange(len(track)), len(reference) - 1)]
    return float(np.mean(np.hypot(track[:, 0] - held[:, 0], track[:, 1] - held[:, 1])))


def summarize(records: Sequence[RunRecord]) -> pd.DataFrame:
    """
    Per-policy metrics table.

    slots_to_find statistics cover the runs that found the POI; success_rate
    counts every run, FAILED ones included, in its denominator.
    """
    if not records:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    frame = pd.DataFrame(
        {
            "policy": [r.policy for r in records],
            "failed": [r.status == STATUS_FAILED for r in records],
            "found": [r.found for r in records],
            "slots_to_find": [float(r.slots_to_find) if r.found else float("nan") for r in records],
            "mean_reward_dbm": [r.mean_reward for r in records],
            "mean_distance_m": [r.mean_distance for r in records],
            "deviation_m": [r.deviation_m for r in records],
        }
    )
    table = (
        frame.groupby("policy", sort=False)
        .agg(
            runs=("found", "size"),
            failed=("failed", "sum"),
            found=("found", "sum"),
            median_slots_to_find=("slots_to_find", "median"),
            mean_slots_to_find=("slots_to_find", "mean"),
            mean_reward_dbm=("mean_reward_dbm", "mean"),
            mean_distance_m=("mean_distance_m", "mean"),
            mean_deviation_m=("deviation_m", "mean"),
        )
        .reset_index()
    )
    table["failed"] = table["failed"].astype(int)
    table["found"] = table["found"].astype(int)
    table["success_rate"] = table["found"] / table["runs"]
    return table[SUMMARY_COLUMNS]


def slot_curves(records: Sequence[RunRecord]) -> pd.DataFrame:
    """Per-policy, per-slot mean received power and mean horizontal distance."""
    rows = [
        (record.policy, row.slot, row.reward_dbm, row.dist_m)
        for record in records
        for row in record.rows
    ]
    if not rows:
        return pd.DataFrame(columns=CURVE_COLUMNS)
    frame = pd.DataFrame(rows, columns=["policy", "slot", "reward_dbm", "dist_m"])
    curves = (
        frame.groupby(["policy", "slot"])
        .agg(
            runs=("reward_dbm", "size"),
            mean_reward_dbm=("reward_dbm", "mean"),
            mean_distance_m=("dist_m", "mean"),
        )
        .reset_index()
    )
    return curves[CURVE_COLUMNS]


def run_baseline(kind: str, scenario: ScenarioConfig, seed: int, config_hash: str = "") -> RunRecord:
    env = SearchEnvironment(scenario)
    if kind == "optimal":
        return run_optimal(env, seed, config_hash)
    if kind == "greedy":
        return run_greedy(env, seed, config_hash)
    raise ValueError(f"'{kind}' is not a baseline policy")


def read_checkpoint(path: str) -> Tuple[PolicyParams, Optional[EncoderParams]]:
    data = Path(path).read_bytes()
    if data[:1] == bytes([META_CHECKPOINT_VERSION]):
        return load_meta_checkpoint(data)
    if data[:1] == bytes([CHECKPOINT_VERSION]):
        return PolicyParams.from_bytes(data), None
    raise ValueError(f"{path} is not a policy checkpoint")


def load_learners(cfg: ExperimentConfig, kind: str) -> Learners:
    """
    Starting parameters for a learned policy.

    Without a checkpoint the policy (and encoder) start from a seeded init.
    Meta runs also load and clean the prior experience memories.
    """
    psi = None
    if cfg.checkpoint:
        phi, psi = read_checkpoint(cfg.checkpoint)
    else:
        phi = PolicyParams.initialize(cfg.network, cfg.trainer.seed)
    if kind == "rl":
        return Learners(phi)
    if psi is None:
        psi = EncoderParams.for_policy(phi, cfg.meta.encoder_hidden, cfg.trainer.horizon, cfg.meta.seed)
    tasks = MemoryCleaner(cfg.meta.tail_fraction).clean_files(cfg.prior_memories)
    mismatched = [t for t in tasks if t.sample.window.size != phi.arch.window]
    if mismatched:
        raise ValueError(
            f"{len(mismatched)} prior tasks use window {mismatched[0].sample.window.size}, "
            f"the policy uses {phi.arch.window}"
        )
    return Learners(phi, psi, tasks)


def _run_one(kind: str, cfg: ExperimentConfig, seed: int, config_hash: str, learners: Optional[Learners]) -> RunRecord:
    if kind in ("optimal", "greedy"):
        return run_baseline(kind, cfg.scenario, seed, config_hash)
    env = SearchEnvironment(cfg.scenario)
    if kind == "rl":
        _, record = run_online(env, learners.phi, cfg.trainer, seed, policy_name="rl", config_hash=config_hash)
        return record
    _, _, record = run_meta_online(
        env, learners.phi, learners.psi, learners.tasks, cfg.meta, cfg.trainer, seed, config_hash=config_hash
    )
    return record


def _failed(kind: str, seed: int, config_hash: str, error: Exception) -> RunRecord:
    record = error.record if isinstance(error, RunAbortedError) else RunRecord(kind, seed, config_hash)
    if record.status != STATUS_FAILED:
        record.fail(error)
    logger.error(f"Run {kind}/seed {seed} FAILED: {error}")
    return record


def run_experiment(
    cfg: ExperimentConfig,
    policies: Optional[Sequence[str]] = None,
    exporter: Optional[DataExporter] = None,
    frames: bool = False,
) -> ExperimentResult:
    """
    Execute every (policy, seed) run of the experiment and write its outputs.

    Each run is deterministic per seed. A run that raises is recorded as FAILED
    and the remaining runs proceed. Non-optimal runs are scored against an
    optimal run on the same seed.

    Args:
        cfg: Experiment configuration
        policies: Policy kinds to run; defaults to cfg.policy_kind
        exporter: Writer for the outputs; nothing is written when None
        frames: Also write each run's downlink as a .frames file

    Returns:
        ExperimentResult with records, summary table and slot curves
    """
    config_hash = cfg.config_hash()
    digests = cfg.file_digests()
    policies = list(policies) if policies else [cfg.policy_kind]
    records: List[RunRecord] = []
    for kind in policies:
        learners, load_error = None, None
        if kind in ("rl", "meta"):
            try:
                learners = load_learners(cfg, kind)
            except Exception as e:
                load_error = e
        for seed in cfg.seeds:
            try:
                if load_error is not None:
                    raise load_error
                record = _run_one(kind, cfg, seed, config_hash, learners)
                if kind == "optimal":
                    record.deviation_m = 0.0
                else:
                    reference = run_baseline("optimal", cfg.scenario, seed)
                    record.deviation_m = trajectory_deviation(record, reference)
            except Exception as e:
                record = _failed(kind, seed, config_hash, e)
            logger.info(f"{kind}/seed {seed}: {record.status} slots={record.slots} found={record.found}")
            records.append(record)
    result = ExperimentResult(config_hash, records, summarize(records), slot_curves(records))
    if exporter is not None:
        write_outputs(cfg, result, exporter, digests, frames)
    return result


def write_outputs(
    cfg: ExperimentConfig,
    result: ExperimentResult,
    exporter: DataExporter,
    digests: Dict[str, str],
    frames: bool = False,
) -> None:
    out = Path(cfg.out_dir)
    for record in result.records:
        stem = f"{record.policy}_seed{record.seed}"
        exporter.export_run_csv(record, out / f"{stem}.csv")
        if frames:
            exporter.export_frames(record, out / f"{stem}.frames")
    exporter.export_table_csv(result.curves, out / "curves.csv")
    exporter.export_json(
        _jsonable(
            {
                "config_hash": result.config_hash,
                "files": digests,
                "runs": [r.summary() for r in result.records],
                "policies": result.summary.to_dict("records"),
            }
        ),
        out / "summary.json",
    )
    logger.info(f"Wrote {len(result.records)} runs to {out}")


def train_rl_experiment(cfg: ExperimentConfig, exporter: Optional[DataExporter] = None) -> ExperimentResult:
    """
    Train theta online over cfg.episodes episodes and save the checkpoint and memory.

    Episode seeds derive from trainer.seed.
    """
    config_hash = cfg.config_hash()
    phi = read_checkpoint(cfg.checkpoint)[0] if cfg.checkpoint and Path(cfg.checkpoint).is_file() else None
    params = phi if phi is not None else PolicyParams.initialize(cfg.network, cfg.trainer.seed)
    env = SearchEnvironment(cfg.scenario)
    params, records, _ = train_episodes(
        env, params, cfg.trainer, cfg.trainer.seed, cfg.episodes, config_hash=config_hash
    )
    result = ExperimentResult(config_hash, records, summarize(records), slot_curves(records))
    if exporter is not None:
        out = Path(cfg.out_dir)
        checkpoint = Path(cfg.checkpoint) if cfg.checkpoint else out / "policy.ckpt"
        checkpoint.parent.mkdir(parents=True, exist_ok=True)
        checkpoint.write_bytes(params.to_bytes())
        memory_path = cfg.memory_out or out / "memory.json"
        exporter.export_memory(records, cfg.scenario.terrain, memory_path)
        training = pd.DataFrame(
            [
                (episode, r.seed, r.status, r.slots, r.found, r.mean_reward)
                for episode, r in enumerate(records, start=1)
            ],
            columns=["episode", "seed", "status", "slots", "found", "mean_reward_dbm"],
        )
        exporter.export_table_csv(training, out / "training.csv")
        write_outputs(cfg, result, exporter, cfg.file_digests(require_checkpoint=False))
        logger.info(f"Saved policy checkpoint to {checkpoint}")
    return result


def train_meta_experiment(
    cfg: ExperimentConfig, exporter: Optional[DataExporter] = None
) -> Tuple[PolicyParams, EncoderParams]:
    """
    Offline meta training on the prior memories; saves a meta checkpoint.

    Raises:
        ValueError: If the prior memories hold no usable task
    """
    tasks = MemoryCleaner(cfg.meta.tail_fraction).clean_files(cfg.prior_memories)
    if not tasks:
        raise ValueError("No successful prior runs found in the prior memories")
    phi = PolicyParams.initialize(cfg.network, cfg.meta.seed)
    psi = EncoderParams.for_policy(phi, cfg.meta.encoder_hidden, cfg.trainer.horizon, cfg.meta.seed)
    phi, psi = meta_pretrain(phi, psi, tasks, cfg.meta, cfg.trainer)
    if exporter is not None:
        out = Path(cfg.out_dir)
        checkpoint = Path(cfg.checkpoint) if cfg.checkpoint else out / "meta.ckpt"
        checkpoint.parent.mkdir(parents=True, exist_ok=True)
        checkpoint.write_bytes(save_meta_checkpoint(phi, psi))
        exporter.export_json(
            {
                "config_hash": cfg.config_hash(),
                "files": cfg.file_digests(require_checkpoint=False),
                "tasks": len(tasks),
                "sources": sorted({t.source for t in tasks}),
            },
            out / "meta_summary.json",
        )
        logger.info(f"Saved meta checkpoint to {checkpoint} ({len(tasks)} tasks)")
    return phi, psi


def replay(frames_path: str, scenario: ScenarioConfig) -> pd.DataFrame:
    """Decode a .frames capture into recovered signal power and view-circle radius per frame."""
    rows = []
    for message, seq in read_frames(frames_path):
        rows.append(
            (
                seq,
                message.rssi_dbm,
                message.snr_db,
                message.x_m,
                message.y_m,
                message.signal_power_dbm,
                view_circle_radius(message, scenario.radio, scenario.altitude_m),
            )
        )
    return pd.DataFrame(rows, columns=REPLAY_COLUMNS)
