#!/usr/bin/env python3
"""
AI-driven development file
Purpose: Main entry point for the UAV LoRa search-and-rescue simulation lab CLI
Module: UAV_LoRa_SAR_Lab/main.py
Dependencies: click, python-dotenv, config, harness, export
"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence, Tuple

import click
from dotenv import load_dotenv

from config import (
    DEFAULT_OUT_DIR,
    LOG_LEVEL_ENV,
    OUT_DIR_ENV,
    POLICY_KINDS,
    ConfigError,
    ExperimentConfig,
    load_config,
    parse_seeds,
)
from export import DataExporter
from harness import ExperimentResult, replay, run_experiment, train_meta_experiment, train_rl_experiment
from records import STATUS_FAILED
from telemetry import FrameError
from world import ScenarioError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED_RUNS = 2


def configure_logging() -> None:
    level = os.getenv(LOG_LEVEL_ENV, "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def build_config(
    config_path: Optional[str],
    policy: Optional[str] = None,
    seeds: Optional[str] = None,
    out: Optional[str] = None,
    checkpoint: Optional[str] = None,
    **extra,
) -> ExperimentConfig:
    """Load the YAML config (or defaults) and apply command-line overrides."""
    cfg = load_config(config_path) if config_path else ExperimentConfig(
        out_dir=os.getenv(OUT_DIR_ENV, DEFAULT_OUT_DIR)
    )
    return cfg.with_overrides(
        policy_kind=policy,
        seeds=parse_seeds(seeds) if seeds is not None else None,
        out_dir=out,
        checkpoint=checkpoint,
        **extra,
    )


def report(result: ExperimentResult, out_dir: str) -> int:
    if result.summary.empty:
        click.echo("No runs executed")
    else:
        click.echo(result.summary.to_string(index=False))
    failed = [r for r in result.records if r.status == STATUS_FAILED]
    for record in failed:
        click.echo(f"FAILED {record.policy}/seed {record.seed}: {record.error}", err=True)
    click.echo(f"Outputs written to {out_dir} (config hash {result.config_hash})")
    return EXIT_FAILED_RUNS if failed else EXIT_OK


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                             help="YAML experiment config")
policy_option = click.option("--policy", type=click.Choice(POLICY_KINDS), help="Policy to run")
seeds_option = click.option("--seeds", help="Seed range a..b (inclusive)")
out_option = click.option("--out", help="Output directory")
checkpoint_option = click.option("--checkpoint", help="Policy or meta checkpoint path")


@click.group()
def cli() -> None:
    """Simulation lab for a UAV-mounted LoRa gateway searching for a lost person's beacon."""


@cli.command()
@config_option
@policy_option
@seeds_option
@out_option
@checkpoint_option
def simulate(config_path, policy, seeds, out, checkpoint) -> int:
    """Run a policy over the seeds and record CSVs and .frames downlink captures."""
    cfg = build_config(config_path, policy, seeds, out, checkpoint)
    result = run_experiment(cfg, exporter=DataExporter(), frames=True)
    return report(result, cfg.out_dir)


@cli.command(name="train-rl")
@config_option
@out_option
@checkpoint_option
@click.option("--episodes", type=int, help="Number of training episodes")
def train_rl(config_path, out, checkpoint, episodes) -> int:
    """Train the deep RL policy online and save its checkpoint and experience memory."""
    cfg = build_config(config_path, out=out, checkpoint=checkpoint, episodes=episodes)
    click.echo(f"Training RL for {cfg.episodes} episodes on {cfg.scenario.terrain} terrain...")
    result = train_rl_experiment(cfg, DataExporter())
    return report(result, cfg.out_dir)


@cli.command(name="train-meta")
@config_option
@out_option
@checkpoint_option
@click.option("--prior", "priors", multiple=True, help="Prior experience memory file (repeatable)")
def train_meta(config_path, out, checkpoint, priors) -> int:
    """Meta-train the policy and task encoder on prior experience memories."""
    cfg = build_config(config_path, out=out, checkpoint=checkpoint,
                       prior_memories=tuple(priors) if priors else None)
    cfg.file_digests(require_checkpoint=False)
    click.echo(f"Meta training on {len(cfg.prior_memories)} memory files...")
    try:
        train_meta_experiment(cfg, DataExporter())
    except ValueError as e:
        raise click.ClickException(str(e)) from e
    click.echo(f"Meta checkpoint written under {cfg.checkpoint or cfg.out_dir}")
    return EXIT_OK


@cli.command(name="eval")
@config_option
@policy_option
@seeds_option
@out_option
@checkpoint_option
def evaluate(config_path, policy, seeds, out, checkpoint) -> int:
    """Evaluate one policy over the seeds and write per-run CSVs and a summary."""
    cfg = build_config(config_path, policy, seeds, out, checkpoint)
    result = run_experiment(cfg, exporter=DataExporter())
    return report(result, cfg.out_dir)


@cli.command()
@config_option
@click.option("--policy", "policies", type=click.Choice(POLICY_KINDS), multiple=True,
              help="Policies to compare (repeatable); defaults to optimal, greedy and the config's policy")
@seeds_option
@out_option
@checkpoint_option
def compare(config_path, policies: Tuple[str, ...], seeds, out, checkpoint) -> int:
    """Run several policies on the same seeds and tabulate them side by side."""
    cfg = build_config(config_path, None, seeds, out, checkpoint)
    if not policies:
        policies = tuple(dict.fromkeys(("optimal", "greedy", cfg.policy_kind)))
    result = run_experiment(cfg, policies=policies, exporter=DataExporter())
    return report(result, cfg.out_dir)


@cli.command(name="replay")
@click.argument("frames", type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option("--out", "output_csv", help="CSV file to write (defaults next to the frames file)")
def replay_frames(frames, config_path, output_csv) -> int:
    """Decode a .frames capture into recovered power and view-circle radius per frame."""
    cfg = build_config(config_path)
    try:
        table = replay(frames, cfg.scenario)
    except FrameError as e:
        raise click.ClickException(f"{frames}: {e}") from e
    target = Path(output_csv) if output_csv else Path(frames).with_suffix(".replay.csv")
    DataExporter().export_table_csv(table, target)
    click.echo(f"Decoded {len(table)} frames to {target}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the CLI and map outcomes to exit codes.

    Returns:
        0 on success, 2 if any run FAILED, 1 on usage or configuration errors
    """
    load_dotenv()
    configure_logging()
    try:
        code = cli.main(args=list(argv) if argv is not None else None, prog_name="sarlab", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except (ConfigError, ScenarioError) as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_USAGE
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
