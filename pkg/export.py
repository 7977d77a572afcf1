"""
AI-driven development file
Purpose: Export run records, summaries, plot curves, experience memories and downlink frames
Module: UAV_LoRa_SAR_Lab/export.py
Dependencies: json, pandas, records, telemetry
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd

from records import CSV_COLUMNS, RunRecord
from telemetry import write_frames

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"
MEMORY_FORMAT_VERSION = 1

PathLike = Union[str, Path]


def _prepare(output_path: PathLike) -> Path:
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


class DataExporter:
    """
    Export experiment outputs to CSV, JSON and .frames files.

    Every writer is deterministic: same inputs give byte-identical files.
    """

    def export_json(self, data: Any, output_path: PathLike) -> None:
        """
        Export data to a JSON file with sorted keys.

        Args:
            data: JSON-serializable object
            output_path: Path to save the JSON file
        """
        path = _prepare(output_path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")

    def export_run_csv(self, record: RunRecord, output_path: PathLike) -> None:
        """
        Export a run's per-slot rows with the fixed column order.

        Args:
            record: The run to export
            output_path: Path to save the CSV file
        """
        df = pd.DataFrame([row.as_list() for row in record.rows], columns=CSV_COLUMNS)
        df.to_csv(_prepare(output_path), index=False, float_format=FLOAT_FORMAT, encoding="utf-8")

    def export_table_csv(self, table: pd.DataFrame, output_path: PathLike) -> None:
        table.to_csv(_prepare(output_path), index=False, float_format=FLOAT_FORMAT, encoding="utf-8")

    def export_frames(self, record: RunRecord, output_path: PathLike) -> int:
        """Write the run's gateway messages as a .frames downlink capture."""
        return write_frames(_prepare(output_path), record.messages)

    def export_memory(self, records: Sequence[RunRecord], source: str, output_path: PathLike) -> None:
        """
        Export experience samples with run metadata for later meta training.

        Args:
            records: Runs whose samples to keep
            source: Environment tag, e.g. the terrain name
            output_path: Path to save the memory JSON file
        """
        runs: List[Dict[str, Any]] = [
            {
                "source": source,
                "seed": record.seed,
                "policy": record.policy,
                "success": record.reached_target,
                "found": record.found,
                "slots": record.slots,
                "samples": [sample.to_dict() for sample in record.samples],
            }
            for record in records
        ]
        self.export_json({"version": MEMORY_FORMAT_VERSION, "runs": runs}, output_path)
        logger.info(f"Exported {len(runs)} runs of experience to {output_path}")
