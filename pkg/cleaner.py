"""
AI-driven development file
Purpose: Turn prior experience-memory files into the meta-train task set
Module: UAV_LoRa_SAR_Lab/cleaner.py
Dependencies: json, train_rl, train_meta
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from train_meta import Task
from train_rl import MemorySample

logger = logging.getLogger(__name__)


class MemoryCleaner:
    """
    Filter prior SAR runs down to the experience worth meta-training on.

    Only successful runs are kept, and from each only the samples starting in
    the last `tail_fraction` of its slots, where the UAV was closing in.
    Success is the run's `success` flag: the received power crossed the
    target. The ground-truth `found` flag is never consulted.
    """

    def __init__(self, tail_fraction: float = 0.25) -> None:
        if not 0 < tail_fraction <= 1:
            raise ValueError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
        self.tail_fraction = tail_fraction

    def load(self, path: Union[str, Path]) -> Dict[str, Any]:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict) or "runs" not in data:
            raise ValueError(f"{path} is not an experience memory file")
        return data

    def clean(self, memory: Dict[str, Any]) -> List[Task]:
        """
        Convert one loaded memory file into tasks.

        Args:
            memory: Parsed memory JSON (see DataExporter.export_memory)

        Returns:
            Tasks from the tail of every successful run
        """
        tasks = []
        for run in memory.get("runs", []):
            tasks.extend(self._normalize_run(run))
        return tasks

    def clean_files(self, paths: Iterable[Union[str, Path]]) -> List[Task]:
        tasks = []
        for path in paths:
            found = self.clean(self.load(path))
            logger.info(f"{path}: kept {len(found)} tasks")
            tasks.extend(found)
        return tasks

    def _normalize_run(self, run: Dict[str, Any]) -> List[Task]:
        if not run.get("success"):
            return []
        slots = int(run.get("slots", 0))
        first = self._tail_start(slots)
        source = str(run.get("source", "unknown"))
        tasks = []
        for data in run.get("samples", []):
            sample = self._sample(data)
            if sample is None or sample.trajectory.start_slot < first:
                continue
            tasks.append(Task(sample, source))
        return tasks

    def _tail_start(self, slots: int) -> int:
        return slots - int(math.ceil(self.tail_fraction * slots))

    def _sample(self, data: Dict[str, Any]) -> Optional[MemorySample]:
        try:
            sample = MemorySample.from_dict(data)
        except (KeyError, TypeError, ValueError) as e:
            logger.warning(f"Dropped malformed memory sample: {e}")
            return None
        return sample if len(sample.trajectory) else None
