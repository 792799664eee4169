"""
CSV output: a plain header row and numbers with 12 significant digits so
reruns are byte-identical. Run metadata goes to a JSON sidecar next to the
CSV (sweep.csv -> sweep.meta.json) so the CSV itself stays readable by any
CSV reader.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

EVENT_LOG_COLUMNS: List[str] = [
    "job_id",
    "arrival_t",
    "test_done_t",
    "server",
    "service_start_t",
    "depart_t",
    "size",
    "prediction",
]


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return "" if value is None else str(value)


def metadata_path(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])

    if metadata:
        with open(metadata_path(path), "w", encoding="utf-8") as f:
            json.dump({key: format_value(value) for key, value in metadata.items()}, f, indent=2)
            f.write("\n")
    return path


def read_csv(path: Path) -> tuple[Dict[str, str], List[Dict[str, str]]]:
    """Metadata (empty without a sidecar) and rows of a file written by write_csv."""
    metadata: Dict[str, str] = {}
    sidecar = metadata_path(path)
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as f:
            metadata = json.load(f)
    with open(path, "r", encoding="utf-8", newline="") as f:
        return metadata, list(csv.DictReader(f))


def write_event_log(
    path: Path,
    arrivals: np.ndarray,
    test_done: np.ndarray,
    servers: np.ndarray,
    start: np.ndarray,
    depart: np.ndarray,
    sizes: np.ndarray,
    predicted_short: np.ndarray,
    x_m: float,
    x_M: float,
) -> Path:
    predictions = np.where(predicted_short, x_m, x_M)
    rows = zip(range(len(arrivals)), arrivals, test_done, servers + 1, start, depart, sizes, predictions)
    return write_csv(path, EVENT_LOG_COLUMNS, rows)
