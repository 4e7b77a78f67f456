"""Result serialization: raw/summary CSVs plus a JSON sidecar.

CSV cells follow one rule everywhere: floats are written with repr() (the
shortest round-tripping form, so reruns are byte-identical), integers
plainly, absent fields as empty strings.  Wall time and other run metadata
live only in the JSON sidecar, never in the CSVs.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from ..errors import IoError
from .experiments import RAW_HEADER, SUMMARY_HEADER, ExperimentResult

RAW_NAME = "raw.csv"
SUMMARY_NAME = "summary.csv"
SIDECAR_NAME = "run.json"


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    raise TypeError(f"unexpected cell type {type(v)!r}")


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_results(res: ExperimentResult, out_dir: str) -> None:
    """Write raw.csv, summary.csv, and run.json under out_dir.

    Raises:
        IoError: out_dir cannot be created (missing parent) or written.
    """
    parent = os.path.dirname(os.path.abspath(out_dir))
    if not os.path.isdir(parent):
        raise IoError(f"parent directory does not exist: {parent}")
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, RAW_NAME), RAW_HEADER, res.raw_rows)
        _write_csv(os.path.join(out_dir, SUMMARY_NAME), SUMMARY_HEADER, res.summary_rows)
        with open(os.path.join(out_dir, SIDECAR_NAME), "w", encoding="utf-8") as fh:
            json.dump(res.sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write results under {out_dir}: {exc}") from exc


def read_csv_rows(path: str):
    """Read one of our CSVs back as (header tuple, list of row tuples)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            return header, [tuple(row) for row in reader]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
