"""Histogram panel figures from harness CSV outputs.

Reads the raw replicate CSV and the summary CSV written by the simulation
harness and renders, for each standardized statistic, one figure laid out as
a grid of histograms — rows are evaluation points, columns are sample
sizes — each with the limiting normal density N(0, sigma^2) overlaid as a
red curve.  Histograms are area-normalized, so bar areas sum to one and the
overlay is comparable.
"""

import csv
import math
import os
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import EmptyGroup, MissingColumn

RAW_COLUMNS = ("experiment", "point_id", "n", "statistic", "replicate", "value")
SUMMARY_COLUMNS = ("experiment", "point_id", "n", "statistic", "sigma2")


@dataclass(frozen=True)
class PanelSpec:
    """One render request: which CSV pair, which grid, where to write.

    points are raw point ids (grid rows); n_values are sample sizes (grid
    columns); statistics name the figures (one image per statistic).  bins
    is a numpy bin rule name or an explicit count; Freedman-Diaconis by
    default.
    """

    summary_csv: str
    raw_csv: str
    out_dir: str
    points: Tuple[int, ...]
    n_values: Tuple[int, ...]
    statistics: Tuple[str, ...]
    bins: Union[str, int] = "fd"
    dpi: int = 150


def _read_rows(path: str, required: Tuple[str, ...]):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise MissingColumn(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or ()
        for col in required:
            if col not in names:
                raise MissingColumn(f"{path} lacks required column {col!r}")
        return list(reader)


def _summary_groups(path: str) -> Dict[Tuple[str, int, int], float]:
    """(statistic, point, n) -> limit variance, for standardized statistics."""
    groups = {}
    for row in _read_rows(path, SUMMARY_COLUMNS):
        if row["sigma2"]:
            key = (row["statistic"], int(row["point_id"]), int(row["n"]))
            groups[key] = float(row["sigma2"])
    return groups


def _raw_values(path: str, statistics):
    """(experiment name, {(statistic, point, n) -> replicate values})."""
    wanted = set(statistics)
    buckets: Dict[Tuple[str, int, int], list] = {}
    experiment = ""
    for row in _read_rows(path, RAW_COLUMNS):
        if row["statistic"] in wanted:
            experiment = row["experiment"]
            key = (row["statistic"], int(row["point_id"]), int(row["n"]))
            buckets.setdefault(key, []).append(float(row["value"]))
    return experiment, {k: np.asarray(v) for k, v in buckets.items()}


def spec_from_csvs(summary_csv: str, raw_csv: str, out_dir: str,
                   bins: Union[str, int] = "fd", dpi: int = 150) -> PanelSpec:
    """Discover the panel grid recorded in the summary CSV: every statistic
    that carries a limit variance, over its point ids and sample sizes."""
    groups = _summary_groups(summary_csv)
    if not groups:
        raise EmptyGroup(f"{summary_csv} holds no standardized-statistic groups")
    statistics = tuple(dict.fromkeys(stat for stat, _, _ in groups))
    points = tuple(sorted({p for _, p, _ in groups}))
    n_values = tuple(sorted({n for _, _, n in groups}))
    return PanelSpec(summary_csv=summary_csv, raw_csv=raw_csv, out_dir=out_dir,
                     points=points, n_values=n_values, statistics=statistics,
                     bins=bins, dpi=dpi)


def histogram_density(values: np.ndarray, bins: Union[str, int] = "fd"):
    """Area-normalized histogram: (edges, densities) with sum(dens * widths) = 1."""
    edges = np.histogram_bin_edges(values, bins=bins)
    dens, _ = np.histogram(values, bins=edges, density=True)
    return edges, dens


def normal_density(xs: np.ndarray, sigma2: float) -> np.ndarray:
    return np.exp(-0.5 * xs * xs / sigma2) / math.sqrt(2.0 * math.pi * sigma2)


def render_panels(spec: PanelSpec) -> Tuple[str, ...]:
    """Render one PNG per statistic in the spec; returns the written paths.

    Raises EmptyGroup if any referenced (statistic, point, n) group is
    absent from either CSV, MissingColumn if a CSV lacks required columns.
    """
    sigmas = _summary_groups(spec.summary_csv)
    experiment, values = _raw_values(spec.raw_csv, spec.statistics)
    for stat in spec.statistics:
        for pid in spec.points:
            for n in spec.n_values:
                key = (stat, pid, n)
                if key not in sigmas:
                    raise EmptyGroup(f"summary has no variance for {key}")
                if key not in values or values[key].size == 0:
                    raise EmptyGroup(f"raw CSV has no replicates for {key}")

    os.makedirs(spec.out_dir, exist_ok=True)
    rows, cols = len(spec.points), len(spec.n_values)
    written = []
    for stat in spec.statistics:
        fig, axes = plt.subplots(rows, cols, squeeze=False,
                                 figsize=(3.0 * cols, 2.4 * rows))
        for i, pid in enumerate(spec.points):
            for j, n in enumerate(spec.n_values):
                ax = axes[i][j]
                vals = values[(stat, pid, n)]
                sigma2 = sigmas[(stat, pid, n)]
                edges, dens = histogram_density(vals, spec.bins)
                ax.bar(edges[:-1], dens, width=np.diff(edges), align="edge",
                       color="#9fb8d8", edgecolor="#5b7da8", linewidth=0.4)
                half = 4.0 * math.sqrt(sigma2)
                lo = min(edges[0], -half)
                hi = max(edges[-1], half)
                xs = np.linspace(lo, hi, 400)
                ax.plot(xs, normal_density(xs, sigma2), color="red", linewidth=1.4)
                if i == 0:
                    ax.set_title(f"n = {n}")
                if j == 0:
                    ax.set_ylabel(f"point {pid}")
        fig.suptitle(f"{experiment}: {stat} statistic")
        fig.tight_layout(rect=(0.0, 0.0, 1.0, 0.96))
        path = os.path.join(spec.out_dir, f"{experiment}_{stat}.png")
        fig.savefig(path, dpi=spec.dpi, metadata={"Software": "mkplots"})
        plt.close(fig)
        written.append(path)
    return tuple(written)
