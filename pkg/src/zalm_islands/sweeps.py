"""Deterministic parameter sweeps and the seven canonical figure tables.

Each preset fixes everything except one axis and one series parameter and
evaluates the same scalar functions the metrics command uses, point by
point, in a fixed order (series outer, axis inner).  Output is RFC-4180 CSV
with 17-significant-digit floats plus a JSON sidecar recording the axis
grid, series, and fixed parameters; bytes are identical across reruns.

The canonical tables:

    4   true-herald probability vs gain, one curve per island count
        (2, 4, ..., 16), lossless detectors, same-island accounting
    5   measurement-stage Bell fraction vs gain, curves eta_t = 1 .. 0.5
    6   delivered fidelity vs log10(eta_r) at gain 0.01, curves eta_t
    7   delivered fidelity vs gain at eta_r = 0.01, curves eta_t
    8   delivered Bell fraction vs gain at eta_r = 0.01, curves eta_t
    9   delivered Bell fraction vs log10(eta_r) at gain 0.01, curves eta_t
    10  delivered fidelity and purity vs gain at eta_t = 0.9, eta_r = 0.01
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from . import __version__
from .analytics import (
    bell_diagonal_state,
    bsm_bell_fraction,
    build_gaussian_blocks,
    herald_prob_island,
    metric_bundle,
    prop_bell_probs,
    prop_bell_total,
    prop_loadable_prob,
    purity,
    true_herald_prob,
)
from .model import BellClass, HeraldMode, MetricBundle, SourceParams

__all__ = [
    "SweepSpec",
    "FigureTable",
    "FIGURE_IDS",
    "figure_table",
    "custom_table",
    "write_table",
    "write_all_figures",
    "figure_csv_name",
]

FIGURE_IDS = (4, 5, 6, 7, 8, 9, 10)

_ETA_T_SERIES = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
_ISLAND_SERIES = tuple(range(2, 17, 2))

_SWEEP_VARIABLES = ("gain_minus_one", "eta_t", "eta_r")


def _grid(lo: float, hi: float, steps: int) -> tuple[float, ...]:
    """Inclusive linear grid; endpoints exact, interior correctly rounded."""
    if steps < 2:
        raise ValueError("a sweep axis needs at least 2 steps")
    if not lo < hi:
        raise ValueError("sweep axis must have min < max")
    span = hi - lo
    return tuple(lo + span * i / (steps - 1) for i in range(steps))


@dataclass(frozen=True)
class SweepSpec:
    """A custom one-variable sweep around a base configuration.

    ``log_axis`` spaces the points geometrically between ``minimum`` and
    ``maximum`` (both must then be positive).  Columns are the swept
    variable followed by every metric-bundle field.
    """

    variable: str
    minimum: float
    maximum: float
    steps: int
    log_axis: bool = False

    def __post_init__(self) -> None:
        if self.variable not in _SWEEP_VARIABLES:
            raise ValueError(
                f"sweep variable must be one of {_SWEEP_VARIABLES}, got {self.variable!r}"
            )
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if not self.minimum < self.maximum:
            raise ValueError("minimum must be < maximum")
        if self.log_axis and self.minimum <= 0.0:
            raise ValueError("log-spaced sweeps need a positive minimum")

    def values(self) -> tuple[float, ...]:
        if not self.log_axis:
            return _grid(self.minimum, self.maximum, self.steps)
        from math import log10

        return tuple(10.0**x for x in _grid(log10(self.minimum), log10(self.maximum), self.steps))


@dataclass(frozen=True)
class FigureTable:
    """Materialized sweep output: header, rows, and sidecar metadata."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    metadata: dict


def _delivered_fidelity(gain_minus_one: float, eta_t: float, eta_r: float) -> float:
    blocks = build_gaussian_blocks(gain_minus_one, eta_t, eta_r)
    s, e = prop_bell_probs(blocks, eta_r)
    return s / (s + 3.0 * e)


def _delivered_fraction(gain_minus_one: float, eta_t: float, eta_r: float) -> float:
    blocks = build_gaussian_blocks(gain_minus_one, eta_t, eta_r)
    return prop_bell_total(blocks, eta_r) / prop_loadable_prob(blocks, eta_r)


def _figure4() -> FigureTable:
    grid = _grid(0.0, 1.0, 201)
    rows = []
    for n in _ISLAND_SERIES:
        for g in grid:
            p = herald_prob_island(g, 1.0)
            rows.append((g, n, true_herald_prob(p, n, HeraldMode.SAME_ISLAND)))
    return FigureTable(
        columns=("g_minus_1", "n_islands", "p_true"),
        rows=tuple(rows),
        metadata=_metadata(
            4,
            axis={"variable": "g_minus_1", "min": 0.0, "max": 1.0, "steps": 201, "scale": "linear"},
            series={"name": "n_islands", "values": list(_ISLAND_SERIES)},
            fixed={"eta_t": 1.0, "herald_mode": "same-island"},
        ),
    )


def _figure5() -> FigureTable:
    grid = _grid(0.0, 0.5, 201)
    rows = []
    for eta_t in _ETA_T_SERIES:
        for g in grid:
            n_s = build_gaussian_blocks(g, eta_t, 1.0).n_s
            rows.append((g, eta_t, bsm_bell_fraction(n_s)))
    return FigureTable(
        columns=("g_minus_1", "eta_t", "fraction"),
        rows=tuple(rows),
        metadata=_metadata(
            5,
            axis={"variable": "g_minus_1", "min": 0.0, "max": 0.5, "steps": 201, "scale": "linear"},
            series={"name": "eta_t", "values": list(_ETA_T_SERIES)},
            fixed={"stage": "measurement", "eta_r": 1.0},
        ),
    )


def _figure6() -> FigureTable:
    grid = _grid(-3.0, 0.0, 151)
    rows = []
    for eta_t in _ETA_T_SERIES:
        for x in grid:
            rows.append((x, eta_t, _delivered_fidelity(0.01, eta_t, 10.0**x)))
    return FigureTable(
        columns=("log10_eta_r", "eta_t", "fidelity"),
        rows=tuple(rows),
        metadata=_metadata(
            6,
            axis={"variable": "log10_eta_r", "min": -3.0, "max": 0.0, "steps": 151, "scale": "linear-in-log10"},
            series={"name": "eta_t", "values": list(_ETA_T_SERIES)},
            fixed={"g_minus_1": 0.01},
        ),
    )


def _figure7() -> FigureTable:
    grid = _grid(0.0, 0.05, 201)
    rows = []
    for eta_t in _ETA_T_SERIES:
        for g in grid:
            rows.append((g, eta_t, _delivered_fidelity(g, eta_t, 0.01)))
    return FigureTable(
        columns=("g_minus_1", "eta_t", "fidelity"),
        rows=tuple(rows),
        metadata=_metadata(
            7,
            axis={"variable": "g_minus_1", "min": 0.0, "max": 0.05, "steps": 201, "scale": "linear"},
            series={"name": "eta_t", "values": list(_ETA_T_SERIES)},
            fixed={"eta_r": 0.01},
        ),
    )


def _figure8() -> FigureTable:
    grid = _grid(0.0, 0.1, 201)
    rows = []
    for eta_t in _ETA_T_SERIES:
        for g in grid:
            rows.append((g, eta_t, _delivered_fraction(g, eta_t, 0.01)))
    return FigureTable(
        columns=("g_minus_1", "eta_t", "fraction"),
        rows=tuple(rows),
        metadata=_metadata(
            8,
            axis={"variable": "g_minus_1", "min": 0.0, "max": 0.1, "steps": 201, "scale": "linear"},
            series={"name": "eta_t", "values": list(_ETA_T_SERIES)},
            fixed={"eta_r": 0.01},
        ),
    )


def _figure9() -> FigureTable:
    grid = _grid(-3.0, 0.0, 151)
    rows = []
    for eta_t in _ETA_T_SERIES:
        for x in grid:
            rows.append((x, eta_t, _delivered_fraction(0.01, eta_t, 10.0**x)))
    return FigureTable(
        columns=("log10_eta_r", "eta_t", "fraction"),
        rows=tuple(rows),
        metadata=_metadata(
            9,
            axis={"variable": "log10_eta_r", "min": -3.0, "max": 0.0, "steps": 151, "scale": "linear-in-log10"},
            series={"name": "eta_t", "values": list(_ETA_T_SERIES)},
            fixed={"g_minus_1": 0.01},
        ),
    )


def _figure10() -> FigureTable:
    grid = _grid(0.0, 0.05, 201)
    rows = []
    for g in grid:
        blocks = build_gaussian_blocks(g, 0.9, 0.01)
        s, e = prop_bell_probs(blocks, 0.01)
        fid = s / (s + 3.0 * e)
        pur = purity(bell_diagonal_state(s, e, BellClass.PSI_MINUS))
        rows.append((g, fid, pur))
    return FigureTable(
        columns=("g_minus_1", "fidelity", "purity"),
        rows=tuple(rows),
        metadata=_metadata(
            10,
            axis={"variable": "g_minus_1", "min": 0.0, "max": 0.05, "steps": 201, "scale": "linear"},
            series={"name": "metric", "values": ["fidelity", "purity"]},
            fixed={"eta_t": 0.9, "eta_r": 0.01},
        ),
    )


_FIGURE_BUILDERS: dict[int, Callable[[], FigureTable]] = {
    4: _figure4,
    5: _figure5,
    6: _figure6,
    7: _figure7,
    8: _figure8,
    9: _figure9,
    10: _figure10,
}


def _metadata(figure_id: int | None, axis: dict, series: dict | None, fixed: dict) -> dict:
    return {
        "generator": f"zalm-islands {__version__}",
        "figure_id": figure_id,
        "axis": axis,
        "series": series,
        "fixed": fixed,
    }


def figure_table(figure_id: int) -> FigureTable:
    """Materialize one canonical figure table."""
    try:
        return _FIGURE_BUILDERS[figure_id]()
    except KeyError:
        raise ValueError(f"unknown figure id {figure_id}; known ids: {FIGURE_IDS}") from None


def custom_table(spec: SweepSpec, base: SourceParams) -> FigureTable:
    """Sweep one variable of ``base``, emitting every metric-bundle field."""
    rows = []
    for v in spec.values():
        params = replace(base, **{spec.variable: v})
        bundle = metric_bundle(params)
        rows.append((v, *(getattr(bundle, name) for name in MetricBundle.FIELDS)))
    fixed = {
        name: getattr(base, name)
        for name in ("gain_minus_one", "eta_t", "eta_r", "n_islands", "pump_rate")
        if name != spec.variable
    }
    fixed["herald_mode"] = base.herald_mode.value
    return FigureTable(
        columns=(spec.variable, *MetricBundle.FIELDS),
        rows=tuple(rows),
        metadata=_metadata(
            None,
            axis={
                "variable": spec.variable,
                "min": spec.minimum,
                "max": spec.maximum,
                "steps": spec.steps,
                "scale": "log" if spec.log_axis else "linear",
            },
            series=None,
            fixed=fixed,
        ),
    )


def _format_cell(value) -> str:
    if isinstance(value, bool):
        raise TypeError("boolean cells are not part of any table schema")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_table(table: FigureTable, path: str | Path) -> Path:
    """Write a table as RFC-4180 CSV plus a ``<path>.meta.json`` sidecar."""
    out = Path(path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format_cell(v) for v in row])
    sidecar = out.with_name(out.name + ".meta.json")
    with open(sidecar, "w", encoding="utf-8") as handle:
        json.dump(table.metadata, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return out


def figure_csv_name(figure_id: int) -> str:
    return f"figure{figure_id}.csv"


def write_all_figures(outdir: str | Path) -> tuple[Path, ...]:
    """Write all seven canonical tables into ``outdir``."""
    directory = Path(outdir)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for figure_id in FIGURE_IDS:
        table = figure_table(figure_id)
        paths.append(write_table(table, directory / figure_csv_name(figure_id)))
    return tuple(paths)
