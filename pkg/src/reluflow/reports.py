"""CSV/JSON/SVG serialization for every produced table and figure.

All writers format floats with %.17g (lossless round-trip) and emit keys in
sorted order, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import svg
from .dynamics import TrajectoryLog
from .envelope import SweepRow
from .harness import CellEntry, CellResult, GridResult, MetricSeries, RunSummary

__all__ = [
    "export",
    "write_cells_csv",
    "read_cells_csv",
    "write_runs_csv",
    "write_metrics_csv",
    "write_trajectory_csv",
    "write_sweep_csv",
    "trajectory_summary",
    "write_json",
    "write_manifest",
]


def _f(v: float) -> str:
    return f"{float(v):.17g}"


def write_json(obj, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def write_cells_csv(grid: GridResult, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d0", "d1", "n_runs", "p_converge", "avg_final_zeros"])
        for cell in grid.cells:
            w.writerow(
                [
                    cell.d0,
                    cell.d1,
                    len(cell.result.runs),
                    _f(cell.result.p_converge),
                    _f(cell.result.avg_final_zeros),
                ]
            )
    return path


def read_cells_csv(path: str | Path) -> list[dict]:
    """Inverse of :func:`write_cells_csv` (values typed, order preserved)."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                {
                    "d0": int(rec["d0"]),
                    "d1": int(rec["d1"]),
                    "n_runs": int(rec["n_runs"]),
                    "p_converge": float(rec["p_converge"]),
                    "avg_final_zeros": float(rec["avg_final_zeros"]),
                }
            )
    return rows


def write_runs_csv(grid: GridResult, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "d0",
                "d1",
                "run",
                "converged",
                "iterations",
                "final_loss",
                "final_zeros",
                "final_rel_residual",
                "min_rel_residual",
            ]
        )
        for cell in grid.cells:
            for ri, run in enumerate(cell.result.runs):
                w.writerow(
                    [
                        cell.d0,
                        cell.d1,
                        ri,
                        int(run.converged),
                        run.iterations,
                        _f(run.final_loss),
                        run.final_zeros,
                        _f(run.final_rel_residual),
                        _f(run.min_rel_residual),
                    ]
                )
    return path


def write_metrics_csv(series: MetricSeries, path: str | Path) -> Path:
    path = Path(path)
    with_diff = series.delta_diff is not None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["k", "loss", "zeros", "hamming", "delta_loss"]
        if with_diff:
            header.append("delta_diff")
        w.writerow(header)
        for i in range(len(series.k)):
            row = [
                int(series.k[i]),
                _f(series.loss[i]),
                int(series.zeros[i]),
                int(series.hamming[i]),
                _f(series.delta_loss[i]),
            ]
            if with_diff:
                row.append(_f(series.delta_diff[i]))
            w.writerow(row)
    return path


def write_trajectory_csv(log: TrajectoryLog, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "t", "loss", "theta_dist", "w_dist", "alpha0", "zeros"])
        for i in range(len(log.k)):
            w.writerow(
                [
                    int(log.k[i]),
                    _f(log.t[i]),
                    _f(log.loss[i]),
                    _f(log.theta_dist[i]),
                    _f(log.w_dist[i]),
                    _f(log.alpha0[i]),
                    int(log.zeros[i]),
                ]
            )
    return path


def trajectory_summary(log: TrajectoryLog) -> dict:
    return {
        "kind": log.kind,
        "step_size": log.step_size,
        "thinning": log.thinning,
        "iterations": int(log.k[-1]),
        "initial_loss": float(log.loss[0]),
        "final_loss": float(log.loss[-1]),
        "final_zeros": int(log.zeros[-1]),
        "final_theta_dist": float(log.theta_dist[-1]),
        "initial_alpha0": float(log.alpha0[0]),
        "final_alpha0": float(log.alpha0[-1]),
        "diverged": log.diverged,
    }


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "condition_value", "class", "sup_y", "t_blow"])
        for r in rows:
            w.writerow(
                [
                    _f(r.alpha),
                    _f(r.condition_value),
                    r.kind,
                    _f(r.sup_y) if r.sup_y is not None else "",
                    _f(r.t_blow) if r.t_blow is not None else "",
                ]
            )
    return path


def export(results, fmt: str, path: str | Path) -> list[Path]:
    """Serialize a result object to csv, json, or svg files.

    GridResult expands to cells/runs CSVs or convergence/zeros heatmaps;
    MetricSeries to a metrics CSV or a line-chart figure; sweep rows and
    trajectory logs to their tabular forms. Refuses empty inputs.
    """
    path = Path(path)
    if fmt not in ("csv", "json", "svg"):
        raise ValueError(f"unknown format {fmt!r}")

    if isinstance(results, GridResult):
        if not results.cells:
            raise ValueError("grid result holds no cells; nothing to export")
        if fmt == "csv":
            base = path.with_suffix("")
            return [
                write_cells_csv(results, base.parent / (base.name + "_cells.csv")),
                write_runs_csv(results, base.parent / (base.name + "_runs.csv")),
            ]
        if fmt == "json":
            payload = {
                "master_seed": results.master_seed,
                "cells": [
                    {
                        "d0": c.d0,
                        "d1": c.d1,
                        "p_converge": c.result.p_converge,
                        "avg_final_zeros": c.result.avg_final_zeros,
                    }
                    for c in results.cells
                ],
            }
            return [write_json(payload, path)]
        base = path.with_suffix("")
        spec = results.spec
        labels = ([str(v) for v in spec.d0_values], [str(v) for v in spec.d1_values])
        return [
            svg.heatmap(
                results.matrix("p_converge"),
                *labels,
                base.parent / (base.name + "_p_converge.svg"),
                title="Probability of convergence",
                row_name="d0",
                col_name="d1",
            ),
            svg.heatmap(
                results.matrix("avg_final_zeros"),
                *labels,
                base.parent / (base.name + "_zeros.svg"),
                title="Avg final preactivation zeros",
                row_name="d0",
                col_name="d1",
            ),
        ]

    if isinstance(results, MetricSeries):
        if len(results.k) == 0:
            raise ValueError("metric series is empty; nothing to export")
        if fmt == "csv":
            return [write_metrics_csv(results, path)]
        if fmt == "json":
            payload = {
                "k": [int(v) for v in results.k],
                "loss": [float(v) for v in results.loss],
                "zeros": [int(v) for v in results.zeros],
                "hamming": [int(v) for v in results.hamming],
                "delta_loss": [float(v) for v in results.delta_loss],
            }
            if results.delta_diff is not None:
                payload["delta_diff"] = [float(v) for v in results.delta_diff]
            return [write_json(payload, path)]
        series = {
            "loss": results.loss,
            "zeros": results.zeros.astype(float),
            "hamming": results.hamming.astype(float),
            "delta_loss": results.delta_loss,
        }
        if results.delta_diff is not None:
            series["delta_diff"] = results.delta_diff
        return [
            svg.line_chart(
                results.k.astype(float), series, path, title="Training metrics"
            )
        ]

    if isinstance(results, TrajectoryLog):
        if len(results.k) == 0:
            raise ValueError("trajectory log is empty; nothing to export")
        if fmt == "csv":
            return [write_trajectory_csv(results, path)]
        if fmt == "json":
            return [write_json(trajectory_summary(results), path)]
        return [
            svg.line_chart(
                results.t,
                {"loss": results.loss, "alpha0": results.alpha0},
                path,
                title="Trajectory",
            )
        ]

    if isinstance(results, list) and results and isinstance(results[0], SweepRow):
        if fmt == "csv":
            return [write_sweep_csv(results, path)]
        if fmt == "json":
            payload = [
                {
                    "alpha": r.alpha,
                    "condition_value": r.condition_value,
                    "class": r.kind,
                    "sup_y": r.sup_y,
                    "t_blow": r.t_blow,
                }
                for r in results
            ]
            return [write_json(payload, path)]
        raise ValueError("sweep rows render to svg via the ode-sweep command")

    if isinstance(results, list) and not results:
        raise ValueError("empty result list; nothing to export")
    raise TypeError(f"don't know how to export {type(results).__name__}")


def write_manifest(output_dir: str | Path, config: dict) -> Path:
    """Write manifest.json: config echo, artifact version, per-file checksums."""
    from . import __version__

    output_dir = Path(output_dir)
    checksums = {}
    for p in sorted(output_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            checksums[str(p.relative_to(output_dir))] = hashlib.sha256(
                p.read_bytes()
            ).hexdigest()
    return write_json(
        {"config": config, "version": __version__, "files": checksums},
        output_dir / "manifest.json",
    )
