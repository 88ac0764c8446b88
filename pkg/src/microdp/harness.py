"""Experiment harness: single releases and parameter sweeps.

A sweep walks the Cartesian grid of (method, k, epsilon, attribute
subset), repeats every cell `runs` times with seeds derived by hashing
the cell coordinates into the master seed, and writes one aggregate CSV
row per cell plus a JSON sidecar with per-run raw values. Hash-derived
seeds make reruns byte-identical and keep cells independent, so they
could run in any order or in parallel without changing output.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, load_dataset, load_schema, write_dataset
from .mechanisms import (
    MechanismConfig,
    PrivacyBudget,
    ir_dp_release,
    ir_only_release,
    mv_dp_release,
    mv_only_release,
    noise_scale,
    plain_laplace_release,
)
from .metrics import MetricConfig, UtilityReport, jsd, relative_error, variance_delta

SWEEP_HEADER = ("method", "k", "epsilon", "m", "re_mean", "jsd_mean", "run_count")


def execute_release(cfg: MechanismConfig, data: Dataset) -> Dataset:
    """Run one mechanism on an in-memory dataset."""
    if cfg.method == "ir-dp":
        return ir_dp_release(data, cfg.k, cfg.budget, cfg.seed, cfg.clamp)
    if cfg.method == "plain-laplace":
        return plain_laplace_release(data, cfg.budget, cfg.seed, cfg.clamp)
    if cfg.method == "mv-dp":
        return mv_dp_release(data, cfg.k, cfg.budget, cfg.seed, cfg.clamp)
    if cfg.method == "ir-only":
        return ir_only_release(data, cfg.k)
    if cfg.method == "mv-only":
        return mv_only_release(data, cfg.k)
    raise ValueError(f"unknown method {cfg.method!r}")


def _params_record(cfg: MechanismConfig, data: Dataset) -> dict:
    attrs = []
    for attr in data.schema:
        entry: dict[str, object] = {"name": attr.name, "kind": attr.kind}
        if attr.kind == "numeric":
            entry["lower"] = attr.lower
            entry["upper"] = attr.upper
            entry["delta"] = attr.sensitivity
            if cfg.method in ("ir-dp", "plain-laplace", "mv-dp"):
                entry["noise_scale"] = noise_scale(
                    cfg.method, delta=attr.sensitivity, budget=cfg.budget,
                    k=cfg.effective_k, n=data.n,
                )
            else:
                entry["noise_scale"] = 0.0
        else:
            entry["taxonomy"] = attr.taxonomy_ref
            entry["delta"] = attr.sensitivity
        attrs.append(entry)
    return {
        "method": cfg.method,
        "k": cfg.k,
        "effective_k": cfg.effective_k,
        "epsilon_total": cfg.budget.epsilon_total,
        "m": cfg.budget.m,
        "epsilon_per_attribute": cfg.budget.epsilon_per_attribute,
        "seed": cfg.seed,
        "clamp": cfg.clamp,
        "n": data.n,
        "attributes": attrs,
    }


def measure(cfg: MechanismConfig, original: Dataset, released: Dataset,
            metric_cfg: MetricConfig = MetricConfig()) -> UtilityReport:
    re_attr, re_all = relative_error(original, released, metric_cfg)
    jsd_attr, jsd_all = jsd(original, released, metric_cfg)
    return UtilityReport(
        re_per_attribute=re_attr,
        re_dataset=re_all,
        jsd_per_attribute=jsd_attr,
        jsd_dataset=jsd_all,
        variance_delta_per_attribute=variance_delta(original, released),
        params=_params_record(cfg, original),
    )


def run_release(
    cfg: MechanismConfig,
    data: Dataset,
    out_path: str | Path,
    metric_cfg: MetricConfig = MetricConfig(),
) -> tuple[Path, UtilityReport]:
    """Release a dataset to `out_path` and write a metrics report beside it."""
    released = execute_release(cfg, data)
    report = measure(cfg, data, released, metric_cfg)
    out_path = Path(out_path)
    write_dataset(released, out_path)
    report_path = out_path.with_name(out_path.name + ".report.json")
    report_path.write_text(json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    return out_path, report


@dataclass(frozen=True)
class SweepSpec:
    """Grid description for `run_sweep`."""

    data_path: str
    schema_path: str
    methods: tuple[str, ...]
    k_values: tuple[int, ...]
    epsilon_values: tuple[float, ...]
    runs: int = 10
    master_seed: int = 0
    attribute_subsets: tuple[tuple[str, ...], ...] | None = None
    clamp: bool = True
    out_path: str = "sweep.csv"

    def __post_init__(self) -> None:
        if not self.methods:
            raise ValueError("sweep needs at least one method")
        if not self.k_values:
            raise ValueError("sweep needs at least one k")
        if not self.epsilon_values:
            raise ValueError("sweep needs at least one epsilon")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")


def cell_seed(master_seed: int, method: str, k: int, epsilon: float,
              subset: Sequence[str], run_index: int) -> int:
    """Stable 64-bit seed for one run of one grid cell."""
    key = f"{master_seed}|{method}|{k}|{epsilon!r}|{','.join(subset)}|{run_index}"
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")


@dataclass
class CellResult:
    method: str
    k: int
    epsilon: float
    subset: tuple[str, ...]
    status: str
    error: str | None = None
    runs: list = field(default_factory=list)
    re_mean: float | None = None
    jsd_mean: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "epsilon": self.epsilon,
            "attributes": list(self.subset),
            "m": len(self.subset),
            "status": self.status,
            "error": self.error,
            "re_mean": self.re_mean,
            "jsd_mean": self.jsd_mean,
            "runs": self.runs,
        }


def run_sweep(spec: SweepSpec) -> list[CellResult]:
    """Execute the full grid, tolerating per-cell failures.

    Every grid cell lands in the output exactly once: as an aggregate row
    in the CSV (empty means and run_count 0 when the cell failed) and as
    a full entry with per-run raw values in `<out>.runs.json`.
    """
    schema = load_schema(spec.schema_path)
    full_data = load_dataset(spec.data_path, schema)
    subsets = spec.attribute_subsets or (full_data.schema.names,)
    results: list[CellResult] = []
    for method in spec.methods:
        for k in spec.k_values:
            for epsilon in spec.epsilon_values:
                for subset in subsets:
                    results.append(
                        _run_cell(spec, full_data, method, k, epsilon, tuple(subset))
                    )
    _write_sweep_csv(spec, results)
    _write_sweep_sidecar(spec, results)
    return results


def _run_cell(spec: SweepSpec, full_data: Dataset, method: str, k: int,
              epsilon: float, subset: tuple[str, ...]) -> CellResult:
    cell = CellResult(method=method, k=k, epsilon=epsilon, subset=subset, status="ok")
    try:
        data = full_data.subset(subset)
        budget = PrivacyBudget(epsilon_total=epsilon, m=len(subset))
        metric_cfg = MetricConfig()
        re_values = []
        jsd_values = []
        for run_index in range(spec.runs):
            seed = cell_seed(spec.master_seed, method, k, epsilon, subset, run_index)
            cfg = MechanismConfig(method=method, k=k, budget=budget, seed=seed, clamp=spec.clamp)
            released = execute_release(cfg, data)
            report = measure(cfg, data, released, metric_cfg)
            re_values.append(report.re_dataset)
            jsd_values.append(report.jsd_dataset)
            cell.runs.append({
                "run": run_index,
                "seed": seed,
                "re": report.re_dataset,
                "jsd": report.jsd_dataset,
                "re_per_attribute": dict(report.re_per_attribute),
                "jsd_per_attribute": dict(report.jsd_per_attribute),
                "variance_delta_per_attribute": dict(report.variance_delta_per_attribute),
            })
        cell.re_mean = float(np.mean(re_values))
        cell.jsd_mean = float(np.mean(jsd_values))
    except Exception as exc:  # noqa: BLE001 - a failed cell must not kill the sweep
        cell.status = "failed"
        cell.error = f"{type(exc).__name__}: {exc}"
        cell.runs = []
        cell.re_mean = None
        cell.jsd_mean = None
    return cell


def _write_sweep_csv(spec: SweepSpec, results: list[CellResult]) -> None:
    lines = [",".join(SWEEP_HEADER)]
    for cell in results:
        if cell.status == "ok":
            row = (
                cell.method, str(cell.k), repr(cell.epsilon), str(len(cell.subset)),
                repr(cell.re_mean), repr(cell.jsd_mean), str(len(cell.runs)),
            )
        else:
            row = (cell.method, str(cell.k), repr(cell.epsilon), str(len(cell.subset)), "", "", "0")
        lines.append(",".join(row))
    Path(spec.out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_sweep_sidecar(spec: SweepSpec, results: list[CellResult]) -> None:
    out = Path(spec.out_path)
    sidecar = out.with_name(out.name + ".runs.json")
    payload = {
        "master_seed": spec.master_seed,
        "data": str(spec.data_path),
        "schema": str(spec.schema_path),
        "runs_per_cell": spec.runs,
        "clamp": spec.clamp,
        "cells": [cell.to_json_dict() for cell in results],
    }
    sidecar.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
