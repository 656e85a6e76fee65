"""Simulation campaigns: fixed-geometry study, path-loss sweeps, network-size
sweeps with random placements, and SLS iteration profiling.

Results are flat CSV rows; averaging happens downstream (see :func:`summarize`).
Rows are appended as tasks finish so an interrupted sweep can resume, and the
file is rewritten in canonical key order at the end so the output does not
depend on completion order or worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
import logging
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .fp_power import FpOptions
from .model import DeviceArrays, SolveReport, SystemParams, build_instance, fig3_distances
from .mode_search import (
    BenchmarkKind,
    SlsOptions,
    benchmark_scheme,
    exhaustive_optimal,
    stochastic_local_search,
)
from .rates import max_powers
from .time_alloc import DEFAULT_GS_TOL

log = logging.getLogger(__name__)

BASE_COLUMNS = [
    "sweep_kind", "sweep_var", "placement", "scheme", "n_devices",
    "objective_bps", "alpha", "sls_iters", "candidate_evals", "wall_time_s",
]
SCHEME_ORDER = ["proposed", "offload_only", "local_only", "optimal"]


class SweepKind(str, enum.Enum):
    FIG3_STUDY = "Fig3Study"
    LAMBDA_SWEEP = "LambdaSweep"
    SCHEME_COMPARISON = "SchemeComparison"
    SIZE_SWEEP = "SizeSweep"
    ITERATION_PROFILE = "IterationProfile"


@dataclass(frozen=True)
class SweepSpec:
    kind: SweepKind
    lambda_values: tuple[float, ...] = (2.6, 2.8, 3.0, 3.2, 3.4)
    n_values: tuple[int, ...] = (5, 10, 15, 20)
    placements_per_point: int = 20
    distance_range: tuple[float, float] = (2.5, 10.0)
    seed: int = 0
    oracle_n_limit: int = 8
    distances: tuple[float, ...] | None = None  # fixed geometry; the six-device line when None

    def __post_init__(self):
        object.__setattr__(self, "kind", SweepKind(self.kind))
        object.__setattr__(self, "lambda_values", tuple(float(v) for v in self.lambda_values))
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        if not self.lambda_values or not self.n_values:
            raise ValueError("sweep value lists must be non-empty")
        lo, hi = self.distance_range
        if not lo <= hi:
            raise ValueError("distance_range must satisfy low <= high")
        if self.placements_per_point < 1:
            raise ValueError("placements_per_point must be >= 1")

    @property
    def fixed_geometry(self) -> tuple[float, ...]:
        return tuple(self.distances) if self.distances else tuple(fig3_distances())

    def points(self, params: SystemParams) -> list[float | int]:
        if self.kind is SweepKind.FIG3_STUDY:
            return [params.path_loss_exp]
        if self.kind in (SweepKind.LAMBDA_SWEEP, SweepKind.SCHEME_COMPARISON):
            return list(self.lambda_values)
        return list(self.n_values)

    @property
    def random_placements(self) -> bool:
        return self.kind in (SweepKind.SIZE_SWEEP, SweepKind.ITERATION_PROFILE)

    def schemes(self, n_devices: int) -> list[str]:
        if self.kind is SweepKind.LAMBDA_SWEEP:
            return ["proposed", "optimal"]
        if self.kind is SweepKind.ITERATION_PROFILE:
            return ["proposed"]
        schemes = ["proposed", "offload_only", "local_only"]
        if self.kind is not SweepKind.SIZE_SWEEP or n_devices <= self.oracle_n_limit:
            schemes.append("optimal")
        return schemes

    @property
    def device_columns(self) -> bool:
        return self.kind in (SweepKind.FIG3_STUDY, SweepKind.LAMBDA_SWEEP)


def placement_seed(seed: int, point: int, placement: int) -> int:
    """Seed for one (sweep point, placement); independent of the other points."""
    digest = hashlib.blake2b(f"{point}:{placement}".encode(), digest_size=8).digest()
    return (seed ^ int.from_bytes(digest, "little")) & (2 ** 64 - 1)


def generate_placements(seed: int, n: int, distance_range: tuple[float, float] = (2.5, 10.0)) -> list[float]:
    """``n`` i.i.d. uniform distances from PCG64 seeded with ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = distance_range
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(lo, hi, size=n).tolist()


@dataclass(frozen=True)
class _Task:
    point: int
    placement: int
    sweep_var: float | int
    distances: tuple[float, ...]
    params: SystemParams
    schemes: tuple[str, ...]
    seed: int


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_scheme(scheme, task, sls_opts, fp_opts, gs_tol) -> SolveReport:
    devices = build_instance(task.params, task.distances)
    if scheme == "proposed":
        return stochastic_local_search(task.params, devices, dataclasses.replace(sls_opts, seed=task.seed),
                                       fp_opts, gs_tol)
    if scheme == "offload_only":
        return benchmark_scheme(BenchmarkKind.OFFLOAD_ONLY, task.params, devices, fp_opts, gs_tol)
    if scheme == "local_only":
        return benchmark_scheme(BenchmarkKind.LOCAL_ONLY, task.params, devices, fp_opts, gs_tol)
    if scheme == "optimal":
        return exhaustive_optimal(task.params, devices, fp_opts, gs_tol)
    raise ValueError(f"unknown scheme {scheme!r}")


def _run_task(task: _Task, kind: SweepKind, device_columns: bool, sls_opts: SlsOptions,
              fp_opts: FpOptions, gs_tol: float, timing: bool) -> tuple[list[dict], list[str]]:
    rows, errors = [], []
    n = len(task.distances)
    for scheme in task.schemes:
        row = {
            "sweep_kind": kind.value, "sweep_var": _fmt(task.sweep_var), "placement": str(task.placement),
            "scheme": scheme, "n_devices": str(n),
        }
        try:
            report = _run_scheme(scheme, task, sls_opts, fp_opts, gs_tol)
        except Exception as exc:  # one failed solve must not abort the sweep
            log.exception("solver failure at %s", row)
            errors.append(f"{row['sweep_var']}/{task.placement}/{scheme}: {exc!r}")
            row.update(objective_bps="nan", alpha="nan", sls_iters="0", candidate_evals="0", wall_time_s="0.0")
            if device_columns:
                for i in range(1, n + 1):
                    row.update({f"mode_{i}": "", f"power_{i}": "", f"pmax_{i}": "", f"rate_{i}": ""})
            rows.append(row)
            continue
        best = report.best
        row.update(
            objective_bps=_fmt(float(best.objective)),
            alpha=_fmt(float(best.alpha)),
            sls_iters=str(report.iterations),
            candidate_evals=str(report.candidate_evals),
            wall_time_s=_fmt(float(report.wall_time)) if timing else "0.0",
        )
        if device_columns:
            caps = max_powers(DeviceArrays.of(build_instance(task.params, task.distances)), best.alpha, task.params)
            for i in range(n):
                row[f"mode_{i + 1}"] = str(best.modes.bits[i])
                row[f"power_{i + 1}"] = _fmt(float(best.powers[i]))
                row[f"pmax_{i + 1}"] = _fmt(float(caps[i]))
                row[f"rate_{i + 1}"] = _fmt(float(best.rates[i]))
        rows.append(row)
    return rows, errors


def header_for(spec: SweepSpec) -> list[str]:
    columns = list(BASE_COLUMNS)
    if spec.device_columns:
        for i in range(1, len(spec.fixed_geometry) + 1):
            columns += [f"mode_{i}", f"power_{i}", f"pmax_{i}", f"rate_{i}"]
    return columns


def _tasks(spec: SweepSpec, params: SystemParams) -> list[_Task]:
    tasks = []
    for point, var in enumerate(spec.points(params)):
        if spec.random_placements:
            n = int(var)
            for j in range(spec.placements_per_point):
                s = placement_seed(spec.seed, point, j)
                tasks.append(_Task(point, j, var, tuple(generate_placements(s, n, spec.distance_range)),
                                   params, tuple(spec.schemes(n)), s))
        else:
            p = params.replace(path_loss_exp=var)
            geometry = spec.fixed_geometry
            tasks.append(_Task(point, 0, var, geometry, p, tuple(spec.schemes(len(geometry))),
                               placement_seed(spec.seed, point, 0)))
    return tasks


def _row_key(row: dict) -> tuple:
    return (float(row["sweep_var"]), int(row["placement"]), SCHEME_ORDER.index(row["scheme"]))


def _read_existing(path: Path, header: list[str]) -> list[dict]:
    if not path.exists() or path.stat().st_size == 0:
        return []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != header:
            raise ValueError(f"{path} has a different header; refusing to resume into it")
        return list(reader)


def metadata_path(out_path: Path) -> Path:
    return out_path.with_name(out_path.name + ".meta.json")


def run_sweep(spec: SweepSpec, params: SystemParams, sls_opts: SlsOptions = SlsOptions(),
              fp_opts: FpOptions = FpOptions(), gs_tol: float = DEFAULT_GS_TOL,
              out_path: str | Path | None = None, jobs: int = 1, timing: bool = True) -> list[dict]:
    """Run every (sweep point, placement, scheme) and return the result rows.

    With ``out_path``, rows already present in that file are kept and their
    tasks skipped; new rows are appended as they complete and the file is
    rewritten in canonical order at the end, next to a ``.meta.json`` file
    holding the resolved parameters and seed.
    """
    header = header_for(spec)
    tasks = _tasks(spec, params)
    rows: list[dict] = []
    errors: list[str] = []
    writer = fh = None
    if out_path is not None:
        out_path = Path(out_path)
        rows = _read_existing(out_path, header)
        done = {(r["sweep_var"], r["placement"], r["scheme"]) for r in rows}
        tasks = [t for t in tasks
                 if not all((_fmt(t.sweep_var), str(t.placement), s) in done for s in t.schemes)]
        keep = {(_fmt(t.sweep_var), str(t.placement)) for t in tasks}
        rows = [r for r in rows if (r["sweep_var"], r["placement"]) not in keep]
        fh = open(out_path, "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        fh.flush()

    def collect(result):
        new_rows, new_errors = result
        rows.extend(new_rows)
        errors.extend(new_errors)
        if writer is not None:
            writer.writerows(new_rows)
            fh.flush()

    args = (spec.kind, spec.device_columns, sls_opts, fp_opts, gs_tol, timing)
    try:
        if jobs <= 1 or len(tasks) <= 1:
            for t in tasks:
                collect(_run_task(t, *args))
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_task, t, *args) for t in tasks]
                for fut in as_completed(futures):
                    collect(fut.result())
    finally:
        if fh is not None:
            fh.close()

    rows.sort(key=_row_key)
    if out_path is not None:
        write_rows(out_path, header, rows)
        write_metadata(metadata_path(out_path), spec, params, sls_opts, fp_opts, gs_tol, errors)
    return rows


def write_rows(path: Path, header: list[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_metadata(path: Path, spec: SweepSpec, params: SystemParams, sls_opts: SlsOptions,
                   fp_opts: FpOptions, gs_tol: float, errors: Sequence[str] = ()) -> None:
    meta = {
        "sweep": _jsonable(spec),
        "params": _jsonable(params),
        "sls_options": _jsonable(sls_opts),
        "fp_options": _jsonable(fp_opts),
        "gs_tol": gs_tol,
        "seed": spec.seed,
        "errors": list(errors),
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def summarize(rows: Sequence[dict]) -> dict[tuple[float, str], dict[str, float]]:
    """Mean objective, SLS iterations and evaluations per (sweep_var, scheme)."""
    groups = defaultdict(list)
    for r in rows:
        groups[(float(r["sweep_var"]), r["scheme"])].append(r)
    out = {}
    for key in sorted(groups, key=lambda k: (k[0], SCHEME_ORDER.index(k[1]))):
        g = groups[key]
        out[key] = {
            "objective": float(np.mean([float(r["objective_bps"]) for r in g])),
            "sls_iters": float(np.mean([int(r["sls_iters"]) for r in g])),
            "candidate_evals": float(np.mean([int(r["candidate_evals"]) for r in g])),
            "count": len(g),
        }
    return out


def mode1_count(row: dict) -> int:
    n = int(row["n_devices"])
    return sum(int(row[f"mode_{i}"]) for i in range(1, n + 1))
