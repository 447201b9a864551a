"""Parameter-sweep experiment runner.

Cells are (topology, |S|, |T|, scheduler) combinations; each runs a fixed
number of iterations. Every iteration draws fresh roles and a fully random
initial configuration, runs to convergence (or the step budget), and reports
round metrics. Iteration seeds derive from the master seed by a splittable
counter scheme (``SeedSequence(master, spawn_key=(cell, iteration))``,
substreams 0/1/2 for roles, initial states, and the scheduler), so cells
can run in parallel while staying reproducible; results are merged after all
workers finish.
"""

from __future__ import annotations

import csv
import functools
import os
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .simulator import default_step_limit, make_scheduler, random_configuration, run
from .topology import Topology, assign_roles, build_grid, load_instance

WORKERS_ENV = "STDAG_WORKERS"


@dataclass(frozen=True)
class Cell:
    index: int
    topology: str          # "grid" or an instance-file path
    d: int | None
    n: int
    diameter: int
    s_count: int
    t_count: int
    scheduler: str


@dataclass(frozen=True)
class RunResult:
    cell_index: int
    iteration: int
    converged: bool
    steps: int
    rounds: int
    layer_running: tuple[int, int, int, int]
    layer_term: tuple[int, int, int, int]
    layer_legit: tuple[int | None, int | None, int | None, int | None]
    series: tuple[tuple[int, int, int, int, int, int], ...] | None
    # series rows: (round, enabled_total, enabled_l1..l4) at round start


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: grid sizes and/or instance files crossed with role counts.

    ``st_pairs`` overrides the (s_counts x t_counts) product with explicit
    (|S|, |T|) combinations. For instance files only the topology is used;
    roles are redrawn every iteration like on grids.
    """

    grid_ds: tuple[int, ...] = ()
    instance_files: tuple[str, ...] = ()
    s_counts: tuple[int, ...] = (1,)
    t_counts: tuple[int, ...] = (1,)
    st_pairs: tuple[tuple[int, int], ...] | None = None
    scheduler: str = "sync"
    iterations: int = 500
    master_seed: int = 0
    record_series: bool = True
    workers: int | None = None


@dataclass
class ExperimentResult:
    cells: list[Cell]
    runs: dict[int, list[RunResult]]        # cell index -> per-iteration records
    aggregates: dict[int, dict[str, float]]


def resolve_workers(explicit: int | None) -> int:
    if explicit is not None:
        return max(1, explicit)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


@functools.lru_cache(maxsize=8)
def _grid(d: int) -> Topology:
    return build_grid(d)


@functools.lru_cache(maxsize=8)
def _file_topology(path: str) -> Topology:
    topo, _ = load_instance(path)
    return topo


def _cell_topology(topology: str, d: int | None) -> Topology:
    return _grid(d) if topology == "grid" else _file_topology(topology)


def iteration_seeds(master_seed: int, cell_index: int, iteration: int):
    """Substreams (roles, initial states, scheduler) for one iteration."""
    root = np.random.SeedSequence(master_seed, spawn_key=(cell_index, iteration))
    return tuple(root.spawn(3))


def _run_iteration(task) -> RunResult:
    cell_index, topology, d, s_count, t_count, scheduler_kind, iteration, \
        master_seed, want_series, diameter = task
    topo = _cell_topology(topology, d)
    seed_roles, seed_init, seed_sched = iteration_seeds(master_seed, cell_index, iteration)
    roles = assign_roles(topo, s_count, t_count, seed_roles)
    cfg = random_configuration(topo, seed_init)
    scheduler = make_scheduler(scheduler_kind, seed_sched)
    limit = default_step_limit(diameter, topo.n, scheduler_kind)
    trace = run(topo, roles, cfg, scheduler, limit)
    series = None
    if want_series:
        series = tuple(
            (rec.index, rec.enabled_at_start) + rec.enabled_by_layer
            for rec in trace.rounds
        )
    return RunResult(
        cell_index=cell_index,
        iteration=iteration,
        converged=trace.converged,
        steps=trace.total_steps,
        rounds=trace.total_rounds,
        layer_running=trace.layer_running_time,
        layer_term=trace.layer_termination_round,
        layer_legit=trace.layer_legitimacy_round,
        series=series,
    )


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else float("nan")


def _std(xs) -> float:
    xs = list(xs)
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return (sum((x - m) ** 2 for x in xs) / (len(xs) - 1)) ** 0.5


def aggregate(records: list[RunResult]) -> dict[str, float]:
    """Per-cell summary statistics, recomputable from the raw run records."""
    out: dict[str, float] = {
        "iterations": len(records),
        "non_converged": sum(1 for r in records if not r.converged),
        "rounds_mean": _mean(r.rounds for r in records),
        "rounds_std": _std(r.rounds for r in records),
    }
    for l in range(4):
        out[f"l{l + 1}_running_mean"] = _mean(r.layer_running[l] for r in records)
        out[f"l{l + 1}_running_std"] = _std(r.layer_running[l] for r in records)
        out[f"l{l + 1}_term_mean"] = _mean(r.layer_term[l] for r in records)
        out[f"l{l + 1}_term_std"] = _std(r.layer_term[l] for r in records)
        legit = [r.layer_legit[l] for r in records if r.layer_legit[l] is not None]
        out[f"l{l + 1}_legit_mean"] = _mean(legit)
        out[f"l{l + 1}_legit_std"] = _std(legit)
    return out


def build_cells(spec: ExperimentSpec) -> list[Cell]:
    topologies: list[tuple[str, int | None]] = [("grid", d) for d in spec.grid_ds]
    topologies += [(str(p), None) for p in spec.instance_files]
    if not topologies:
        raise ValueError("experiment needs grid sizes or instance files")
    if spec.st_pairs is not None:
        pairs = list(spec.st_pairs)
    else:
        pairs = [(s, t) for s in spec.s_counts for t in spec.t_counts]
    cells = []
    for topology, d in topologies:
        topo = _cell_topology(topology, d)
        diameter = 2 * d - 2 if d is not None else topo.diameter()
        for s, t in pairs:
            if s + t > topo.n:
                raise ValueError(
                    f"cell infeasible: |S|={s} + |T|={t} > n={topo.n} ({topology})"
                )
            cells.append(Cell(
                index=len(cells), topology=topology, d=d, n=topo.n,
                diameter=diameter, s_count=s, t_count=t, scheduler=spec.scheduler,
            ))
    return cells


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None) -> ExperimentResult:
    if spec.iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {spec.iterations}")
    cells = build_cells(spec)
    tasks = [
        (c.index, c.topology, c.d, c.s_count, c.t_count, c.scheduler,
         it, spec.master_seed, spec.record_series and it == 0, c.diameter)
        for c in cells
        for it in range(spec.iterations)
    ]
    workers = resolve_workers(spec.workers)
    if workers > 1 and len(tasks) > 1:
        with Pool(processes=workers) as pool:
            results = list(pool.imap_unordered(_run_iteration, tasks, chunksize=4))
    else:
        results = [_run_iteration(t) for t in tasks]
    results.sort(key=lambda r: (r.cell_index, r.iteration))

    runs: dict[int, list[RunResult]] = {c.index: [] for c in cells}
    for r in results:
        runs[r.cell_index].append(r)
    aggregates = {c.index: aggregate(runs[c.index]) for c in cells}

    result = ExperimentResult(cells=cells, runs=runs, aggregates=aggregates)
    if out_dir is not None:
        write_tables(result, Path(out_dir))
    return result


# -- CSV emission -----------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def write_tables(result: ExperimentResult, out_dir: Path) -> None:
    """runs.csv (per iteration), cells.csv (aggregates), series.csv
    (enabled-node counts per round for iteration 0 of each cell)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    cell_fields = ["cell", "topology", "d", "n", "diameter", "senders", "targets",
                   "scheduler"]

    def cell_values(c: Cell) -> list[str]:
        return [_fmt(x) for x in (c.index, c.topology, c.d, c.n, c.diameter,
                                  c.s_count, c.t_count, c.scheduler)]

    with open(out_dir / "runs.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cell_fields + ["iteration", "converged", "steps", "rounds"]
                   + [f"l{l}_running" for l in range(1, 5)]
                   + [f"l{l}_term" for l in range(1, 5)]
                   + [f"l{l}_legit" for l in range(1, 5)])
        for c in result.cells:
            for r in result.runs[c.index]:
                w.writerow(cell_values(c)
                           + [_fmt(r.iteration), _fmt(r.converged), _fmt(r.steps),
                              _fmt(r.rounds)]
                           + [_fmt(x) for x in r.layer_running]
                           + [_fmt(x) for x in r.layer_term]
                           + [_fmt(x) for x in r.layer_legit])

    agg_keys = ["iterations", "non_converged", "rounds_mean", "rounds_std"]
    for l in range(1, 5):
        agg_keys += [f"l{l}_running_mean", f"l{l}_running_std",
                     f"l{l}_term_mean", f"l{l}_term_std",
                     f"l{l}_legit_mean", f"l{l}_legit_std"]
    with open(out_dir / "cells.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cell_fields + agg_keys)
        for c in result.cells:
            agg = result.aggregates[c.index]
            w.writerow(cell_values(c) + [_fmt(agg[k]) for k in agg_keys])

    with open(out_dir / "series.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cell", "iteration", "round", "enabled_total",
                    "enabled_l1", "enabled_l2", "enabled_l3", "enabled_l4"])
        for c in result.cells:
            for r in result.runs[c.index]:
                if r.series is None:
                    continue
                for row in r.series:
                    w.writerow([_fmt(c.index), _fmt(r.iteration)]
                               + [_fmt(x) for x in row])
