"""Stepping configurations under pluggable schedulers.

A step activates a nonempty subset of the currently enabled nodes; every
activated node applies its enabled action against the pre-step snapshot, so
no mixed old/new neighbor states are ever observed. Rounds follow the
asynchronous-round definition: a round ends once every node that was enabled
at its start has acted or been observed disabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .configuration import Configuration
from .engine import Eval, Network, apply, evaluate
from .topology import RoleAssignment, Topology

SCHEDULER_KINDS = ("sync", "randfair", "rr", "adv")


class SynchronousScheduler:
    """Every enabled node acts each step; one step is exactly one round."""

    kind = "sync"
    fair = True

    def start(self, n: int) -> None:
        pass

    def select(self, enabled: np.ndarray, layers: np.ndarray) -> np.ndarray:
        return enabled.copy()


class RandomFairSubsetScheduler:
    """A uniformly random nonempty subset of enabled nodes per step.

    Weak fairness is enforced deterministically on top of the sampling: a
    node that has stayed enabled without acting for n consecutive steps is
    force-included.
    """

    kind = "randfair"
    fair = True

    def __init__(self, seed=0):
        self._seed = seed

    def start(self, n: int) -> None:
        self._rng = np.random.default_rng(self._seed)
        self._streak = np.zeros(n, dtype=np.int64)
        self._n = n

    def select(self, enabled: np.ndarray, layers: np.ndarray) -> np.ndarray:
        pick = enabled & (self._rng.random(self._n) < 0.5)
        while not pick.any():
            pick = enabled & (self._rng.random(self._n) < 0.5)
        pick |= enabled & (self._streak >= self._n)
        self._streak[pick | ~enabled] = 0
        self._streak[enabled & ~pick] += 1
        return pick


class RoundRobinSingleScheduler:
    """Cycle node ids and activate the next enabled one (a centralized daemon)."""

    kind = "rr"
    fair = True

    def start(self, n: int) -> None:
        self._ptr = 0
        self._n = n

    def select(self, enabled: np.ndarray, layers: np.ndarray) -> np.ndarray:
        ids = np.flatnonzero(enabled)
        ahead = ids[ids >= self._ptr]
        v = int(ahead[0]) if ahead.size else int(ids[0])
        self._ptr = (v + 1) % self._n
        mask = np.zeros(self._n, dtype=bool)
        mask[v] = True
        return mask


class AdversarialGreedyScheduler:
    """Exploratory unfair daemon: activates one node with the highest-layer
    enabled action, betting that later low-layer fixes invalidate its work.
    No convergence guarantee is claimed for this scheduler."""

    kind = "adv"
    fair = False

    def __init__(self, seed=0):
        self._seed = seed

    def start(self, n: int) -> None:
        self._rng = np.random.default_rng(self._seed)
        self._n = n

    def select(self, enabled: np.ndarray, layers: np.ndarray) -> np.ndarray:
        top = layers[enabled].max()
        cands = np.flatnonzero(enabled & (layers == top))
        v = int(self._rng.choice(cands))
        mask = np.zeros(self._n, dtype=bool)
        mask[v] = True
        return mask


def make_scheduler(kind: str, seed=0):
    if kind == "sync":
        return SynchronousScheduler()
    if kind == "randfair":
        return RandomFairSubsetScheduler(seed)
    if kind == "rr":
        return RoundRobinSingleScheduler()
    if kind == "adv":
        return AdversarialGreedyScheduler(seed)
    raise ValueError(f"unknown scheduler kind {kind!r}; choose from {SCHEDULER_KINDS}")


def round_cutoff(diameter: int) -> int:
    """Round budget for convergence checks: generous versus the linear-in-D
    stabilization time."""
    return 20 * (diameter + 1)


def default_step_limit(diameter: int, n: int, kind: str) -> int:
    """Step budget realizing the round cutoff: synchronous steps are rounds,
    subset/single-node schedulers may spend up to n steps per round."""
    if kind == "sync":
        return round_cutoff(diameter)
    return round_cutoff(diameter) * n


# -- trace records ---------------------------------------------------------------


@dataclass
class StepRecord:
    enabled: tuple[int, ...]
    activated: tuple[int, ...]
    actions: tuple[int, ...]  # Action values, aligned with ``activated``


@dataclass
class RoundRecord:
    index: int                     # 1-based
    enabled_at_start: int
    enabled_by_layer: tuple[int, int, int, int]
    layers_executed: tuple[int, ...]
    steps: int


@dataclass
class Trace:
    """Everything recorded about one run.

    ``layer_running_time[l-1]`` counts rounds in which at least one node
    executed a layer-l action. ``layer_termination_round`` is the last such
    round (0 if none). ``layer_legitimacy_round[l-1]`` is the first round
    boundary after which no action of layers 1..l is enabled anywhere (None
    if the run was cut off before that happened); layered composition makes
    that quiescence permanent, so it marks where the layer's legitimacy
    predicate starts to hold for good. If the step limit interrupts a round,
    the partial round is not counted.
    """

    converged: bool
    total_steps: int
    total_rounds: int
    rounds: list[RoundRecord]
    layer_running_time: tuple[int, int, int, int]
    layer_termination_round: tuple[int, int, int, int]
    layer_legitimacy_round: tuple[int | None, int | None, int | None, int | None]
    final_config: Configuration
    final_enabled: tuple[int, ...]
    round_boundaries: list[int] = field(default_factory=list)
    steps_log: list[StepRecord] | None = None


# -- core operations ---------------------------------------------------------------


def step(
    topo: Topology,
    roles: RoleAssignment,
    cfg: Configuration,
    activated: set[int],
) -> Configuration:
    """One transition: each activated node applies its enabled action, all
    evaluated against the pre-step configuration."""
    if not activated:
        raise ValueError("activated set must be nonempty")
    net = Network(topo, roles)
    ev = evaluate(net, cfg)
    mask = np.zeros(topo.n, dtype=bool)
    for v in activated:
        mask[v] = True
    return apply(net, cfg, ev, mask)


def run(
    topo: Topology,
    roles: RoleAssignment,
    cfg: Configuration,
    scheduler,
    step_limit: int,
    record_steps: bool = False,
) -> Trace:
    """Iterate steps under the scheduler until no node is enabled or the step
    limit is hit (the latter flags the trace non-converged, never raises)."""
    if step_limit <= 0:
        raise ValueError(f"step_limit must be positive, got {step_limit}")
    net = Network(topo, roles)
    cfg = cfg.copy()
    scheduler.start(topo.n)

    ev = evaluate(net, cfg)
    rounds: list[RoundRecord] = []
    boundaries: list[int] = []
    steps_log: list[StepRecord] | None = [] if record_steps else None
    legit_round: list[int | None] = [None] * 4

    def note_boundary(boundary: int, ev_now: Eval) -> None:
        layers_now = ev_now.layers[ev_now.enabled]
        min_layer = int(layers_now.min()) if layers_now.size else 5
        for l in range(1, 5):
            if legit_round[l - 1] is None and min_layer > l:
                legit_round[l - 1] = boundary

    def by_layer(ev_now: Eval) -> tuple[int, int, int, int]:
        layers_now = ev_now.layers
        return tuple(int(np.count_nonzero(layers_now == l)) for l in (1, 2, 3, 4))

    note_boundary(0, ev)
    pending = ev.enabled.copy()
    start_enabled = int(pending.sum())
    start_by_layer = by_layer(ev)
    layers_executed: set[int] = set()
    steps_in_round = 0
    total_steps = 0

    while ev.enabled.any() and total_steps < step_limit:
        mask = scheduler.select(ev.enabled.copy(), ev.layers)
        if steps_log is not None:
            act_ids = tuple(int(v) for v in np.flatnonzero(mask))
            steps_log.append(StepRecord(
                enabled=tuple(int(v) for v in np.flatnonzero(ev.enabled)),
                activated=act_ids,
                actions=tuple(int(ev.rank[v]) for v in act_ids),
            ))
        layers_executed.update(int(l) for l in np.unique(ev.layers[mask]))
        cfg = apply(net, cfg, ev, mask)
        total_steps += 1
        steps_in_round += 1
        ev = evaluate(net, cfg)
        pending &= ~mask
        pending &= ev.enabled
        if not pending.any():
            rounds.append(RoundRecord(
                index=len(rounds) + 1,
                enabled_at_start=start_enabled,
                enabled_by_layer=start_by_layer,
                layers_executed=tuple(sorted(layers_executed)),
                steps=steps_in_round,
            ))
            boundaries.append(total_steps)
            note_boundary(len(rounds), ev)
            pending = ev.enabled.copy()
            start_enabled = int(pending.sum())
            start_by_layer = by_layer(ev)
            layers_executed = set()
            steps_in_round = 0

    running = [0, 0, 0, 0]
    termination = [0, 0, 0, 0]
    for rec in rounds:
        for l in rec.layers_executed:
            running[l - 1] += 1
            termination[l - 1] = rec.index

    return Trace(
        converged=not bool(ev.enabled.any()),
        total_steps=total_steps,
        total_rounds=len(rounds),
        rounds=rounds,
        layer_running_time=tuple(running),
        layer_termination_round=tuple(termination),
        layer_legitimacy_round=tuple(legit_round),
        final_config=cfg,
        final_enabled=tuple(int(v) for v in np.flatnonzero(ev.enabled)),
        round_boundaries=boundaries,
        steps_log=steps_log,
    )


def count_rounds(trace: Trace) -> list[int]:
    """Recompute round boundaries from the step log and cross-check them
    against the boundaries recorded during the run."""
    if trace.steps_log is None:
        raise ValueError("trace has no step log; run with record_steps=True")
    boundaries: list[int] = []
    pending: set[int] | None = None
    for i, rec in enumerate(trace.steps_log):
        if pending is None:
            pending = set(rec.enabled)
        pending -= set(rec.activated)
        if i + 1 < len(trace.steps_log):
            enabled_after = set(trace.steps_log[i + 1].enabled)
        else:
            enabled_after = set(trace.final_enabled)
        pending &= enabled_after
        if not pending:
            boundaries.append(i + 1)
            pending = None
    if boundaries != trace.round_boundaries:
        raise RuntimeError(
            f"round accounting mismatch: recomputed {boundaries}, "
            f"recorded {trace.round_boundaries}"
        )
    return boundaries


def randomize_states(cfg: Configuration, nodes, seed) -> Configuration:
    """Redraw every field of the listed nodes uniformly from its full domain.

    Distances come from [0, n], parents from {SELF} + labels, flags and arc
    entries from fair coins. Other nodes are untouched. Deterministic per
    (seed, node set); draw order is the field order of the state record.
    """
    out = cfg.copy()
    sel = np.array(sorted(set(int(v) for v in nodes)), dtype=np.int64)
    if sel.size == 0:
        return out
    rng = np.random.default_rng(seed)
    degs = (cfg.off[sel + 1] - cfg.off[sel]).astype(np.int64)
    k = sel.size
    cap = cfg.dist_cap
    slot_idx = np.concatenate(
        [np.arange(cfg.off[v], cfg.off[v + 1]) for v in sel]
    ).astype(np.int64)

    out.l1_dist[sel] = rng.integers(0, cap + 1, size=k)
    out.l1_parent[sel] = rng.integers(0, degs + 1)
    out.l1_color[sel] = rng.random(k) < 0.5
    out.l2_dist[sel] = rng.integers(0, cap + 1, size=k)
    out.l2_parent[sel] = rng.integers(0, degs + 1)
    out.l2_color[sel] = rng.random(k) < 0.5
    out.l3_arc[slot_idx] = rng.random(slot_idx.size) < 0.5
    out.arc[slot_idx] = rng.random(slot_idx.size) < 0.5
    out.l4_branch[sel] = rng.random(k) < 0.5
    return out


def random_configuration(topo: Topology, seed) -> Configuration:
    """A configuration with every node fully randomized (transient-fault start)."""
    return randomize_states(Configuration.zero(topo), range(topo.n), seed)
