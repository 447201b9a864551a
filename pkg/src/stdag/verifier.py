"""Correctness predicates and centralized oracles.

Everything the output must satisfy is decided here, independently of the
stepping machinery: reachability conditions C1/C2, acyclicity C3, definitional
brute-force minimality, per-layer structural legitimacy, finality, and a
centralized reference construction of the unique fixpoint configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import protocol
from .configuration import Configuration, local_view
from .protocol import SELF
from .topology import RoleAssignment, Topology


class InvalidDigraphError(ValueError):
    """Input digraph does not meet the operation's precondition."""


@dataclass(frozen=True)
class OutputDigraph:
    """Arc set extracted from per-node arc flags; arcs overlay topology edges."""

    n: int
    arcs: frozenset[tuple[int, int]]
    source: str  # "arc" or "l3_arc"


@dataclass
class VerdictReport:
    """Outcome of the correctness checks, with witnesses for failures.

    Parts left as None were not evaluated. ``c1_violations`` lists senders
    that reach no target, ``c2_violations`` targets no sender reaches,
    ``cycle`` a directed cycle (closed node sequence), ``removable_arc`` an
    arc whose deletion keeps C1 and C2 intact.
    """

    c1: bool | None = None
    c1_violations: tuple[int, ...] = ()
    c2: bool | None = None
    c2_violations: tuple[int, ...] = ()
    c3: bool | None = None
    cycle: tuple[int, ...] | None = None
    minimal: bool | None = None
    removable_arc: tuple[int, int] | None = None
    layers: tuple[bool, bool, bool, bool] | None = None
    final: bool | None = None

    @property
    def all_pass(self) -> bool:
        parts: list[bool] = []
        for x in (self.c1, self.c2, self.c3, self.minimal, self.final):
            if x is not None:
                parts.append(x)
        if self.layers is not None:
            parts.extend(self.layers)
        return bool(parts) and all(parts)

    def to_dict(self) -> dict:
        return {
            "c1": {"ok": self.c1, "violating_senders": list(self.c1_violations)},
            "c2": {"ok": self.c2, "violating_targets": list(self.c2_violations)},
            "c3": {"ok": self.c3, "cycle": list(self.cycle) if self.cycle else None},
            "minimal": {
                "ok": self.minimal,
                "removable_arc": list(self.removable_arc) if self.removable_arc else None,
            },
            "layers": list(self.layers) if self.layers is not None else None,
            "final": self.final,
            "all_pass": self.all_pass,
        }


# -- digraph extraction and reachability ---------------------------------------


def extract_digraph(topo: Topology, cfg: Configuration, source: str = "arc") -> OutputDigraph:
    """Arcs (v, u) for every set per-neighbor flag, translated to node pairs."""
    if source not in ("arc", "l3_arc"):
        raise ValueError(f"source must be 'arc' or 'l3_arc', got {source!r}")
    flags = cfg.arc if source == "arc" else cfg.l3_arc
    arcs = set()
    for v in range(topo.n):
        base = int(cfg.off[v])
        for k, u in enumerate(topo.neighbors[v]):
            if flags[base + k]:
                arcs.add((v, u))
    return OutputDigraph(n=topo.n, arcs=frozenset(arcs), source=source)


def _adjacency(n: int, arcs) -> tuple[list[list[int]], list[list[int]]]:
    out: list[list[int]] = [[] for _ in range(n)]
    inc: list[list[int]] = [[] for _ in range(n)]
    for u, v in arcs:
        out[u].append(v)
        inc[v].append(u)
    return out, inc


def _reachable(start: int, adj: list[list[int]]) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def _find_cycle(n: int, out: list[list[int]]) -> tuple[int, ...] | None:
    """A directed cycle as a closed node sequence, or None if acyclic."""
    color = [0] * n  # 0 new, 1 on stack, 2 done
    parent = [-1] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(out[root]))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            advanced = False
            for u in it:
                if color[u] == 0:
                    color[u] = 1
                    parent[u] = v
                    stack.append((u, iter(out[u])))
                    advanced = True
                    break
                if color[u] == 1:
                    cycle = [u]
                    w = v
                    while w != u:
                        cycle.append(w)
                        w = parent[w]
                    cycle.reverse()
                    return tuple(cycle)
            if not advanced:
                color[v] = 2
                stack.pop()
    return None


def check_weak_st_dag(
    topo: Topology, roles: RoleAssignment, digraph: OutputDigraph
) -> VerdictReport:
    """Decide C1 (sender reaches a target), C2 (target reached from a sender),
    and C3 (no directed cycle), attaching witnesses on failure."""
    for u, v in digraph.arcs:
        if u not in topo.neighbors[v] and v not in topo.neighbors[u]:
            raise InvalidDigraphError(f"arc ({u}, {v}) does not overlay an edge")
    out, inc = _adjacency(digraph.n, digraph.arcs)
    c1_bad = tuple(
        s for s in sorted(roles.senders) if not (_reachable(s, out) & roles.targets)
    )
    c2_bad = tuple(
        t for t in sorted(roles.targets) if not (_reachable(t, inc) & roles.senders)
    )
    cycle = _find_cycle(digraph.n, out)
    return VerdictReport(
        c1=not c1_bad, c1_violations=c1_bad,
        c2=not c2_bad, c2_violations=c2_bad,
        c3=cycle is None, cycle=cycle,
    )


def _c1_c2_hold(n: int, arcs: set, senders: frozenset[int], targets: frozenset[int]) -> bool:
    out, inc = _adjacency(n, arcs)
    can_reach_target = set()
    q = list(targets)
    can_reach_target.update(targets)
    while q:
        v = q.pop()
        for u in inc[v]:
            if u not in can_reach_target:
                can_reach_target.add(u)
                q.append(u)
    if not senders <= can_reach_target:
        return False
    reached = set(senders)
    q = list(senders)
    while q:
        v = q.pop()
        for u in out[v]:
            if u not in reached:
                reached.add(u)
                q.append(u)
    return targets <= reached


def check_minimal(
    topo: Topology, roles: RoleAssignment, digraph: OutputDigraph
) -> VerdictReport:
    """Definitional minimality: every single-arc deletion must break C1 or C2.

    The input must already be a weakly ST-reachable DAG.
    """
    base = check_weak_st_dag(topo, roles, digraph)
    if not (base.c1 and base.c2 and base.c3):
        raise InvalidDigraphError("input digraph is not a weakly ST-reachable DAG")
    arcs = set(digraph.arcs)
    for a in sorted(arcs):
        rest = arcs - {a}
        if _c1_c2_hold(digraph.n, rest, roles.senders, roles.targets):
            return VerdictReport(minimal=False, removable_arc=a)
    return VerdictReport(minimal=True)


# -- centralized reference construction -----------------------------------------


def _canonical_parents(topo: Topology, dist: list[int], roots: set[int]) -> list[int]:
    """Parent labels of the canonical BFS forest: smallest label attaining the
    minimum neighbor distance; SELF at roots."""
    parents = []
    for v in range(topo.n):
        if v in roots:
            parents.append(SELF)
            continue
        best, best_label = None, SELF
        for k, u in enumerate(topo.neighbors[v]):
            if best is None or dist[u] < best:
                best, best_label = dist[u], k + 1
        parents.append(best_label)
    return parents


def _children_by_parent(topo: Topology, parents: list[int]) -> list[list[int]]:
    ch: list[list[int]] = [[] for _ in range(topo.n)]
    for v, p in enumerate(parents):
        if p != SELF:
            ch[topo.neighbor(v, p)].append(v)
    return ch


def _subtree_flag(
    topo: Topology, dist: list[int], children: list[list[int]], base: set[int]
) -> list[bool]:
    """Bottom-up: node flag = membership in base or any flagged child."""
    flag = [False] * topo.n
    for v in sorted(range(topo.n), key=lambda x: -dist[x]):
        flag[v] = v in base or any(flag[c] for c in children[v])
    return flag


def reference_construct(topo: Topology, roles: RoleAssignment) -> Configuration:
    """The unique fixpoint configuration, computed centrally.

    Layer by layer: sender-rooted BFS forest with label tie-breaks and red
    subtree flags; red-rooted BFS forest with blue flags; candidate arcs;
    branch fixpoint bottom-up on the first forest; then the removal rules,
    static ones first, followed by the parent-arc cascade from the roots down.
    """
    roles.validate(topo.n)
    n = topo.n
    senders, targets = roles.senders, roles.targets

    d1 = topo.bfs_distances(sorted(senders))
    p1 = _canonical_parents(topo, d1, set(senders))
    ch1 = _children_by_parent(topo, p1)
    red = _subtree_flag(topo, d1, ch1, set(targets))

    red_set = {v for v in range(n) if red[v]}
    d2 = topo.bfs_distances(sorted(red_set))
    p2 = _canonical_parents(topo, d2, red_set)
    ch2 = _children_by_parent(topo, p2)
    blue_raw = _subtree_flag(topo, d2, ch2, set(senders) - red_set)
    blue = [blue_raw[v] and not red[v] for v in range(n)]

    blue_children = [
        [c for c in ch2[v] if blue[c]] for v in range(n)
    ]

    # branch fixpoint, children before parents
    branch = [False] * n
    for v in sorted(range(n), key=lambda x: -d1[x]):
        if not red[v]:
            continue
        rc = [c for c in ch1[v] if red[c]]
        branch[v] = bool(blue_children[v]) or (
            bool(rc) and all(branch[c] for c in rc) and v not in targets
        )

    cfg = Configuration.zero(topo)
    cfg.l1_dist[:] = d1
    cfg.l1_parent[:] = p1
    cfg.l1_color[:] = red
    cfg.l2_dist[:] = d2
    cfg.l2_parent[:] = p2
    cfg.l2_color[:] = blue
    cfg.l4_branch[:] = branch

    # candidate arcs
    for v in range(n):
        base = int(cfg.off[v])
        for k, u in enumerate(topo.neighbors[v]):
            has = (red[v] and p1[u] != SELF and topo.neighbor(u, p1[u]) == v and red[u]) or (
                blue[v] and p2[v] == k + 1
            )
            cfg.l3_arc[base + k] = has
    cfg.arc[:] = cfg.l3_arc

    # static removal rules on branch children
    for v in range(n):
        bc = {c for c in ch1[v] if branch[c]}
        if not bc:
            continue
        rc = {c for c in ch1[v] if red[c]}
        base = int(cfg.off[v])
        if bc < rc:
            removed = bc
        elif bc == rc:
            keep = min(bc, key=lambda c: topo.label_of(v, c))
            removed = bc if v in targets else bc - {keep}
        else:
            removed = set()
        for c in removed:
            cfg.arc[base + topo.label_of(v, c) - 1] = False

    # parent-arc cascade, roots first
    for v in sorted(range(n), key=lambda x: d1[x]):
        if p1[v] == SELF:
            continue
        parent = topo.neighbor(v, p1[v])
        parent_arc = cfg.arc[int(cfg.off[parent]) + topo.label_of(parent, v) - 1]
        if not parent_arc and not blue_children[v]:
            cfg.arc[int(cfg.off[v]): int(cfg.off[v + 1])] = False

    return cfg


# -- legitimacy and finality -----------------------------------------------------


def _layer1_legitimate(topo: Topology, roles: RoleAssignment, cfg: Configuration) -> bool:
    d1 = topo.bfs_distances(sorted(roles.senders))
    if list(cfg.l1_dist) != d1:
        return False
    p1 = _canonical_parents(topo, d1, set(roles.senders))
    if list(cfg.l1_parent) != p1:
        return False
    ch1 = _children_by_parent(topo, p1)
    red = _subtree_flag(topo, d1, ch1, set(roles.targets))
    return list(cfg.l1_color) == red


def _layer2_legitimate(topo: Topology, roles: RoleAssignment, cfg: Configuration) -> bool:
    red_set = {v for v in range(topo.n) if cfg.l1_color[v]}
    if not red_set:
        return False
    d2 = topo.bfs_distances(sorted(red_set))
    if list(cfg.l2_dist) != d2:
        return False
    p2 = _canonical_parents(topo, d2, red_set)
    if list(cfg.l2_parent) != p2:
        return False
    ch2 = _children_by_parent(topo, p2)
    blue = _subtree_flag(topo, d2, ch2, set(roles.senders) - red_set)
    blue = [blue[v] and v not in red_set for v in range(topo.n)]
    return list(cfg.l2_color) == blue


def _layer3_legitimate(topo: Topology, roles: RoleAssignment, cfg: Configuration) -> bool:
    for v in range(topo.n):
        view = local_view(topo, roles, cfg, v)
        if view.state.l3_arc != protocol.l3_target_arcs(view):
            return False
    return True


def _layer4_legitimate(topo: Topology, roles: RoleAssignment, cfg: Configuration) -> bool:
    for v in range(topo.n):
        view = local_view(topo, roles, cfg, v)
        if protocol.wrong_arc_dests(view):
            return False
        if view.state.l4_branch != protocol.is_branch(view):
            return False
        if protocol.missing_arc_dests(view) or protocol.redundant_arc_dests(view):
            return False
    dg = extract_digraph(topo, cfg, "arc")
    rep = check_weak_st_dag(topo, roles, dg)
    if not (rep.c1 and rep.c2 and rep.c3):
        return False
    return bool(check_minimal(topo, roles, dg).minimal)


def layer_legitimate(
    topo: Topology, roles: RoleAssignment, cfg: Configuration, layer: int
) -> bool:
    """Structural legitimacy of one layer; callers check lower layers first."""
    checks = {
        1: _layer1_legitimate,
        2: _layer2_legitimate,
        3: _layer3_legitimate,
        4: _layer4_legitimate,
    }
    if layer not in checks:
        raise ValueError(f"layer must be 1..4, got {layer}")
    return checks[layer](topo, roles, cfg)


def is_final(topo: Topology, roles: RoleAssignment, cfg: Configuration) -> bool:
    """True iff no node has an enabled action."""
    return all(
        protocol.enabled_action(local_view(topo, roles, cfg, v)) is None
        for v in range(topo.n)
    )


def full_verdict(topo: Topology, roles: RoleAssignment, cfg: Configuration) -> VerdictReport:
    """Every predicate at once: C1-C3, minimality, prefix-layer legitimacy, finality.

    ``layers[k]`` reports whether layers 1..k+1 are all structurally
    legitimate (a layer's predicate presumes the ones below it).
    """
    dg = extract_digraph(topo, cfg, "arc")
    rep = check_weak_st_dag(topo, roles, dg)
    if rep.c1 and rep.c2 and rep.c3:
        mrep = check_minimal(topo, roles, dg)
        rep.minimal = mrep.minimal
        rep.removable_arc = mrep.removable_arc
    layers = []
    prefix_ok = True
    for layer in (1, 2, 3, 4):
        prefix_ok = prefix_ok and layer_legitimate(topo, roles, cfg, layer)
        layers.append(prefix_ok)
    rep.layers = tuple(layers)
    rep.final = is_final(topo, roles, cfg)
    return rep
