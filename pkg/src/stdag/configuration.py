"""Configurations: the state vector of all nodes, stored as flat arrays.

Scalar per-node fields are length-n arrays. Per-neighbor fields (``l3_arc``,
``arc``) are flat slot arrays laid out in the topology's label order: node v
owns slots ``off[v] .. off[v+1]-1`` and slot ``off[v]+k`` is label ``k+1``.
The per-node :class:`~stdag.protocol.NodeState` view is the reference
representation; the arrays exist so stepping large instances stays cheap.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .protocol import LocalView, NeighborView, NodeState
from .topology import RoleAssignment, Topology


class ConfigurationError(ValueError):
    """Malformed serialized configuration."""


class Configuration:
    """All node states for one topology, array-backed."""

    __slots__ = ("off", "l1_dist", "l1_parent", "l1_color", "l2_dist",
                 "l2_parent", "l2_color", "l3_arc", "arc", "l4_branch")

    def __init__(self, off, l1_dist, l1_parent, l1_color, l2_dist, l2_parent,
                 l2_color, l3_arc, arc, l4_branch):
        self.off = off
        self.l1_dist = l1_dist
        self.l1_parent = l1_parent
        self.l1_color = l1_color
        self.l2_dist = l2_dist
        self.l2_parent = l2_parent
        self.l2_color = l2_color
        self.l3_arc = l3_arc
        self.arc = arc
        self.l4_branch = l4_branch

    # -- construction --------------------------------------------------------

    @classmethod
    def zero(cls, topo: Topology) -> "Configuration":
        """All distances 0, parents SELF, flags false."""
        off = topo.csr().off
        n, slots = topo.n, int(off[-1])
        return cls(
            off,
            np.zeros(n, dtype=np.int32),
            np.zeros(n, dtype=np.int32),
            np.zeros(n, dtype=bool),
            np.zeros(n, dtype=np.int32),
            np.zeros(n, dtype=np.int32),
            np.zeros(n, dtype=bool),
            np.zeros(slots, dtype=bool),
            np.zeros(slots, dtype=bool),
            np.zeros(n, dtype=bool),
        )

    @classmethod
    def from_states(cls, topo: Topology, states: list[NodeState]) -> "Configuration":
        if len(states) != topo.n:
            raise ConfigurationError(
                f"configuration has {len(states)} states, instance has {topo.n} nodes"
            )
        cfg = cls.zero(topo)
        for v, s in enumerate(states):
            cfg.set_state(v, s)
        cfg.validate()
        return cfg

    # -- per-node views -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.l1_dist)

    @property
    def dist_cap(self) -> int:
        return self.n

    def degree(self, v: int) -> int:
        return int(self.off[v + 1] - self.off[v])

    def state(self, v: int) -> NodeState:
        a, b = int(self.off[v]), int(self.off[v + 1])
        return NodeState(
            l1_dist=int(self.l1_dist[v]),
            l1_parent=int(self.l1_parent[v]),
            l1_color=bool(self.l1_color[v]),
            l2_dist=int(self.l2_dist[v]),
            l2_parent=int(self.l2_parent[v]),
            l2_color=bool(self.l2_color[v]),
            l3_arc=tuple(bool(x) for x in self.l3_arc[a:b]),
            arc=tuple(bool(x) for x in self.arc[a:b]),
            l4_branch=bool(self.l4_branch[v]),
        )

    def states(self) -> list[NodeState]:
        return [self.state(v) for v in range(self.n)]

    def set_state(self, v: int, s: NodeState) -> None:
        deg = self.degree(v)
        if len(s.l3_arc) != deg or len(s.arc) != deg:
            raise ConfigurationError(
                f"node {v}: arc arrays have {len(s.l3_arc)}/{len(s.arc)} entries, "
                f"degree is {deg}"
            )
        a, b = int(self.off[v]), int(self.off[v + 1])
        self.l1_dist[v] = s.l1_dist
        self.l1_parent[v] = s.l1_parent
        self.l1_color[v] = s.l1_color
        self.l2_dist[v] = s.l2_dist
        self.l2_parent[v] = s.l2_parent
        self.l2_color[v] = s.l2_color
        self.l3_arc[a:b] = np.asarray(s.l3_arc, dtype=bool)
        self.arc[a:b] = np.asarray(s.arc, dtype=bool)
        self.l4_branch[v] = s.l4_branch

    def validate(self) -> None:
        """Enforce the per-node state invariants against this layout."""
        cap = self.dist_cap
        degs = np.diff(self.off)
        for name, dist in (("l1_dist", self.l1_dist), ("l2_dist", self.l2_dist)):
            bad = np.flatnonzero((dist < 0) | (dist > cap))
            if bad.size:
                raise ConfigurationError(
                    f"node {int(bad[0])}: {name}={int(dist[bad[0]])} outside [0, {cap}]"
                )
        for name, par in (("l1_parent", self.l1_parent), ("l2_parent", self.l2_parent)):
            bad = np.flatnonzero((par < 0) | (par > degs))
            if bad.size:
                raise ConfigurationError(
                    f"node {int(bad[0])}: {name}={int(par[bad[0]])} is not a "
                    f"label in 1..{int(degs[bad[0]])} or SELF"
                )

    def copy(self) -> "Configuration":
        return Configuration(
            self.off,
            self.l1_dist.copy(), self.l1_parent.copy(), self.l1_color.copy(),
            self.l2_dist.copy(), self.l2_parent.copy(), self.l2_color.copy(),
            self.l3_arc.copy(), self.arc.copy(), self.l4_branch.copy(),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            np.array_equal(self.off, other.off)
            and np.array_equal(self.l1_dist, other.l1_dist)
            and np.array_equal(self.l1_parent, other.l1_parent)
            and np.array_equal(self.l1_color, other.l1_color)
            and np.array_equal(self.l2_dist, other.l2_dist)
            and np.array_equal(self.l2_parent, other.l2_parent)
            and np.array_equal(self.l2_color, other.l2_color)
            and np.array_equal(self.l3_arc, other.l3_arc)
            and np.array_equal(self.arc, other.arc)
            and np.array_equal(self.l4_branch, other.l4_branch)
        )

    __hash__ = None  # mutable

    def __repr__(self) -> str:
        return f"Configuration(n={self.n})"


def local_view(
    topo: Topology, roles: RoleAssignment, cfg: Configuration, v: int
) -> LocalView:
    """Assemble the read-only view node v evaluates its guards on."""
    nbs = tuple(
        NeighborView(state=cfg.state(u), reverse_label=topo.label_of(u, v))
        for u in topo.neighbors[v]
    )
    return LocalView(
        is_sender=v in roles.senders,
        is_target=v in roles.targets,
        state=cfg.state(v),
        neighbors=nbs,
        dist_cap=cfg.dist_cap,
    )


# -- serialization -------------------------------------------------------------


def save_configuration(path: str | Path, cfg: Configuration) -> None:
    states = []
    for v in range(cfg.n):
        s = cfg.state(v)
        states.append({
            "l1_dist": s.l1_dist, "l1_parent": s.l1_parent, "l1_color": s.l1_color,
            "l2_dist": s.l2_dist, "l2_parent": s.l2_parent, "l2_color": s.l2_color,
            "l3_arc": list(s.l3_arc), "arc": list(s.arc), "l4_branch": s.l4_branch,
        })
    Path(path).write_text(json.dumps({"states": states}, indent=1) + "\n")


def load_configuration(path: str | Path, topo: Topology) -> Configuration:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "states" not in doc:
        raise ConfigurationError(f"{path}: missing field 'states'")
    raw = doc["states"]
    if len(raw) != topo.n:
        raise ConfigurationError(
            f"{path}: configuration has {len(raw)} states, instance has {topo.n} nodes"
        )
    states = []
    for v, r in enumerate(raw):
        try:
            states.append(NodeState(
                l1_dist=int(r["l1_dist"]), l1_parent=int(r["l1_parent"]),
                l1_color=bool(r["l1_color"]), l2_dist=int(r["l2_dist"]),
                l2_parent=int(r["l2_parent"]), l2_color=bool(r["l2_color"]),
                l3_arc=tuple(bool(x) for x in r["l3_arc"]),
                arc=tuple(bool(x) for x in r["arc"]),
                l4_branch=bool(r["l4_branch"]),
            ))
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"{path}: node {v}: bad state record: {e}") from e
    return Configuration.from_states(topo, states)
