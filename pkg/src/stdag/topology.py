"""Problem instances: labeled undirected graphs and sender/target roles.

A topology is a simple connected graph in which every node orders its
neighbors by local labels ``1..degree``. Nodes are anonymous from the
protocol's point of view: node indices exist only for bookkeeping (arrays,
files, metrics). The label order is therefore part of the instance, and two
endpoints of an edge generally disagree about each other's label, so each
node also knows the reverse label its neighbor assigned to it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class InstanceError(ValueError):
    """Malformed instance data: bad generator parameters or file contents."""


@dataclass(frozen=True)
class RoleAssignment:
    """Disjoint, nonempty sets of sender and target node ids."""

    senders: frozenset[int]
    targets: frozenset[int]

    def validate(self, n: int) -> None:
        if not self.senders:
            raise InstanceError("senders: at least one sender is required")
        if not self.targets:
            raise InstanceError("targets: at least one target is required")
        overlap = self.senders & self.targets
        if overlap:
            raise InstanceError(f"senders/targets overlap: {sorted(overlap)}")
        for name, ids in (("senders", self.senders), ("targets", self.targets)):
            bad = [v for v in ids if not (0 <= v < n)]
            if bad:
                raise InstanceError(f"{name}: node ids out of range [0, {n}): {sorted(bad)}")


@dataclass(frozen=True)
class CsrArrays:
    """Flat arrays over directed neighbor slots, in per-node label order.

    Node ``v`` owns slots ``off[v] .. off[v+1]-1``; slot ``off[v]+k`` points
    to the neighbor carrying label ``k+1`` at v. ``rev`` stores the label the
    neighbor assigns back to v, and ``mirror`` the index of the opposite slot,
    so per-slot arrays can be read "from the other end" of an edge.
    """

    off: np.ndarray        # int64[n+1]
    nbr: np.ndarray        # int32[slots], neighbor node id
    rev: np.ndarray        # int32[slots], reverse label (1-based)
    mirror: np.ndarray     # int64[slots], slot index of the reverse direction
    slot_node: np.ndarray  # int32[slots], owner node of each slot
    slot_pos: np.ndarray   # int64[slots], 0-based position within the owner's segment


class Topology:
    """Simple connected undirected graph with per-node neighbor labels.

    ``neighbors[v]`` lists v's neighbors in label order. Instances are
    immutable after construction and safe to share across workers.
    """

    def __init__(self, neighbors: tuple[tuple[int, ...], ...]):
        self.neighbors = tuple(tuple(ns) for ns in neighbors)
        self.n = len(self.neighbors)
        self._validate()
        self._label_index = tuple(
            {u: k + 1 for k, u in enumerate(ns)} for ns in self.neighbors
        )
        self._csr: CsrArrays | None = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: list[tuple[int, int]],
        labels: list[list[int]] | None = None,
    ) -> "Topology":
        """Build a topology from an edge list.

        ``labels``, when given, fixes each node's neighbor order explicitly
        (``labels[v]`` = neighbor ids in label order); otherwise the canonical
        labeling is used: label rank follows ascending neighbor id.
        """
        if n < 2:
            raise InstanceError(f"nodes: need at least 2 nodes, got {n}")
        adj: list[set[int]] = [set() for _ in range(n)]
        for i, e in enumerate(edges):
            if len(e) != 2:
                raise InstanceError(f"edge {i}: expected a pair, got {e!r}")
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise InstanceError(f"edge {i}: self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InstanceError(f"edge {i}: ({u}, {v}) out of range [0, {n})")
            if v in adj[u]:
                raise InstanceError(f"edge {i}: duplicate edge ({u}, {v})")
            adj[u].add(v)
            adj[v].add(u)
        if labels is None:
            ordered = tuple(tuple(sorted(a)) for a in adj)
        else:
            if len(labels) != n:
                raise InstanceError(f"labels: expected {n} entries, got {len(labels)}")
            ordered_lists = []
            for v, perm in enumerate(labels):
                if set(perm) != adj[v] or len(perm) != len(adj[v]):
                    raise InstanceError(
                        f"labels: node {v} entry is not a permutation of its neighbors "
                        f"{sorted(adj[v])}"
                    )
                ordered_lists.append(tuple(int(u) for u in perm))
            ordered = tuple(ordered_lists)
        return cls(ordered)

    def _validate(self) -> None:
        if self.n < 2:
            raise InstanceError(f"nodes: need at least 2 nodes, got {self.n}")
        for v, ns in enumerate(self.neighbors):
            if len(ns) == 0:
                raise InstanceError(f"node {v}: isolated node (graph must be connected)")
            if len(set(ns)) != len(ns):
                raise InstanceError(f"node {v}: duplicate neighbors {ns}")
            for u in ns:
                if not (0 <= u < self.n):
                    raise InstanceError(f"node {v}: neighbor {u} out of range")
                if u == v:
                    raise InstanceError(f"node {v}: self-loop")
                if v not in self.neighbors[u]:
                    raise InstanceError(f"edge ({v}, {u}) is not symmetric")
        # connectivity by plain traversal
        seen = [False] * self.n
        stack = [0]
        seen[0] = True
        count = 1
        while stack:
            v = stack.pop()
            for u in self.neighbors[v]:
                if not seen[u]:
                    seen[u] = True
                    count += 1
                    stack.append(u)
        if count != self.n:
            raise InstanceError("graph is not connected")

    # -- queries ------------------------------------------------------------

    @property
    def m(self) -> int:
        return sum(len(ns) for ns in self.neighbors) // 2

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def label_of(self, v: int, u: int) -> int:
        """Label (1-based) node v assigns to its neighbor u."""
        return self._label_index[v][u]

    def neighbor(self, v: int, label: int) -> int:
        """Neighbor of v carrying the given label."""
        return self.neighbors[v][label - 1]

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as sorted (min, max) pairs."""
        out = set()
        for v, ns in enumerate(self.neighbors):
            for u in ns:
                out.add((v, u) if v < u else (u, v))
        return sorted(out)

    def has_canonical_labels(self) -> bool:
        return all(tuple(sorted(ns)) == ns for ns in self.neighbors)

    def bfs_distances(self, sources: list[int]) -> list[int]:
        """Hop distances from the nearest source; -1 for unreachable."""
        from collections import deque

        dist = [-1] * self.n
        q = deque()
        for s in sources:
            if dist[s] == -1:
                dist[s] = 0
                q.append(s)
        while q:
            v = q.popleft()
            for u in self.neighbors[v]:
                if dist[u] == -1:
                    dist[u] = dist[v] + 1
                    q.append(u)
        return dist

    def eccentricity(self, v: int) -> int:
        return max(self.bfs_distances([v]))

    def diameter(self, exact_limit: int = 4096) -> int:
        """Graph diameter via BFS.

        Exact (all-sources) up to ``exact_limit`` nodes; beyond that a double
        sweep is used, which is exact on trees and grids and a lower bound in
        general.
        """
        if self.n <= exact_limit:
            return max(self.eccentricity(v) for v in range(self.n))
        first = self.bfs_distances([0])
        far = max(range(self.n), key=first.__getitem__)
        return self.eccentricity(far)

    def csr(self) -> CsrArrays:
        """Flat slot arrays for vectorized evaluation (built once, cached)."""
        if self._csr is None:
            degs = np.array([len(ns) for ns in self.neighbors], dtype=np.int64)
            off = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(degs, out=off[1:])
            total = int(off[-1])
            nbr = np.empty(total, dtype=np.int32)
            rev = np.empty(total, dtype=np.int32)
            slot_node = np.empty(total, dtype=np.int32)
            slot_pos = np.empty(total, dtype=np.int64)
            for v, ns in enumerate(self.neighbors):
                base = off[v]
                for k, u in enumerate(ns):
                    nbr[base + k] = u
                    rev[base + k] = self._label_index[u][v]
                    slot_node[base + k] = v
                    slot_pos[base + k] = k
            mirror = off[nbr.astype(np.int64)] + rev.astype(np.int64) - 1
            self._csr = CsrArrays(off, nbr, rev, mirror, slot_node, slot_pos)
        return self._csr

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Topology) and self.neighbors == other.neighbors

    def __hash__(self):
        return hash(self.neighbors)

    def __repr__(self) -> str:
        return f"Topology(n={self.n}, m={self.m})"


# -- generators --------------------------------------------------------------


def build_grid(d: int) -> Topology:
    """d x d grid with canonical labels; n = d^2, m = 2d(d-1), diameter 2d-2."""
    if d < 2:
        raise InstanceError(f"grid size must be >= 2, got d={d}")
    edges = []
    for r in range(d):
        for c in range(d):
            v = r * d + c
            if c + 1 < d:
                edges.append((v, v + 1))
            if r + 1 < d:
                edges.append((v, v + d))
    return Topology.from_edges(d * d, edges)


def build_random_connected(n: int, edge_density: float, seed) -> Topology:
    """Random simple connected graph, deterministic per seed.

    A random spanning tree guarantees connectivity; extra edges are then
    sampled uniformly until the edge count reaches ``edge_density`` of the
    possible pairs (clamped to the feasible range [n-1, n(n-1)/2]).
    """
    if n < 2:
        raise InstanceError(f"nodes: need at least 2 nodes, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges: set[tuple[int, int]] = set()
    for i in range(1, n):
        u = int(order[i])
        v = int(order[int(rng.integers(0, i))])
        edges.add((u, v) if u < v else (v, u))
    max_m = n * (n - 1) // 2
    target_m = int(round(max(0.0, min(1.0, edge_density)) * max_m))
    target_m = max(n - 1, min(max_m, target_m))
    if target_m > len(edges):
        candidates = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if (u, v) not in edges
        ]
        picks = rng.choice(len(candidates), size=target_m - len(edges), replace=False)
        for i in sorted(int(p) for p in picks):
            edges.add(candidates[i])
    return Topology.from_edges(n, sorted(edges))


def permute_labels(topo: Topology, seed) -> Topology:
    """Same graph, with every node's neighbor labels independently shuffled.

    Tie-breaks in the protocol depend only on label order, so this exercises
    label-permutation sensitivity without changing the underlying graph.
    """
    rng = np.random.default_rng(seed)
    shuffled = tuple(
        tuple(ns[i] for i in rng.permutation(len(ns))) for ns in topo.neighbors
    )
    return Topology(shuffled)


def assign_roles(topo: Topology, s_count: int, t_count: int, seed) -> RoleAssignment:
    """Disjoint uniformly random sender/target sets of the requested sizes."""
    if s_count < 1 or t_count < 1:
        raise InstanceError(
            f"role counts must be >= 1, got senders={s_count}, targets={t_count}"
        )
    if s_count + t_count > topo.n:
        raise InstanceError(
            f"role counts infeasible: {s_count} + {t_count} > {topo.n} nodes"
        )
    rng = np.random.default_rng(seed)
    picks = rng.choice(topo.n, size=s_count + t_count, replace=False)
    roles = RoleAssignment(
        senders=frozenset(int(v) for v in picks[:s_count]),
        targets=frozenset(int(v) for v in picks[s_count:]),
    )
    roles.validate(topo.n)
    return roles


# -- instance files -----------------------------------------------------------


def save_instance(path: str | Path, topo: Topology, roles: RoleAssignment) -> None:
    """Write an instance file (JSON).

    The ``labels`` field is emitted only for non-canonical labelings, so the
    canonical case round-trips to a file without it.
    """
    doc: dict = {
        "nodes": topo.n,
        "edges": [[u, v] for u, v in topo.edges()],
        "senders": sorted(roles.senders),
        "targets": sorted(roles.targets),
    }
    if not topo.has_canonical_labels():
        doc["labels"] = [list(ns) for ns in topo.neighbors]
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_instance(path: str | Path) -> tuple[Topology, RoleAssignment]:
    """Read and validate an instance file; labels are preserved exactly."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise InstanceError(f"{path}: expected a JSON object")
    for field in ("nodes", "edges", "senders", "targets"):
        if field not in doc:
            raise InstanceError(f"{path}: missing field '{field}'")
    n = doc["nodes"]
    if not isinstance(n, int) or n < 2:
        raise InstanceError(f"{path}: field 'nodes' must be an integer >= 2")
    edges = [(e[0], e[1]) for e in doc["edges"]]
    labels = doc.get("labels")
    topo = Topology.from_edges(n, edges, labels=labels)
    roles = RoleAssignment(
        senders=frozenset(int(v) for v in doc["senders"]),
        targets=frozenset(int(v) for v in doc["targets"]),
    )
    roles.validate(n)
    return topo, roles
