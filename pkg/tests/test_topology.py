"""Instance construction, generators, and file round-trips."""

from __future__ import annotations

import json

import pytest

from stdag.topology import (
    InstanceError,
    RoleAssignment,
    Topology,
    assign_roles,
    build_grid,
    build_random_connected,
    load_instance,
    permute_labels,
    save_instance,
)


class UnionFind:
    """Independent connectivity oracle for generator tests."""

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        self.parent[self.find(a)] = self.find(b)

    def components(self):
        return len({self.find(x) for x in range(len(self.parent))})


def connected_by_union_find(topo: Topology) -> bool:
    uf = UnionFind(topo.n)
    for u, v in topo.edges():
        uf.union(u, v)
    return uf.components() == 1


# -- grids ----------------------------------------------------------------------


@pytest.mark.parametrize("d,n,m,diam", [(6, 36, 60, 10), (2, 4, 4, 2), (3, 9, 12, 4)])
def test_grid_formulas(d, n, m, diam):
    topo = build_grid(d)
    assert topo.n == n
    assert topo.m == m
    assert topo.diameter() == diam


def test_grid_formulas_hold_across_sizes():
    for d in range(2, 13):
        topo = build_grid(d)
        assert topo.n == d * d
        assert topo.m == 2 * d * (d - 1)
        assert topo.diameter() == 2 * d - 2


def test_large_grid_dimensions():
    topo = build_grid(86)
    assert topo.n == 7396
    assert topo.m == 2 * 86 * 85
    # double-sweep BFS diameter; exact on grids
    assert topo.diameter() == 170


def test_grid_rejects_small_d():
    with pytest.raises(InstanceError):
        build_grid(1)


def test_grid_labels_are_canonical():
    assert build_grid(4).has_canonical_labels()


# -- random connected graphs ------------------------------------------------------


def test_random_connected_two_nodes_is_k2():
    topo = build_random_connected(2, 0.0, seed=5)
    assert topo.edges() == [(0, 1)]


def test_random_connected_full_density_is_complete():
    topo = build_random_connected(5, 1.0, seed=9)
    assert topo.m == 10


def test_random_connected_is_connected_and_deterministic():
    a = build_random_connected(30, 0.2, seed=7)
    b = build_random_connected(30, 0.2, seed=7)
    assert a.n == 30
    assert connected_by_union_find(a)
    assert a.edges() == b.edges()
    c = build_random_connected(30, 0.2, seed=8)
    assert connected_by_union_find(c)


@pytest.mark.parametrize("seed", range(12))
def test_random_connected_property_sweep(seed):
    n = 4 + seed * 3
    topo = build_random_connected(n, 0.05 + 0.07 * seed, seed=seed)
    assert connected_by_union_find(topo)
    for v in range(topo.n):
        ns = topo.neighbors[v]
        assert sorted({topo.label_of(v, u) for u in ns}) == list(range(1, len(ns) + 1))


def test_density_is_clamped():
    topo = build_random_connected(6, -3.0, seed=1)
    assert topo.m == 5  # spanning tree only
    topo = build_random_connected(6, 9.0, seed=1)
    assert topo.m == 15


# -- labels ------------------------------------------------------------------------


def test_permuted_labels_keep_graph_and_change_order():
    base = build_grid(4)
    perm = permute_labels(base, seed=3)
    assert perm.edges() == base.edges()
    assert not perm.has_canonical_labels()
    for v in range(perm.n):
        assert sorted(perm.neighbors[v]) == list(base.neighbors[v])


def test_reverse_label_table_is_consistent():
    topo = permute_labels(build_random_connected(15, 0.3, seed=2), seed=4)
    for v in range(topo.n):
        for u in topo.neighbors[v]:
            assert topo.neighbor(u, topo.label_of(u, v)) == v


def test_bad_label_permutation_rejected():
    with pytest.raises(InstanceError, match="node 0"):
        Topology.from_edges(3, [(0, 1), (0, 2)], labels=[[1, 1], [0], [0]])


# -- validation ---------------------------------------------------------------------


def test_disconnected_graph_rejected():
    with pytest.raises(InstanceError, match="connected"):
        Topology.from_edges(4, [(0, 1), (2, 3)])


def test_self_loop_rejected():
    with pytest.raises(InstanceError, match="self-loop"):
        Topology.from_edges(3, [(0, 0), (0, 1), (1, 2)])


def test_duplicate_edge_rejected():
    with pytest.raises(InstanceError, match="duplicate"):
        Topology.from_edges(3, [(0, 1), (1, 0), (1, 2)])


# -- roles -------------------------------------------------------------------------


def test_assign_roles_forced_on_two_nodes():
    topo = build_random_connected(2, 0.0, seed=0)
    roles = assign_roles(topo, 1, 1, seed=0)
    assert roles.senders | roles.targets == {0, 1}
    assert not roles.senders & roles.targets


def test_assign_roles_on_large_grid():
    topo = build_grid(86)
    roles = assign_roles(topo, 10, 10, seed=11)
    assert len(roles.senders) == 10
    assert len(roles.targets) == 10
    assert not roles.senders & roles.targets


def test_assign_roles_reproducible():
    topo = build_grid(6)
    a = assign_roles(topo, 5, 15, seed=3)
    b = assign_roles(topo, 5, 15, seed=3)
    assert a.senders == b.senders and a.targets == b.targets


def test_assign_roles_infeasible_counts():
    topo = build_grid(2)
    with pytest.raises(InstanceError):
        assign_roles(topo, 3, 2, seed=0)
    with pytest.raises(InstanceError):
        assign_roles(topo, 0, 1, seed=0)


# -- instance files -----------------------------------------------------------------


def test_round_trip_k2(tmp_path, single_edge):
    topo, roles = single_edge
    path = tmp_path / "k2.json"
    save_instance(path, topo, roles)
    topo2, roles2 = load_instance(path)
    assert topo2 == topo
    assert roles2 == roles


def test_round_trip_preserves_label_permutation(tmp_path):
    topo = permute_labels(build_grid(3), seed=6)
    roles = assign_roles(topo, 1, 2, seed=0)
    path = tmp_path / "perm.json"
    save_instance(path, topo, roles)
    doc = json.loads(path.read_text())
    assert doc["labels"] == [list(ns) for ns in topo.neighbors]
    topo2, _ = load_instance(path)
    assert topo2.neighbors == topo.neighbors


def test_overlapping_roles_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "nodes": 3, "edges": [[0, 1], [1, 2]], "senders": [0, 1], "targets": [1],
    }))
    with pytest.raises(InstanceError, match="overlap"):
        load_instance(path)


def test_disconnected_instance_file_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "nodes": 4, "edges": [[0, 1], [2, 3]], "senders": [0], "targets": [1],
    }))
    with pytest.raises(InstanceError, match="connected"):
        load_instance(path)


def test_malformed_file_reports_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(InstanceError, match="JSON"):
        load_instance(path)
    path.write_text(json.dumps({"nodes": 3, "edges": [[0, 1], [1, 2]], "senders": [0]}))
    with pytest.raises(InstanceError, match="targets"):
        load_instance(path)


def test_role_validation():
    with pytest.raises(InstanceError, match="at least one"):
        RoleAssignment(frozenset(), frozenset({1})).validate(3)
    with pytest.raises(InstanceError, match="out of range"):
        RoleAssignment(frozenset({0}), frozenset({9})).validate(3)
