"""Vectorized whole-configuration evaluation of the guarded actions.

This mirrors :mod:`stdag.protocol` exactly, but computes every node's guards
and assignment targets in one pass over flat arrays, which keeps synchronous
stepping on multi-thousand-node instances fast. The per-node functions remain
the reference semantics; the equivalence between the two paths is asserted by
the test suite on randomized configurations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .configuration import Configuration
from .topology import RoleAssignment, Topology

_BIG = np.iinfo(np.int64).max

# action rank (1..11) -> layer
LAYER_OF_RANK = np.array([0, 1, 1, 1, 2, 2, 2, 3, 4, 4, 4, 4], dtype=np.int8)


class Network:
    """A topology plus roles, flattened for array evaluation."""

    def __init__(self, topo: Topology, roles: RoleAssignment):
        roles.validate(topo.n)
        self.topo = topo
        self.roles = roles
        c = topo.csr()
        self.n = topo.n
        self.cap = topo.n
        self.off = c.off
        self.nbr = c.nbr.astype(np.int64)
        self.rev = c.rev
        self.mirror = c.mirror
        self.slot_node = c.slot_node.astype(np.int64)
        self.slot_pos = c.slot_pos
        self.slot_label = (c.slot_pos + 1).astype(np.int32)
        self.seg_starts = c.off[:-1]
        self.is_sender = np.zeros(self.n, dtype=bool)
        self.is_sender[sorted(roles.senders)] = True
        self.is_target = np.zeros(self.n, dtype=bool)
        self.is_target[sorted(roles.targets)] = True


@dataclass
class Eval:
    """Per-node assignment targets and the enabled-action ranks for one configuration."""

    rank: np.ndarray          # int8[n], 0 = disabled, else Action value
    l1_dist_t: np.ndarray
    l1_parent_t: np.ndarray
    l1_color_t: np.ndarray
    l2_dist_t: np.ndarray
    l2_parent_t: np.ndarray
    l2_color_t: np.ndarray
    has_l3: np.ndarray        # bool[slots]
    wrong_l3: np.ndarray      # bool[slots]
    wrong_arc: np.ndarray     # bool[slots]
    branch_t: np.ndarray      # bool[n]
    missing: np.ndarray       # bool[slots]
    redundant_set: np.ndarray  # bool[slots]

    @property
    def enabled(self) -> np.ndarray:
        return self.rank > 0

    @property
    def layers(self) -> np.ndarray:
        """Layer of each node's enabled action; 0 when disabled."""
        return LAYER_OF_RANK[self.rank]


def _seg_min(values: np.ndarray, net: Network) -> np.ndarray:
    return np.minimum.reduceat(values, net.seg_starts)


def _seg_any(flags: np.ndarray, net: Network) -> np.ndarray:
    return np.logical_or.reduceat(flags, net.seg_starts)


def _seg_all(flags: np.ndarray, net: Network) -> np.ndarray:
    return np.logical_and.reduceat(flags, net.seg_starts)


def _first_argmin_label(values: np.ndarray, seg_min: np.ndarray, net: Network) -> np.ndarray:
    """Smallest label attaining the per-node minimum (labels are slot order)."""
    cand = np.where(values == seg_min[net.slot_node], net.slot_pos, _BIG)
    return (np.minimum.reduceat(cand, net.seg_starts) + 1).astype(np.int32)


def evaluate(net: Network, cfg: Configuration) -> Eval:
    u = net.nbr
    sn = net.slot_node

    # layer 1
    nd1 = cfg.l1_dist[u].astype(np.int64)
    m1 = _seg_min(nd1, net)
    l1_dist_t = np.where(net.is_sender, 0, np.minimum(m1 + 1, net.cap)).astype(np.int32)
    l1_parent_t = np.where(
        net.is_sender, 0, _first_argmin_label(nd1, m1, net)
    ).astype(np.int32)
    points_back_l1 = cfg.l1_parent[u] == net.rev
    red_child = points_back_l1 & cfg.l1_color[u]
    any_red_child = _seg_any(red_child, net)
    l1_color_t = net.is_target | any_red_child

    # layer 2
    nd2 = cfg.l2_dist[u].astype(np.int64)
    m2 = _seg_min(nd2, net)
    l2_dist_t = np.where(cfg.l1_color, 0, np.minimum(m2 + 1, net.cap)).astype(np.int32)
    l2_parent_t = np.where(
        cfg.l1_color, 0, _first_argmin_label(nd2, m2, net)
    ).astype(np.int32)
    blue_child = (cfg.l2_parent[u] == net.rev) & cfg.l2_color[u]
    any_blue_child = _seg_any(blue_child, net)
    l2_color_t = ~cfg.l1_color & (net.is_sender | any_blue_child)

    # layer 3
    has_l3 = (cfg.l1_color[sn] & red_child) | (
        cfg.l2_color[sn] & (cfg.l2_parent[sn] == net.slot_label)
    )
    wrong_l3 = cfg.l3_arc != has_l3
    any_wrong_l3 = _seg_any(wrong_l3, net)

    # layer 4
    wrong_arc = ~cfg.l3_arc & cfg.arc
    any_wrong_arc = _seg_any(wrong_arc, net)

    branch_child = points_back_l1 & cfg.l4_branch[u]
    any_branch_child = _seg_any(branch_child, net)
    eq_branch_red = _seg_all(branch_child == red_child, net)
    subset = _seg_all(~branch_child | red_child, net)
    strict = _seg_any(red_child & ~branch_child, net)
    proper_subset = subset & strict

    branch_t = cfg.l1_color & (
        any_blue_child | (eq_branch_red & any_red_child & ~net.is_target)
    )

    cand = np.where(branch_child, net.slot_pos, _BIG)
    min_branch_pos = np.minimum.reduceat(cand, net.seg_starts)

    rule1 = branch_child & proper_subset[sn]
    rule2 = branch_child & eq_branch_red[sn] & (net.slot_pos != min_branch_pos[sn])
    rule3 = branch_child & eq_branch_red[sn] & net.is_target[sn]

    has_parent = cfg.l1_parent != 0
    pslot = np.where(has_parent, net.off[:-1] + cfg.l1_parent - 1, 0)
    parent_arc = cfg.arc[net.mirror[pslot]]
    rule4 = has_parent & ~parent_arc & ~any_blue_child

    redundant = rule1 | rule2 | rule3 | rule4[sn]
    missing = ~redundant & ~cfg.arc & cfg.l3_arc
    any_missing = _seg_any(missing, net)
    redundant_set = redundant & cfg.arc
    any_redundant = _seg_any(redundant_set, net)

    guards = (
        cfg.l1_dist != l1_dist_t,
        cfg.l1_parent != l1_parent_t,
        cfg.l1_color != l1_color_t,
        cfg.l2_dist != l2_dist_t,
        cfg.l2_parent != l2_parent_t,
        cfg.l2_color != l2_color_t,
        any_wrong_l3,
        any_wrong_arc,
        cfg.l4_branch != branch_t,
        any_missing,
        any_redundant,
    )
    rank = np.zeros(net.n, dtype=np.int8)
    for i in range(len(guards) - 1, -1, -1):
        rank[guards[i]] = i + 1

    return Eval(
        rank=rank,
        l1_dist_t=l1_dist_t, l1_parent_t=l1_parent_t, l1_color_t=l1_color_t,
        l2_dist_t=l2_dist_t, l2_parent_t=l2_parent_t, l2_color_t=l2_color_t,
        has_l3=has_l3, wrong_l3=wrong_l3, wrong_arc=wrong_arc,
        branch_t=branch_t, missing=missing, redundant_set=redundant_set,
    )


def apply(net: Network, cfg: Configuration, ev: Eval, active: np.ndarray) -> Configuration:
    """New configuration after the active nodes execute their enabled actions.

    Everything is read from ``cfg`` (the pre-step snapshot); active nodes must
    all be enabled.
    """
    if not np.all(ev.rank[active] > 0):
        bad = int(np.flatnonzero(active & (ev.rank == 0))[0])
        raise ValueError(f"node {bad} is not enabled")
    r = ev.rank
    new = cfg.copy()

    def node_hit(k: int) -> np.ndarray:
        return active & (r == k)

    new.l1_dist[node_hit(1)] = ev.l1_dist_t[node_hit(1)]
    new.l1_parent[node_hit(2)] = ev.l1_parent_t[node_hit(2)]
    new.l1_color[node_hit(3)] = ev.l1_color_t[node_hit(3)]
    new.l2_dist[node_hit(4)] = ev.l2_dist_t[node_hit(4)]
    new.l2_parent[node_hit(5)] = ev.l2_parent_t[node_hit(5)]
    new.l2_color[node_hit(6)] = ev.l2_color_t[node_hit(6)]
    new.l4_branch[node_hit(9)] = ev.branch_t[node_hit(9)]

    sn = net.slot_node
    act_s = active[sn]
    r_s = r[sn]
    fix_l3 = act_s & (r_s == 7) & ev.wrong_l3
    new.l3_arc[fix_l3] = ev.has_l3[fix_l3]
    drop = (act_s & (r_s == 8) & ev.wrong_arc) | (act_s & (r_s == 11) & ev.redundant_set)
    add = act_s & (r_s == 10) & ev.missing
    new.arc[drop] = False
    new.arc[add] = True
    return new
