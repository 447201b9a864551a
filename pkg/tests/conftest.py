"""Shared fixtures and small builders used across the test modules."""

from __future__ import annotations

import pytest

from stdag.protocol import LocalView, NeighborView, NodeState
from stdag.topology import RoleAssignment, Topology


@pytest.fixture
def p3():
    """Path s - a - t: nodes 0, 1, 2 with S = {0}, T = {2}."""
    topo = Topology.from_edges(3, [(0, 1), (1, 2)])
    roles = RoleAssignment(senders=frozenset({0}), targets=frozenset({2}))
    return topo, roles


@pytest.fixture
def single_edge():
    """K2 with S = {0}, T = {1}."""
    topo = Topology.from_edges(2, [(0, 1)])
    roles = RoleAssignment(senders=frozenset({0}), targets=frozenset({1}))
    return topo, roles


def mk_state(
    degree: int,
    l1_dist: int = 0,
    l1_parent: int = 0,
    l1_color: bool = False,
    l2_dist: int = 0,
    l2_parent: int = 0,
    l2_color: bool = False,
    l3_arc=None,
    arc=None,
    l4_branch: bool = False,
) -> NodeState:
    if l3_arc is None:
        l3_arc = (False,) * degree
    if arc is None:
        arc = (False,) * degree
    return NodeState(
        l1_dist=l1_dist, l1_parent=l1_parent, l1_color=l1_color,
        l2_dist=l2_dist, l2_parent=l2_parent, l2_color=l2_color,
        l3_arc=tuple(l3_arc), arc=tuple(arc), l4_branch=l4_branch,
    )


def mk_view(
    state: NodeState,
    neighbors,
    is_sender: bool = False,
    is_target: bool = False,
    dist_cap: int = 50,
) -> LocalView:
    """``neighbors`` is a list of (NodeState, reverse_label) pairs, label order."""
    return LocalView(
        is_sender=is_sender,
        is_target=is_target,
        state=state,
        neighbors=tuple(NeighborView(state=s, reverse_label=r) for s, r in neighbors),
        dist_cap=dist_cap,
    )
