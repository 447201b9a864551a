"""Per-node semantics of the four-layer guarded-action protocol.

Every function here is a pure function of a node's local view: its own role
flags and state plus the full states of its labeled neighbors. Nothing global
is visible. The protocol stacks four layers:

1. a BFS spanning forest rooted at the senders, with a "red" flag propagated
   bottom-up marking nodes whose subtree holds a target;
2. a second BFS forest rooted at the red nodes, with a "blue" flag marking
   non-red nodes whose subtree holds a sender;
3. candidate DAG arcs derived from both forests (red parent -> red child,
   blue child -> its forest parent);
4. output arcs copied from layer 3 minus redundant ones, located via "branch"
   flags and four removal rules.

Actions are strictly prioritized: within a layer by their order below, across
layers by layer number, so a node's action of layer k is enabled only while
all of its guards from layers < k are false. At most one action is enabled on
a node at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import NamedTuple

SELF = 0
"""Parent-label sentinel: the node itself rather than a neighbor label."""


class Action(IntEnum):
    """The eleven actions, in descending priority (ascending value)."""

    L1_FIX_DIST = 1
    L1_FIX_PARENT = 2
    L1_FIX_COLOR = 3
    L2_FIX_DIST = 4
    L2_FIX_PARENT = 5
    L2_FIX_COLOR = 6
    L3_FIX_ARC = 7
    L4_REMOVE_WRONG_ARC = 8
    L4_FIX_BRANCH = 9
    L4_ADD_ARC = 10
    L4_REMOVE_REDUNDANT_ARC = 11

    @property
    def layer(self) -> int:
        v = int(self)
        if v <= 3:
            return 1
        if v <= 6:
            return 2
        if v == 7:
            return 3
        return 4


@dataclass(frozen=True)
class NodeState:
    """The nine per-node protocol variables.

    Parent fields hold a neighbor label in ``1..degree`` or :data:`SELF`.
    Distance fields are capped at the node count of the instance, with
    saturating increments, so corrupted values stay representable.
    ``l3_arc`` and ``arc`` have one flag per neighbor label.
    """

    l1_dist: int
    l1_parent: int
    l1_color: bool
    l2_dist: int
    l2_parent: int
    l2_color: bool
    l3_arc: tuple[bool, ...]
    arc: tuple[bool, ...]
    l4_branch: bool

    @classmethod
    def zero(cls, degree: int) -> "NodeState":
        off = (False,) * degree
        return cls(0, SELF, False, 0, SELF, False, off, off, False)


@dataclass(frozen=True)
class NeighborView:
    """A neighbor's full state plus the label it assigns back to the viewer."""

    state: NodeState
    reverse_label: int


@dataclass(frozen=True)
class LocalView:
    """Everything a node may read: own roles and state, neighbor states.

    ``neighbors[k]`` is the neighbor carrying label ``k + 1``.
    """

    is_sender: bool
    is_target: bool
    state: NodeState
    neighbors: tuple[NeighborView, ...]
    dist_cap: int

    @property
    def degree(self) -> int:
        return len(self.neighbors)


class Redundancy(NamedTuple):
    """Removal-rule breakdown for one outgoing arc direction."""

    rule1: bool
    rule2: bool
    rule3: bool
    rule4: bool
    redundant: bool


# -- layer 1: sender forest and red flags -------------------------------------


def _nearest(dists: list[int]) -> tuple[int, int]:
    """Minimum neighbor distance and the smallest label attaining it."""
    best = min(dists)
    return best, dists.index(best) + 1


def red_children(view: LocalView) -> list[int]:
    """Labels of neighbors that point at this node in layer 1 and are red."""
    return [
        k + 1
        for k, nb in enumerate(view.neighbors)
        if nb.state.l1_parent == nb.reverse_label and nb.state.l1_color
    ]


def l1_targets(view: LocalView) -> tuple[int, int, bool]:
    """Fixpoint values for (l1_dist, l1_parent, l1_color).

    Senders sit at distance 0 and parent SELF; everyone else tracks the
    minimum neighbor distance plus one (saturating at the cap) and adopts the
    smallest label among the neighbors attaining that minimum. A node is red
    iff it is a target or has a red child.
    """
    if view.is_sender:
        dist, parent = 0, SELF
    else:
        nd, label = _nearest([nb.state.l1_dist for nb in view.neighbors])
        dist, parent = min(nd + 1, view.dist_cap), label
    color = view.is_target or bool(red_children(view))
    return dist, parent, color


# -- layer 2: red-rooted forest and blue flags ---------------------------------


def blue_children(view: LocalView) -> list[int]:
    """Labels of neighbors that point at this node in layer 2 and are blue."""
    return [
        k + 1
        for k, nb in enumerate(view.neighbors)
        if nb.state.l2_parent == nb.reverse_label and nb.state.l2_color
    ]


def l2_targets(view: LocalView) -> tuple[int, int, bool]:
    """Fixpoint values for (l2_dist, l2_parent, l2_color).

    Red nodes are the roots here. A node is blue iff it is not red and is
    either a sender or has a blue child; blue marks the paths that lead
    otherwise-colorless senders to the red region.
    """
    if view.state.l1_color:
        dist, parent = 0, SELF
    else:
        nd, label = _nearest([nb.state.l2_dist for nb in view.neighbors])
        dist, parent = min(nd + 1, view.dist_cap), label
    color = (not view.state.l1_color) and (view.is_sender or bool(blue_children(view)))
    return dist, parent, color


# -- layer 3: candidate DAG arcs ----------------------------------------------


def l3_target_arcs(view: LocalView) -> tuple[bool, ...]:
    """Which outgoing arc flags layer 3 wants set, one per neighbor label.

    A red node points at each red child; a blue node points at its layer-2
    parent. Colorless nodes carry no arcs.
    """
    reds = set(red_children(view))
    s = view.state
    return tuple(
        (s.l1_color and (k + 1) in reds)
        or (s.l2_color and s.l2_parent == k + 1)
        for k in range(view.degree)
    )


# -- layer 4: branch flags and arc removal -------------------------------------


def branch_children(view: LocalView) -> list[int]:
    """Labels of layer-1 children whose branch flag is set."""
    return [
        k + 1
        for k, nb in enumerate(view.neighbors)
        if nb.state.l1_parent == nb.reverse_label and nb.state.l4_branch
    ]


def is_branch(view: LocalView) -> bool:
    """Branch predicate: a red node that either has a blue child, or is a
    non-target all of whose layer-1 children are red and flagged branch
    (at least one child required)."""
    if not view.state.l1_color:
        return False
    if blue_children(view):
        return True
    bc = set(branch_children(view))
    rc = set(red_children(view))
    return bc == rc and bool(rc) and not view.is_target


def _parent_arc_toward_self(view: LocalView) -> bool | None:
    """The layer-1 parent's output-arc flag toward this node; None if rootless."""
    p = view.state.l1_parent
    if p == SELF:
        return None
    nb = view.neighbors[p - 1]
    return nb.state.arc[nb.reverse_label - 1]


def redundancy(view: LocalView, label: int) -> Redundancy:
    """Evaluate the four removal rules for the arc toward ``label``.

    Rule 1: arcs to branch children go when some red child is not a branch.
    Rule 2: when all red children are branch, all but the minimum-label
    branch child go. Rule 3: a target with all red children branch drops
    every branch arc. Rule 4 (per node, not per arc): a non-root whose
    parent dropped its incoming arc and that feeds no blue child clears all
    of its arcs.
    """
    bc = branch_children(view)
    rc = red_children(view)
    bc_set, rc_set = set(bc), set(rc)
    in_bc = label in bc_set
    eq = bc_set == rc_set
    rule1 = in_bc and bc_set < rc_set
    rule2 = in_bc and eq and label != min(bc)
    rule3 = in_bc and eq and view.is_target
    parent_arc = _parent_arc_toward_self(view)
    rule4 = (
        view.state.l1_parent != SELF
        and not parent_arc
        and not blue_children(view)
    )
    return Redundancy(rule1, rule2, rule3, rule4, rule1 or rule2 or rule3 or rule4)


def wrong_arc_dests(view: LocalView) -> list[int]:
    """Labels with an output arc not backed by layer 3."""
    s = view.state
    return [k + 1 for k in range(view.degree) if s.arc[k] and not s.l3_arc[k]]


def missing_arc_dests(view: LocalView) -> list[int]:
    """Labels where a non-redundant layer-3 arc is absent from the output."""
    s = view.state
    return [
        k + 1
        for k in range(view.degree)
        if s.l3_arc[k] and not s.arc[k] and not redundancy(view, k + 1).redundant
    ]


def redundant_arc_dests(view: LocalView) -> list[int]:
    """Labels whose present output arc is redundant by some removal rule."""
    s = view.state
    return [
        k + 1 for k in range(view.degree) if s.arc[k] and redundancy(view, k + 1).redundant
    ]


# -- guards, priority, and action application ----------------------------------


def _raw_guards(view: LocalView) -> tuple[bool, ...]:
    s = view.state
    d1, p1, c1 = l1_targets(view)
    d2, p2, c2 = l2_targets(view)
    l3 = l3_target_arcs(view)
    return (
        s.l1_dist != d1,
        s.l1_parent != p1,
        s.l1_color != c1,
        s.l2_dist != d2,
        s.l2_parent != p2,
        s.l2_color != c2,
        s.l3_arc != l3,
        bool(wrong_arc_dests(view)),
        s.l4_branch != is_branch(view),
        bool(missing_arc_dests(view)),
        bool(redundant_arc_dests(view)),
    )


def composed_guards(view: LocalView) -> tuple[bool, ...]:
    """The eleven guards after priority masking: at most one can be true."""
    raw = _raw_guards(view)
    out = []
    blocked = False
    for g in raw:
        out.append(g and not blocked)
        blocked = blocked or g
    return tuple(out)


def enabled_action(view: LocalView) -> Action | None:
    """The unique enabled action, or None when the node is disabled."""
    for i, g in enumerate(_raw_guards(view)):
        if g:
            return Action(i + 1)
    return None


def apply_action(view: LocalView, action: Action) -> NodeState:
    """State after executing ``action``; exactly that action's assignment runs.

    The caller must pass the currently enabled action.
    """
    assert action == enabled_action(view), f"{action!r} is not enabled"
    s = view.state
    if action in (Action.L1_FIX_DIST, Action.L1_FIX_PARENT, Action.L1_FIX_COLOR):
        d, p, c = l1_targets(view)
        if action == Action.L1_FIX_DIST:
            return replace(s, l1_dist=d)
        if action == Action.L1_FIX_PARENT:
            return replace(s, l1_parent=p)
        return replace(s, l1_color=c)
    if action in (Action.L2_FIX_DIST, Action.L2_FIX_PARENT, Action.L2_FIX_COLOR):
        d, p, c = l2_targets(view)
        if action == Action.L2_FIX_DIST:
            return replace(s, l2_dist=d)
        if action == Action.L2_FIX_PARENT:
            return replace(s, l2_parent=p)
        return replace(s, l2_color=c)
    if action == Action.L3_FIX_ARC:
        return replace(s, l3_arc=l3_target_arcs(view))
    if action == Action.L4_REMOVE_WRONG_ARC:
        gone = set(wrong_arc_dests(view))
        return replace(
            s, arc=tuple(False if k + 1 in gone else a for k, a in enumerate(s.arc))
        )
    if action == Action.L4_FIX_BRANCH:
        return replace(s, l4_branch=is_branch(view))
    if action == Action.L4_ADD_ARC:
        add = set(missing_arc_dests(view))
        return replace(
            s, arc=tuple(True if k + 1 in add else a for k, a in enumerate(s.arc))
        )
    gone = set(redundant_arc_dests(view))
    return replace(
        s, arc=tuple(False if k + 1 in gone else a for k, a in enumerate(s.arc))
    )
