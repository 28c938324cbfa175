"""The incremental dependency graph: nodes for incremental tabled subgoals,
leaf patterns for dynamic incremental calls, falsecount invalidation,
validity propagation and dependency collection for lazy recomputation.
"""

from __future__ import annotations

import itertools
from typing import Optional

from .errors import InternalStateError, PermissionViolation
from .terms import Term, abstract_depth, canonical_key, format_term, unify

COMPUTE_DEPENDENCIES_FIRST = "compute_dependencies_first"
COMPUTE_DIRECTLY = "compute_directly"

_node_serial = itertools.count(1)


class IdgNode:
    """Node for an incremental tabled subgoal.

    Edge dicts are insertion-ordered; sibling order in traversals is edge
    insertion order, pinned by golden tests.
    """

    __slots__ = (
        "serial", "table", "affected_edges", "dependent_edges",
        "nbr_of_answers", "previous_count", "new_answer", "falsecount",
        "reeval_ready",
    )

    def __init__(self, table):
        self.serial = next(_node_serial)
        self.table = table
        self.affected_edges: dict = {}     # nodes that depend on this one
        self.dependent_edges: dict = {}    # nodes/leaves this one depends on
        self.nbr_of_answers = 0
        self.previous_count: Optional[int] = None
        self.new_answer = False
        self.falsecount = 0
        self.reeval_ready = COMPUTE_DEPENDENCIES_FIRST

    @property
    def invalid(self) -> bool:
        return self.falsecount > 0

    def __repr__(self):
        return f"IdgNode({format_term(self.table.subgoal)}, fc={self.falsecount})"


class DynamicLeaf:
    """Leaf pattern for a dynamic incremental call (possibly depth-abstracted)."""

    __slots__ = ("serial", "pattern", "pred", "affected_edges")

    def __init__(self, pattern: Term, pred: tuple):
        self.serial = next(_node_serial)
        self.pattern = pattern
        self.pred = pred
        self.affected_edges: dict = {}

    def __repr__(self):
        return f"DynamicLeaf({format_term(self.pattern)})"


class Idg:
    def __init__(self):
        self.nodes: dict = {}     # table serial -> IdgNode
        self.leaves: dict = {}    # pred -> {pattern canonical key -> DynamicLeaf}

    # -- construction ----------------------------------------------------

    def node_for(self, table) -> IdgNode:
        node = self.nodes.get(table.serial)
        if node is None:
            node = IdgNode(table)
            self.nodes[table.serial] = node
            table.idg_node = node
        return node

    def register_call_edge(self, child, parent: IdgNode) -> None:
        """child directly affects parent; idempotent."""
        child.affected_edges.setdefault(parent, False)
        parent.dependent_edges.setdefault(child)

    def register_dynamic_leaf(self, goal: Term, decl, env=None) -> DynamicLeaf:
        from .terms import resolve

        pred = (decl.name, decl.arity)
        bucket = self.leaves.setdefault(pred, {})
        if decl.idg_abstraction is not None:
            resolved = resolve(goal, env) if env else goal
            pattern, _ = abstract_depth(resolved, decl.idg_abstraction)
            key = canonical_key(pattern)
        else:
            pattern = None
            key = canonical_key(goal, env)
        leaf = bucket.get(key)
        if leaf is None:
            if pattern is None:
                pattern = resolve(goal, env) if env else goal
            leaf = DynamicLeaf(pattern, pred)
            bucket[key] = leaf
        return leaf

    def leaves_matching(self, pred: tuple, head: Term) -> list:
        """Leaf patterns of pred unifying with an updated clause head."""
        return [leaf for leaf in self.leaves.get(pred, {}).values()
                if unify(leaf.pattern, head) is not None]

    def drop_node(self, node: IdgNode) -> None:
        for parent in node.affected_edges:
            parent.dependent_edges.pop(node, None)
        for child in node.dependent_edges:
            child.affected_edges.pop(node, None)
        self.nodes.pop(node.table.serial, None)
        node.table.idg_node = None

    # -- invalidation -----------------------------------------------------

    def invalidate_from(self, leaves) -> list:
        """Depth-first falsecount invalidation from updated leaves.

        Each traversed edge carries at most one pending contribution
        (affected_edges maps parent -> contributed flag), so decrements in
        propagate_validity undo exactly the increments made here.  Returns
        the invalid list: affected table nodes in traversal order, whose
        in-order drain updates tables bottom-up.  Self-loop edges do not
        contribute (a table cannot invalidate itself).
        """
        invalid_list: list = []
        for leaf in leaves:
            stack = [(leaf, iter(leaf.affected_edges))]
            while stack:
                origin, edge_iter = stack[-1]
                aff = next(edge_iter, None)
                if aff is None:
                    stack.pop()
                    continue
                if aff is origin:
                    continue
                if aff.table.status == "incomplete":
                    raise PermissionViolation(
                        "update affects the incomplete table "
                        f"{format_term(aff.table.subgoal)}")
                transitioned = False
                if not origin.affected_edges.get(aff, False):
                    origin.affected_edges[aff] = True
                    aff.falsecount += 1
                    transitioned = aff.falsecount == 1
                if transitioned:
                    invalid_list.append(aff)
                    stack.append((aff, iter(aff.affected_edges)))
        return invalid_list

    def propagate_validity(self, node: IdgNode) -> None:
        """Undo node's pending invalidation contributions; cascade through
        parents that become valid (and are not themselves mid-reevaluation)."""
        stack = [node]
        while stack:
            cur = stack.pop()
            for aff, contributed in cur.affected_edges.items():
                if aff is cur or not contributed:
                    continue
                if aff.falsecount <= 0:
                    raise InternalStateError(
                        f"falsecount underflow on {format_term(aff.table.subgoal)}")
                cur.affected_edges[aff] = False
                aff.falsecount -= 1
                if aff.falsecount == 0 and not aff.table.in_reeval:
                    aff.reeval_ready = COMPUTE_DEPENDENCIES_FIRST
                    stack.append(aff)

    def clear_contributions(self, node: IdgNode) -> None:
        """Retire node's pending contributions without revalidating parents
        (used when a re-evaluation concludes the answers changed)."""
        for aff, contributed in node.affected_edges.items():
            if contributed:
                node.affected_edges[aff] = False

    def collect_dependencies(self, node: IdgNode) -> list:
        """Dependency-first drain list for a lazy call of node.

        Dependent edges are followed while reeval_ready is
        compute_dependencies_first; each collected node flips to
        compute_directly so a mid-drain call will not re-collect it.
        The called node itself comes last, so draining the list alone
        restores its validity.
        """
        collected: list = []
        node.reeval_ready = COMPUTE_DIRECTLY
        stack = [(node, iter(node.dependent_edges))]
        while stack:
            cur, edge_iter = stack[-1]
            dep = next(edge_iter, None)
            if dep is None:
                stack.pop()
                if cur is not node:
                    collected.append(cur)
                continue
            if isinstance(dep, DynamicLeaf) or dep is cur:
                continue
            if dep.reeval_ready == COMPUTE_DEPENDENCIES_FIRST:
                dep.reeval_ready = COMPUTE_DIRECTLY
                stack.append((dep, iter(dep.dependent_edges)))
        collected.append(node)
        return collected

    # -- reporting ---------------------------------------------------------

    def stats(self) -> dict:
        edges = sum(len(n.dependent_edges) for n in self.nodes.values())
        return {
            "nodes": len(self.nodes),
            "leaves": sum(len(b) for b in self.leaves.values()),
            "edges": edges,
            "invalid": sum(1 for n in self.nodes.values() if n.invalid),
        }

    def dump_edges(self) -> list:
        """Text lines "child -> parent" for golden tests."""
        lines = []
        for node in sorted(self.nodes.values(), key=lambda n: n.serial):
            for dep in node.dependent_edges:
                child = (format_term(dep.pattern) if isinstance(dep, DynamicLeaf)
                         else format_term(dep.table.subgoal))
                lines.append(f"{child} -> {format_term(node.table.subgoal)}")
        return sorted(lines)
