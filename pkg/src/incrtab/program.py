"""Clause database: predicate declarations, static rules, dynamic incremental
facts/rules, and the assert/retract entry points that feed invalidation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .errors import ExistenceError, PermissionViolation
from .terms import (
    Const,
    Struct,
    Term,
    canonical_key,
    format_term,
    functor_of,
    rename_clause,
    unify,
)

# Literal kinds
POS = "pos"            # ordinary atom (tabled, static or dynamic predicate)
TNOT = "tnot"          # tabled negation, ground goals only
SK_NOT = "sk_not"      # tabled negation after skolemization
UNDEFINED = "undefined"  # built-in: delays with a permanently undefined literal
UNIFY = "="            # built-in unification
NOT_UNIFY = "\\="      # built-in non-unifiability test
ATOMIC = "atomic"      # built-in atomic/1 test
CUT = "!"              # once-like cut, final literal only

BUILTIN_KINDS = (UNDEFINED, UNIFY, NOT_UNIFY, ATOMIC, CUT)


class Literal:
    __slots__ = ("kind", "atom", "args")

    def __init__(self, kind: str, atom: Optional[Term] = None, args: tuple = ()):
        self.kind = kind
        self.atom = atom   # POS/TNOT/SK_NOT: the wrapped atom
        self.args = args   # UNIFY/NOT_UNIFY/ATOMIC arguments

    def map_terms(self, f: Callable[[Term], Term]) -> "Literal":
        return Literal(
            self.kind,
            f(self.atom) if self.atom is not None else None,
            tuple(f(a) for a in self.args),
        )

    def __repr__(self) -> str:
        if self.kind == POS:
            return format_term(self.atom)
        if self.kind in (TNOT, SK_NOT):
            return f"{self.kind}({format_term(self.atom)})"
        if self.kind in (UNIFY, NOT_UNIFY):
            return f"{format_term(self.args[0])} {self.kind} {format_term(self.args[1])}"
        if self.kind == ATOMIC:
            return f"atomic({format_term(self.args[0])})"
        return self.kind


_clause_ids = itertools.count(1)


class Clause:
    __slots__ = ("head", "body", "id")

    def __init__(self, head: Term, body: list, clause_id: Optional[int] = None):
        self.head = head
        self.body = body
        self.id = clause_id if clause_id is not None else next(_clause_ids)

    def rename(self) -> tuple:
        return rename_clause(self.head, self.body)

    def __repr__(self) -> str:
        if not self.body:
            return f"{format_term(self.head)}."
        return f"{format_term(self.head)} :- {', '.join(map(repr, self.body))}."


@dataclass
class PredicateDecl:
    name: str
    arity: int
    dynamic: bool = False
    tabled: bool = False
    incremental: bool = False
    idg_abstraction: Optional[int] = None       # dynamic incremental only
    subgoal_abstraction: Optional[int] = None   # tabled only
    answer_abstraction: Optional[int] = None    # tabled only

    @property
    def indicator(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass
class UpdateToken:
    op: str                    # "assert" | "retract"
    clause: Optional[Clause]   # None for a retract that matched nothing
    decl: PredicateDecl
    affected_leaves: list = field(default_factory=list)  # filled by the IDG


class ProgramStore:
    """Declarations plus static and dynamic clauses.

    Static clauses keep source order; dynamic facts are additionally indexed
    on the principal functor of their first argument.
    """

    def __init__(self):
        self.decls: dict = {}                # (name, arity) -> PredicateDecl
        self.static_clauses: dict = {}       # (name, arity) -> list[Clause]
        self.static_index: dict = {}         # (name, arity) -> {arg1 key -> [(seq, Clause)]}
        self.dynamic_clauses: dict = {}      # (name, arity) -> dict[id, Clause]
        self.dynamic_index: dict = {}        # (name, arity) -> {arg1 key -> list[id]}
        self.on_update = None                # hook installed by the engine

    # -- declarations --------------------------------------------------

    def decl_of(self, pred: tuple) -> Optional[PredicateDecl]:
        return self.decls.get(pred)

    def require_decl(self, pred: tuple) -> PredicateDecl:
        decl = self.decls.get(pred)
        if decl is None:
            raise ExistenceError(f"undeclared predicate {pred[0]}/{pred[1]}")
        return decl

    def declare(self, decl: PredicateDecl) -> None:
        key = (decl.name, decl.arity)
        if decl.tabled and decl.dynamic and decl.incremental:
            raise PermissionViolation(
                f"{decl.indicator}: predicates tabled as incremental must use static code"
            )
        if decl.idg_abstraction is not None and not (decl.dynamic and decl.incremental):
            raise PermissionViolation(
                f"{decl.indicator}: abstract/1 requires a dynamic incremental predicate"
            )
        if (decl.subgoal_abstraction is not None or decl.answer_abstraction is not None) and not decl.tabled:
            raise PermissionViolation(
                f"{decl.indicator}: subgoal/answer abstraction requires a tabled predicate"
            )
        existing = self.decls.get(key)
        if existing is not None:
            if (existing.dynamic, existing.tabled, existing.incremental) != (
                decl.dynamic,
                decl.tabled,
                decl.incremental,
            ):
                raise PermissionViolation(
                    f"{decl.indicator}: conflicting redeclaration"
                )
            # Redeclaration with identical attributes is a no-op.
            return
        if decl.tabled and decl.incremental:
            if key in self.dynamic_clauses and self.dynamic_clauses[key]:
                raise PermissionViolation(
                    f"{decl.indicator}: incremental tables require static code"
                )
        self.decls[key] = decl
        if decl.dynamic:
            self.dynamic_clauses.setdefault(key, {})
            self.dynamic_index.setdefault(key, {})
        else:
            self.static_clauses.setdefault(key, [])

    def ensure_declared(self, pred: tuple, *, dynamic=False, tabled=False, incremental=False) -> PredicateDecl:
        decl = self.decls.get(pred)
        if decl is None:
            decl = PredicateDecl(pred[0], pred[1], dynamic=dynamic, tabled=tabled, incremental=incremental)
            self.declare(decl)
        return decl

    # -- loading -------------------------------------------------------

    def _validate_body(self, head_decl: PredicateDecl, clause: Clause) -> None:
        for i, lit in enumerate(clause.body):
            if lit.kind == CUT:
                if i != len(clause.body) - 1:
                    raise PermissionViolation(
                        f"{head_decl.indicator}: cut is only supported as the final body literal"
                    )
                if not head_decl.tabled:
                    raise PermissionViolation(
                        f"{head_decl.indicator}: cut is only supported in tabled predicate bodies"
                    )
                continue
            if lit.kind in BUILTIN_KINDS:
                continue
            pred = functor_of(lit.atom)
            ref = self.decls.get(pred)
            if lit.kind in (TNOT, SK_NOT):
                if ref is None or not ref.tabled:
                    raise PermissionViolation(
                        f"{head_decl.indicator}: {lit.kind}/1 applied to non-tabled {pred[0]}/{pred[1]}"
                    )
            if ref is not None and head_decl.tabled and head_decl.incremental:
                if ref.dynamic and not ref.incremental:
                    raise PermissionViolation(
                        f"{head_decl.indicator}: calls non-incremental dynamic {ref.indicator}"
                    )
                if ref.tabled and not ref.incremental:
                    raise PermissionViolation(
                        f"{head_decl.indicator}: calls non-incremental table {ref.indicator}"
                    )

    def load_clause(self, clause: Clause) -> None:
        pred = functor_of(clause.head)
        decl = self.ensure_declared(pred)
        if decl.dynamic:
            raise PermissionViolation(
                f"{decl.indicator} is dynamic; use assert_clause"
            )
        self._validate_body(decl, clause)
        bucket = self.static_clauses.setdefault(pred, [])
        seq = len(bucket)
        bucket.append(clause)
        index = self.static_index.setdefault(pred, {})
        index.setdefault(self._arg1_key(clause.head), []).append((seq, clause))

    def static_candidates(self, pred: tuple, goal: Term,
                          env: Optional[dict] = None) -> list:
        """Static clauses possibly matching goal, in source order."""
        index = self.static_index.get(pred)
        if not index:
            return self.static_clauses.get(pred, [])
        goal_key = self._arg1_key(goal, env)
        if goal_key is None:
            return self.static_clauses.get(pred, [])
        keyed = index.get(goal_key, [])
        open_headed = index.get(None, [])
        if not keyed:
            return [c for _, c in open_headed]
        if not open_headed:
            return [c for _, c in keyed]
        return [c for _, c in sorted(keyed + open_headed)]

    # -- dynamic updates -----------------------------------------------

    def _arg1_key(self, head: Term, env: Optional[dict] = None):
        if isinstance(head, Struct) and head.args:
            a = head.args[0]
            if env is not None:
                from .terms import walk
                a = walk(a, env)
            if isinstance(a, Const):
                return ("c", type(a.value).__name__, a.value)
            if isinstance(a, Struct):
                return ("f", a.functor, len(a.args))
        return None

    def _store_dynamic(self, clause: Clause, decl: PredicateDecl) -> None:
        pred = (decl.name, decl.arity)
        self.dynamic_clauses.setdefault(pred, {})[clause.id] = clause
        key = self._arg1_key(clause.head)
        self.dynamic_index.setdefault(pred, {}).setdefault(key, []).append(clause.id)

    def store_dynamic_clause(self, clause: Clause) -> PredicateDecl:
        """Consult-time entry point: store without producing an update token."""
        pred = functor_of(clause.head)
        decl = self.require_decl(pred)
        if not decl.dynamic:
            raise PermissionViolation(f"{decl.indicator} is not dynamic")
        self._validate_body(decl, clause)
        self._store_dynamic(clause, decl)
        return decl

    def assert_clause(self, clause: Clause) -> UpdateToken:
        pred = functor_of(clause.head)
        decl = self.require_decl(pred)
        if not (decl.dynamic and decl.incremental):
            raise PermissionViolation(
                f"assert requires a dynamic incremental predicate, got {pred[0]}/{pred[1]}"
            )
        self._validate_body(decl, clause)
        self._store_dynamic(clause, decl)
        token = UpdateToken("assert", clause, decl)
        if self.on_update is not None:
            self.on_update(token)
        return token

    def retract_clause(self, clause: Clause) -> UpdateToken:
        pred = functor_of(clause.head)
        decl = self.require_decl(pred)
        if not (decl.dynamic and decl.incremental):
            raise PermissionViolation(
                f"retract requires a dynamic incremental predicate, got {pred[0]}/{pred[1]}"
            )
        target_key = _clause_variant_key(clause)
        store = self.dynamic_clauses.get(pred, {})
        found = None
        for cid in sorted(store):
            if _clause_variant_key(store[cid]) == target_key:
                found = store[cid]
                break
        if found is None:
            return UpdateToken("retract", None, decl)
        del store[found.id]
        key = self._arg1_key(found.head)
        bucket = self.dynamic_index.get(pred, {}).get(key)
        if bucket is not None:
            bucket.remove(found.id)
        token = UpdateToken("retract", found, decl)
        if self.on_update is not None:
            self.on_update(token)
        return token

    # -- resolution feed -------------------------------------------------

    def matching_clauses(self, goal: Term) -> Iterator[tuple]:
        """All clauses whose renamed-apart head unifies with goal, in order,
        paired with the mgu of goal and head."""
        pred = functor_of(goal)
        decl = self.require_decl(pred)
        if decl.dynamic:
            clauses = self._dynamic_candidates(pred, goal)
        else:
            clauses = self.static_clauses.get(pred, [])
        for clause in clauses:
            head, body = clause.rename()
            mgu = unify(goal, head)
            if mgu is not None:
                yield clause, head, body, mgu

    def _dynamic_candidates(self, pred: tuple, goal: Term,
                            env: Optional[dict] = None) -> list:
        store = self.dynamic_clauses.get(pred, {})
        index = self.dynamic_index.get(pred, {})
        goal_key = self._arg1_key(goal, env)
        if goal_key is None:
            ids = sorted(store)
        else:
            keyed = index.get(goal_key, [])
            open_headed = index.get(None, [])
            if not open_headed:
                ids = keyed  # buckets are appended in id order
            elif not keyed:
                ids = open_headed
            else:
                ids = sorted(keyed + open_headed)
        return [store[cid] for cid in ids if cid in store]

    def has_clauses(self, pred: tuple) -> bool:
        return bool(self.static_clauses.get(pred)) or bool(self.dynamic_clauses.get(pred))

    def clause_count(self, pred: tuple) -> int:
        decl = self.decls.get(pred)
        if decl is None:
            return 0
        if decl.dynamic:
            return len(self.dynamic_clauses.get(pred, {}))
        return len(self.static_clauses.get(pred, []))


def _clause_variant_key(clause: Clause):
    numbering: dict = {}
    head_key = canonical_key(clause.head, None, numbering)
    body_keys = []
    for lit in clause.body:
        parts = [lit.kind]
        if lit.atom is not None:
            parts.append(canonical_key(lit.atom, None, numbering))
        for a in lit.args:
            parts.append(canonical_key(a, None, numbering))
        body_keys.append(tuple(parts))
    return (head_key, tuple(body_keys))
