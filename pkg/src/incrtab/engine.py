"""Query evaluation to completion under the well-founded semantics.

The evaluator is a worklist interpreter over derivation continuations.
Negation on a not-yet-completed table delays eagerly, recording a negative
delay literal; positive resolution against a conditional answer records a
positive delay literal.  When the evaluation quiesces, the dependency graph
among the incomplete tables is decomposed into strongly connected
components, and each component is completed bottom-up: a three-valued
residual reduction over its conditional answers settles every answer to
true (strengthened), false (deleted) or undefined (kept conditional).

Tables invalidated by earlier updates re-enter evaluation through the same
machinery: a call to an invalid table enlists it for re-derivation inside
the active evaluation, with the mark/compare protocol driving what changed.
"""

from __future__ import annotations

import time
from collections import deque
from typing import Optional

from . import cursors
from .errors import (
    EngineError,
    EvaluationTimeout,
    ExistenceError,
    InstantiationError,
    InternalStateError,
    PermissionViolation,
)
from .idg import COMPUTE_DEPENDENCIES_FIRST, Idg
from .program import (
    ATOMIC,
    CUT,
    NOT_UNIFY,
    POS,
    SK_NOT,
    TNOT,
    UNDEFINED,
    UNIFY,
    Clause,
    Literal,
    PredicateDecl,
    ProgramStore,
)
from .tables import (
    COMPLETED,
    INCOMPLETE,
    NEG,
    NEW,
    NEW_SUBSTITUTION,
    RESTRAINT,
    UNDEF,
    UNDELETED,
    DelayLiteral,
    Table,
    TableSpace,
)
from .tables import POS as POS_LIT
from .terms import (
    Const,
    Struct,
    Term,
    Var,
    abstract_depth,
    canonical_key,
    canonical_tuple_key,
    canonicalize_terms,
    format_term,
    functor_of,
    is_ground,
    needs_abstraction,
    resolve,
    skolemize,
    term_vars,
    unify_in,
    walk,
)


class Continuation:
    __slots__ = ("owner", "literals", "idx", "env", "delays", "committed")

    def __init__(self, owner: Table, literals: tuple, idx: int, env: dict,
                 delays: tuple, committed: bool = False):
        self.owner = owner
        self.literals = literals
        self.idx = idx
        self.env = env
        self.delays = delays
        self.committed = committed


class Subscription:
    __slots__ = ("cont", "goal", "provider", "next_idx")

    def __init__(self, cont: Continuation, goal: Term, provider: Table):
        self.cont = cont
        self.goal = goal
        self.provider = provider
        self.next_idx = 0


class EngineStats:
    def __init__(self):
        self.steps = 0
        self.answers = 0
        self.reevals = 0
        self.drains = 0
        self.invalidations = 0
        self.queries = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class ReevalOutcome:
    __slots__ = ("changed", "old_count", "new_count", "weakened", "strengthened", "removed")

    def __init__(self, changed, old_count, new_count, weakened=0, strengthened=0, removed=0):
        self.changed = changed
        self.old_count = old_count
        self.new_count = new_count
        self.weakened = weakened
        self.strengthened = strengthened
        self.removed = removed

    def __repr__(self):
        return (f"ReevalOutcome(changed={self.changed}, {self.old_count}->"
                f"{self.new_count}, -{self.removed} ~{self.weakened})")


class Evaluation:
    """One entry into the evaluator: a top-level call or re-derivation."""

    def __init__(self, engine: "Engine"):
        self.engine = engine
        self.pending: deque = deque()
        self.managed: dict = {}        # serial -> Table (incomplete here)
        self.dep_edges: dict = {}      # serial -> set of serials
        self.subs: dict = {}           # serial -> list[Subscription]
        self.delivery_log: dict = {}   # serial -> list[answer key]
        self.dirty: deque = deque()    # providers with undelivered answers
        self.dirty_set: set = set()
        self.catchup: deque = deque()  # fresh subscriptions with backlog

    # -- table management -------------------------------------------------

    def manage(self, table: Table) -> None:
        table.status = INCOMPLETE
        self.managed[table.serial] = table
        self.dep_edges.setdefault(table.serial, set())
        self.subs.setdefault(table.serial, [])
        self.delivery_log.setdefault(table.serial, [])

    def seed(self, table: Table) -> None:
        self.manage(table)
        for clause in self.engine._clauses_for(table.subgoal):
            head, body = clause.rename()
            env: dict = {}
            if unify_in(table.subgoal, head, env):
                self.pending.append(
                    Continuation(table, tuple(body), 0, env, ()))

    def record_dep(self, owner: Table, provider: Table) -> None:
        if provider.serial in self.managed and owner.serial in self.managed:
            self.dep_edges[owner.serial].add(provider.serial)

    # -- main loop ----------------------------------------------------------

    def run(self) -> None:
        engine = self.engine
        while True:
            while self.pending:
                engine._step(self, self.pending.popleft())
            if not self._pump():
                break
        self._complete_all()

    def _pump(self) -> bool:
        produced = False
        while self.dirty or self.catchup:
            while self.catchup:
                sub = self.catchup.popleft()
                if self._deliver(sub):
                    produced = True
                if self.pending:
                    return True
            if not self.dirty:
                break
            serial = self.dirty.popleft()
            self.dirty_set.discard(serial)
            if self.managed.get(serial) is None:
                continue
            for sub in self.subs[serial]:
                if self._deliver(sub):
                    produced = True
            if self.pending:
                return True
        return produced or bool(self.pending)

    def _deliver(self, sub: "Subscription") -> bool:
        table = sub.provider
        log = self.delivery_log.get(table.serial)
        if log is None:
            return False
        produced = False
        backlog = len(log)
        while sub.next_idx < backlog:
            key = log[sub.next_idx]
            sub.next_idx += 1
            answer = table.answers.get(key)
            if answer is None or answer.deleted:
                continue
            if self.engine._resume(self, sub, table, answer):
                produced = True
        return produced

    def log_delivery(self, table: Table, key) -> None:
        log = self.delivery_log.get(table.serial)
        if log is not None:
            log.append(key)
            if table.serial not in self.dirty_set:
                self.dirty_set.add(table.serial)
                self.dirty.append(table.serial)

    # -- completion ---------------------------------------------------------

    def _complete_all(self) -> None:
        for scc in self._sccs():
            self.engine._complete_scc(self, scc)

    def _sccs(self) -> list:
        """Tarjan over the managed tables; components come out dependencies
        first."""
        index: dict = {}
        lowlink: dict = {}
        on_stack: set = set()
        stack: list = []
        out: list = []
        counter = [0]

        def strongconnect(v):
            work = [(v, iter(self.dep_edges.get(v, ())))]
            index[v] = lowlink[v] = counter[0]
            counter[0] += 1
            stack.append(v)
            on_stack.add(v)
            while work:
                node, it = work[-1]
                advanced = False
                for w in it:
                    if w not in self.managed:
                        continue
                    if w not in index:
                        index[w] = lowlink[w] = counter[0]
                        counter[0] += 1
                        stack.append(w)
                        on_stack.add(w)
                        work.append((w, iter(self.dep_edges.get(w, ()))))
                        advanced = True
                        break
                    elif w in on_stack:
                        lowlink[node] = min(lowlink[node], index[w])
                if advanced:
                    continue
                work.pop()
                if work:
                    parent = work[-1][0]
                    lowlink[parent] = min(lowlink[parent], lowlink[node])
                if lowlink[node] == index[node]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(self.managed[w])
                        if w == node:
                            break
                    out.append(comp)

        for serial in list(self.managed):
            if serial not in index:
                strongconnect(serial)
        return out


class Engine:
    """One engine session: program store, table space, IDG and evaluator."""

    def __init__(self):
        self.store = ProgramStore()
        self.space = TableSpace()
        self.idg = Idg()
        self.stats = EngineStats()
        self.current_eval: Optional[Evaluation] = None
        self.deadline: Optional[float] = None
        self.last_invalid_list: list = []
        self._driver_cache: dict = {}
        self._driver_counter = 0
        self._reeval_outcomes: dict = {}
        self._abstract_alias: dict = {}
        self.store.on_update = self._on_update
        self.space.preserve_hook = cursors.preserve_views
        self.space.count_hook = self._sync_node_count

    # -- plumbing -----------------------------------------------------------

    def set_deadline(self, seconds: Optional[float]) -> None:
        self.deadline = None if seconds is None else time.monotonic() + seconds

    def _check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise EvaluationTimeout("evaluation deadline exceeded")

    def _sync_node_count(self, table: Table) -> None:
        node = table.idg_node
        if node is not None and not table.in_reeval:
            node.nbr_of_answers = table.live_count()

    def _clauses_for(self, goal: Term, env: Optional[dict] = None):
        """Clause iterator used by resolution (respects first-arg indexing)."""
        pred = functor_of(goal)
        decl = self.store.require_decl(pred)
        if decl.dynamic:
            return self.store._dynamic_candidates(pred, goal, env)
        return self.store.static_candidates(pred, goal, env)

    # -- program loading -------------------------------------------------------

    def consult_text(self, text: str) -> None:
        """Load a program: directives first, then clauses, each in file
        order.  Stops at the first failing unit, leaving earlier units
        applied."""
        from .parser import Directive, parse_program

        units = parse_program(text)
        for unit in units:
            if isinstance(unit, Directive):
                for decl in unit.decls:
                    self.store.declare(decl)
        for unit in units:
            if isinstance(unit, Directive):
                continue
            for clause in unit:
                pred = functor_of(clause.head)
                decl = self.store.decl_of(pred)
                if decl is not None and decl.dynamic:
                    if decl.incremental:
                        self.store.assert_clause(clause)
                    else:
                        self.store.store_dynamic_clause(clause)
                else:
                    self.store.load_clause(clause)

    def consult_file(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as handle:
            self.consult_text(handle.read())

    def query(self, text: str) -> cursors.Cursor:
        """Parse and evaluate a goal; the cursor yields answer tuples whose
        positions follow the query variables in first-occurrence order."""
        from .parser import parse_goal

        bodies, out_vars = parse_goal(text)
        return self.solve_goal(bodies, out_vars)

    def query_vars(self, text: str) -> list:
        from .parser import parse_goal

        _, out_vars = parse_goal(text)
        return [v.name for v in out_vars]

    # -- public query API ----------------------------------------------------

    def solve(self, goal: Term) -> cursors.Cursor:
        """Evaluate goal to completion and open a cursor on its table."""
        self.stats.queries += 1
        table = self.solve_table(goal)
        return cursors.open_cursor(table)

    def solve_table(self, goal: Term) -> Table:
        if self.current_eval is not None:
            raise InternalStateError("solve re-entered during evaluation")
        pred = functor_of(goal)
        decl = self.store.decl_of(pred)
        if decl is None:
            raise ExistenceError(f"undeclared predicate {pred[0]}/{pred[1]}")
        if not decl.tabled or (
            decl.subgoal_abstraction is not None
            and needs_abstraction(goal, decl.subgoal_abstraction)
        ):
            goal, decl = self._wrap_driver([[Literal(POS, goal)]], term_vars(goal))
        return self._ensure_valid_table(goal, decl)

    def solve_goal(self, bodies: list, out_vars: list) -> cursors.Cursor:
        """Evaluate a parsed query (alternative literal lists over shared
        variables) via a driver table."""
        self.stats.queries += 1
        if (
            len(bodies) == 1
            and len(bodies[0]) == 1
            and bodies[0][0].kind == POS
            and (d := self.store.decl_of(functor_of(bodies[0][0].atom))) is not None
            and d.tabled
            and (d.subgoal_abstraction is None
                 or not needs_abstraction(bodies[0][0].atom, d.subgoal_abstraction))
            and list(term_vars(bodies[0][0].atom)) == list(out_vars)
        ):
            table = self._ensure_valid_table(bodies[0][0].atom, d)
            return cursors.open_cursor(table)
        goal, decl = self._wrap_driver(bodies, out_vars)
        table = self._ensure_valid_table(goal, decl)
        return cursors.open_cursor(table)

    def _wrap_driver(self, bodies: list, out_vars: list) -> tuple:
        """Wrap a goal in a fresh tabled driver predicate, reusing drivers
        for variant goals."""
        numbering: dict = {}
        key_parts = []
        for body in bodies:
            for lit in body:
                parts = [lit.kind]
                if lit.atom is not None:
                    parts.append(canonical_key(lit.atom, None, numbering))
                for a in lit.args:
                    parts.append(canonical_key(a, None, numbering))
                key_parts.append(tuple(parts))
            key_parts.append(("|",))
        key = (tuple(key_parts), tuple(numbering.get(v) for v in out_vars))
        cached = self._driver_cache.get(key)
        if cached is not None:
            name, decl = cached
        else:
            self._driver_counter += 1
            name = f"$query{self._driver_counter}"
            incremental = self._touches_incremental(
                [lit for body in bodies for lit in body])
            decl = PredicateDecl(name, len(out_vars), tabled=True,
                                 incremental=incremental)
            self.store.declare(decl)
            head = Struct(name, tuple(out_vars)) if out_vars else Const(name)
            for body in bodies:
                self.store.load_clause(Clause(head, list(body)))
            self._driver_cache[key] = (name, decl)
        head = Struct(name, tuple(out_vars)) if out_vars else Const(name)
        return head, decl

    def _touches_incremental(self, literals: list) -> bool:
        seen: set = set()
        work = []
        for lit in literals:
            if lit.atom is not None:
                work.append(functor_of(lit.atom))
        while work:
            pred = work.pop()
            if pred in seen:
                continue
            seen.add(pred)
            decl = self.store.decl_of(pred)
            if decl is None:
                continue
            if decl.incremental:
                return True
            if decl.tabled:
                continue  # tabled non-incremental boundary
            for clause in self.store.static_clauses.get(pred, []):
                for lit in clause.body:
                    if lit.atom is not None:
                        work.append(functor_of(lit.atom))
            for clause in self.store.dynamic_clauses.get(pred, {}).values():
                for lit in clause.body:
                    if lit.atom is not None:
                        work.append(functor_of(lit.atom))
        return False

    def _ensure_valid_table(self, goal: Term, decl: PredicateDecl) -> Table:
        table = self.space.find_table(goal)
        if table is None or table.status == NEW:
            evaluation = Evaluation(self)
            self.current_eval = evaluation
            try:
                table, _ = self.space.find_or_create_table(goal, decl)
                if decl.incremental:
                    self.idg.node_for(table)
                evaluation.seed(table)
                evaluation.run()
            except EngineError:
                self._unwind(evaluation)
                raise
            finally:
                self.current_eval = None
            return table
        if table.status == COMPLETED:
            node = table.idg_node
            if node is not None and node.invalid:
                self.lazy_call(table)
            return table
        raise InternalStateError("table left incomplete outside evaluation")

    # -- incremental controller ----------------------------------------------

    def _on_update(self, token) -> list:
        pred = (token.decl.name, token.decl.arity)
        if token.clause is None:
            token.affected_leaves = []
            self.last_invalid_list = []
            return []
        leaves = self.idg.leaves_matching(pred, token.clause.head)
        token.affected_leaves = leaves
        invalid = self.idg.invalidate_from(leaves)
        self.stats.invalidations += 1
        self.last_invalid_list = invalid
        return invalid

    def lazy_call(self, table: Table) -> None:
        """Bring a completed-but-invalid table back to validity."""
        node = table.idg_node
        if node is None or not node.invalid:
            return
        if node.reeval_ready == COMPUTE_DEPENDENCIES_FIRST:
            drain = self.idg.collect_dependencies(node)
            self.recompute_dependent_tables(drain)
        else:
            self.incremental_reeval(node)

    def recompute_dependent_tables(self, drain: list) -> None:
        """Drain an invalid list in order; an evaluation error aborts the
        drain with the failing table abolished and earlier entries valid."""
        self.stats.drains += 1
        for node in drain:
            self.incremental_reeval(node)

    def incremental_reeval(self, node) -> ReevalOutcome:
        table = node.table
        if node.falsecount == 0:
            node.reeval_ready = COMPUTE_DEPENDENCIES_FIRST
            return ReevalOutcome(False, node.nbr_of_answers, node.nbr_of_answers)
        if self.current_eval is not None:
            raise InternalStateError("top-level reeval during evaluation")
        evaluation = Evaluation(self)
        self.current_eval = evaluation
        try:
            self._begin_reeval(evaluation, table)
            evaluation.run()
        except EngineError:
            self._unwind(evaluation)
            raise
        finally:
            self.current_eval = None
        return self._reeval_outcomes.pop(table.serial)

    def _begin_reeval(self, evaluation: Evaluation, table: Table) -> None:
        """Enlist a completed, invalid table for re-derivation."""
        node = table.idg_node
        self.stats.reevals += 1
        if table.occp_num > 0:
            cursors.preserve_views(table)
        node.previous_count = table.live_count()
        self.space.begin_reeval_marks(table)
        node.new_answer = False
        for child in list(node.dependent_edges):
            child.affected_edges.pop(node, None)
        node.dependent_edges.clear()
        table.in_reeval = True
        table.cut_hit = False
        evaluation.seed(table)

    def _finish_reeval(self, table: Table) -> None:
        node = table.idg_node
        removed, weakened = self.space.finalize_reeval(table)
        if weakened:
            node.new_answer = True
        new_count = table.live_count()
        old_count = node.previous_count
        node.nbr_of_answers = new_count
        table.in_reeval = False
        node.reeval_ready = COMPUTE_DEPENDENCIES_FIRST
        changed = node.new_answer or new_count != old_count
        if changed:
            self.idg.clear_contributions(node)
        else:
            self.idg.propagate_validity(node)
        node.falsecount = 0
        self._reeval_outcomes[table.serial] = ReevalOutcome(
            changed, old_count, new_count,
            weakened=len(weakened), removed=len(removed))

    def abolish_table(self, goal: Term) -> None:
        table = self.space.find_table(goal)
        if table is None or table.status != COMPLETED:
            raise ExistenceError(f"no completed table for {format_term(goal)}")
        if table.occp_num > 0:
            cursors.preserve_views(table)
        node = table.idg_node
        if node is not None:
            self.idg.invalidate_from([node])
            self.idg.drop_node(node)
        self.space.remove_table(table)
        if table.decl is not None and table.decl.subgoal_abstraction is not None:
            self._abstract_alias.clear()

    def _abolish_incomplete(self, table: Table) -> None:
        node = table.idg_node
        if node is not None:
            self.idg.drop_node(node)
        self.space.remove_table(table)
        if table.decl is not None and table.decl.subgoal_abstraction is not None:
            self._abstract_alias.clear()

    def _unwind(self, evaluation: Evaluation) -> None:
        """Exception recovery: drop every table left incomplete, after
        invalidating their completed dependents."""
        doomed = [t for t in evaluation.managed.values() if t.status != COMPLETED]
        doomed += [t for t in self.space.tables.values()
                   if t.status == NEW and t not in doomed]
        for table in doomed:
            # neutralize the incomplete-table check for the invalidations
            table.status = NEW
            table.in_reeval = False
        for table in doomed:
            node = table.idg_node
            if node is not None:
                self.idg.invalidate_from([node])
        for table in doomed:
            self._abolish_incomplete(table)

    # -- evaluator ------------------------------------------------------------

    def _step(self, evaluation: Evaluation, cont: Continuation) -> None:
        self.stats.steps += 1
        self._check_deadline()
        owner = cont.owner
        if owner.cut_hit and not cont.committed:
            return
        env = cont.env
        idx = cont.idx
        literals = cont.literals
        delays = cont.delays
        while True:
            if idx >= len(literals):
                self._emit(evaluation, owner, env, delays)
                return
            lit = literals[idx]
            kind = lit.kind
            if kind == POS:
                self._call_atom(evaluation, cont, lit.atom, idx, env, delays)
                return
            if kind in (TNOT, SK_NOT):
                atom = resolve(lit.atom, env)
                if kind == SK_NOT:
                    atom = skolemize(atom)
                elif not is_ground(atom):
                    raise InstantiationError(
                        f"tnot/1 on non-ground goal {format_term(atom)}")
                result = self._call_negative(evaluation, owner, atom)
                if result is None:
                    return  # failed
                delays = delays + result
                idx += 1
                continue
            if kind == UNIFY:
                if not unify_in(lit.args[0], lit.args[1], env):
                    return
                idx += 1
                continue
            if kind == NOT_UNIFY:
                probe = dict(env)
                if unify_in(lit.args[0], lit.args[1], probe):
                    return
                idx += 1
                continue
            if kind == ATOMIC:
                if not isinstance(resolve(lit.args[0], env), Const):
                    return
                idx += 1
                continue
            if kind == UNDEFINED:
                delays = delays + (DelayLiteral(UNDEF),)
                idx += 1
                continue
            if kind == CUT:
                owner.cut_hit = True
                cont.committed = True
                idx += 1
                continue
            raise InternalStateError(f"unknown literal kind {kind}")

    def _call_atom(self, evaluation: Evaluation, cont: Continuation,
                   atom: Term, idx: int, env: dict, delays: tuple) -> None:
        root = walk(atom, env)
        if isinstance(root, Var):
            raise InstantiationError("call to an unbound goal")
        pred = functor_of(root)
        decl = self.store.decl_of(pred)
        if decl is None:
            raise ExistenceError(f"undeclared predicate {pred[0]}/{pred[1]}")
        owner = cont.owner
        if decl.tabled:
            provider = self._provider_table(evaluation, owner, root, env, decl)
            template = Continuation(owner, cont.literals, idx + 1, env,
                                    delays, cont.committed)
            if provider.status == COMPLETED:
                for answer in list(provider.live_answers()):
                    self._resume_with(evaluation, template, root, provider, answer)
            else:
                evaluation.record_dep(owner, provider)
                sub = Subscription(template, root, provider)
                evaluation.subs[provider.serial].append(sub)
                evaluation.catchup.append(sub)
            return
        if decl.dynamic:
            self._register_leaf(owner, root, env, decl)
            if owner.decl is not None and owner.decl.incremental and not decl.incremental:
                raise PermissionViolation(
                    f"incremental table calls non-incremental dynamic {decl.indicator}")
        pending = evaluation.pending
        literals = cont.literals
        for clause in self._clauses_for(root, env):
            if not clause.body:
                env2 = dict(env)
                if unify_in(root, clause.rename()[0], env2):
                    pending.append(Continuation(
                        owner, literals, idx + 1, env2, delays, cont.committed))
                continue
            head, body = clause.rename()
            env2 = dict(env)
            if unify_in(root, head, env2):
                pending.append(Continuation(
                    owner, literals[:idx] + tuple(body) + literals[idx + 1:],
                    idx, env2, delays, cont.committed))

    def _register_leaf(self, owner: Table, atom: Term, env: dict,
                       decl: PredicateDecl) -> None:
        if not decl.incremental:
            return
        leaf = self.idg.register_dynamic_leaf(atom, decl, env)
        node = owner.idg_node
        if node is not None:
            self.idg.register_call_edge(leaf, node)

    def _provider_table(self, evaluation: Evaluation, owner: Table,
                        atom: Term, env: Optional[dict], decl: PredicateDecl) -> Table:
        key = canonical_key(atom, env)
        table = self.space.tables.get(key)
        is_new = table is None
        if is_new:
            if decl.subgoal_abstraction is not None and needs_abstraction(
                    atom, decl.subgoal_abstraction, env):
                # Deep subgoals fold into their depth-bounded abstraction;
                # the raw key becomes an alias of the abstracted table.
                table = self._abstract_alias.get(key)
                if table is not None:
                    is_new = False
                else:
                    goal = resolve(atom, env) if env else atom
                    goal, _ = abstract_depth(goal, decl.subgoal_abstraction)
                    abs_key = canonical_key(goal)
                    table = self.space.tables.get(abs_key)
                    is_new = table is None
                    if is_new:
                        table = Table(goal, decl)
                        self.space.tables[abs_key] = table
                    self._abstract_alias[key] = table
            else:
                table = Table(resolve(atom, env) if env else atom, decl)
                self.space.tables[key] = table
        if decl.incremental:
            node = self.idg.node_for(table)
            parent = owner.idg_node
            if parent is not None:
                self.idg.register_call_edge(node, parent)
        elif owner.decl is not None and owner.decl.incremental:
            raise PermissionViolation(
                f"incremental table calls non-incremental table {decl.indicator}")
        if is_new:
            evaluation.seed(table)
        elif table.status == COMPLETED:
            node = table.idg_node
            if node is not None and node.invalid:
                self._begin_reeval(evaluation, table)
        elif table.status == INCOMPLETE and table.serial not in evaluation.managed:
            raise InternalStateError(
                f"call to incomplete foreign table {format_term(table.subgoal)}")
        return table

    def _call_negative(self, evaluation: Evaluation, owner: Table,
                       atom: Term) -> Optional[tuple]:
        """Resolve a ground negative call: None = fail, () = plain success,
        (lit,) = success with a delay literal."""
        pred = functor_of(atom)
        decl = self.store.decl_of(pred)
        if decl is None:
            raise ExistenceError(f"undeclared predicate {pred[0]}/{pred[1]}")
        if not decl.tabled:
            raise PermissionViolation(
                f"tabled negation on non-tabled predicate {decl.indicator}")
        provider = self._provider_table(evaluation, owner, atom, None, decl)
        if provider.status == COMPLETED:
            if provider.has_unconditional_covering(atom):
                return None
            if not provider.has_answer_covering(atom):
                return ()
            return (DelayLiteral(NEG, provider, atom=atom),)
        evaluation.record_dep(owner, provider)
        return (DelayLiteral(NEG, provider, atom=atom),)

    def _resume(self, evaluation: Evaluation, sub: Subscription,
                provider: Table, answer) -> bool:
        return self._resume_with(evaluation, sub.cont, sub.goal, provider, answer)

    def _resume_with(self, evaluation: Evaluation, template: Continuation,
                     goal: Term, provider: Table, answer) -> bool:
        instance = provider.answer_instance(answer)
        if type(goal) is Struct and type(instance) is Struct and goal.args:
            a = walk(goal.args[0], template.env)
            b = instance.args[0]
            ta, tb = type(a), type(b)
            if ta is Const:
                if (tb is Const and a != b) or tb is Struct:
                    return False
            elif ta is Struct and (
                tb is Const
                or (tb is Struct and (a.functor != b.functor or len(a.args) != len(b.args)))
            ):
                return False
        env2 = dict(template.env)
        if not unify_in(goal, instance, env2):
            return False
        delays = template.delays
        if not answer.unconditional:
            delays = delays + (DelayLiteral(
                POS_LIT, provider, answer_key=answer.key, atom=instance),)
        evaluation.pending.append(Continuation(
            template.owner, template.literals, template.idx, env2, delays,
            template.committed))
        return True

    def _emit(self, evaluation: Evaluation, owner: Table, env: dict,
              delays: tuple) -> None:
        terms = tuple(resolve(v, env) for v in owner.subst_vars)
        decl = owner.decl
        if decl is not None and decl.answer_abstraction is not None:
            terms, forced = self._abstract_answer(terms, decl.answer_abstraction)
            if forced:
                delays = delays + (DelayLiteral(RESTRAINT),)
        status = self.space.add_answer(owner, terms, list(delays))
        self.stats.answers += 1
        if status in (NEW_SUBSTITUTION, UNDELETED):
            evaluation.log_delivery(owner, canonical_tuple_key(terms))
            if owner.in_reeval and status == NEW_SUBSTITUTION:
                owner.idg_node.new_answer = True

    @staticmethod
    def _abstract_answer(terms: tuple, bound: int) -> tuple:
        fake = Struct("$ans", terms) if terms else Const("$ans")
        if not needs_abstraction(fake, bound):
            return terms, False
        abstracted, _ = abstract_depth(fake, bound)
        if isinstance(abstracted, Const):
            return terms, False
        return canonicalize_terms(abstracted.args), True

    # -- completion ------------------------------------------------------------

    def _complete_scc(self, evaluation: Evaluation, tables: list) -> None:
        in_scc = {t.serial for t in tables}
        for table in tables:
            table.status = COMPLETED
            evaluation.managed.pop(table.serial, None)
        self._residual_reduction(tables, in_scc)
        for table in tables:
            if table.in_reeval:
                self._finish_reeval(table)
            else:
                node = table.idg_node
                if node is not None:
                    node.nbr_of_answers = table.live_count()

    def _residual_reduction(self, tables: list, in_scc: set) -> None:
        """Settle the conditional answers of a completed component to their
        well-founded truth values."""
        rules: dict = {}      # (serial, key) -> list of delay-lists (literal lists)
        facts: set = set()
        conditional: list = []
        for table in tables:
            for answer in table.live_answers():
                prop = (table.serial, answer.key)
                if answer.unconditional:
                    facts.add(prop)
                else:
                    conditional.append((table, answer))
                    rules[prop] = [dl for dl in answer.delay_lists if not dl.falsified]
        if not conditional:
            return

        def literal_eval(lit: DelayLiteral, interp: set, undef_val: bool,
                         current: set) -> bool:
            if lit.sign in (UNDEF, RESTRAINT):
                return undef_val
            ptable = lit.table
            if lit.sign == POS_LIT:
                prop = (ptable.serial, lit.answer_key)
                pans = ptable.answers.get(lit.answer_key)
                if pans is None or pans.deleted:
                    return False
                if ptable.serial in in_scc:
                    return prop in facts or prop in current
                return pans.unconditional or undef_val
            # negative literal
            if ptable.serial in in_scc:
                for pans in ptable.covering_answers(lit.atom):
                    prop = (ptable.serial, pans.key)
                    if prop in facts or prop in interp:
                        return False
                return True
            if ptable.has_unconditional_covering(lit.atom):
                return False
            if ptable.has_answer_covering(lit.atom):
                return undef_val
            return True

        def gamma(interp: set, undef_val: bool) -> set:
            result = set(facts)
            changed = True
            while changed:
                changed = False
                for prop, dls in rules.items():
                    if prop in result:
                        continue
                    for dl in dls:
                        if all(literal_eval(lit, interp, undef_val, result)
                               for lit in dl.literals):
                            result.add(prop)
                            changed = True
                            break
            return result

        overestimate = gamma(set(), True)
        while True:
            true_set = gamma(overestimate, False)
            new_over = gamma(true_set, True)
            if new_over == overestimate:
                break
            overestimate = new_over

        for table, answer in conditional:
            prop = (table.serial, answer.key)
            if prop in true_set:
                self.space.strengthen_answer(table, answer)
            elif prop not in overestimate:
                self.space.delete_answer(table, answer)
        # Physical cleanup of surviving lists against settled truths.
        for table, answer in conditional:
            if table.answers.get(answer.key) is not answer or answer.unconditional:
                continue
            for dl in answer.delay_lists:
                if dl.falsified:
                    continue
                for lit in list(dl.literals):
                    verdict = self._settled_literal(lit, in_scc, true_set, overestimate)
                    if verdict is True:
                        dl.literals.remove(lit)
                        dl.invalidate_canon()
                    elif verdict is False:
                        dl.falsified = True
                        break
            if not any(not dl.falsified for dl in answer.delay_lists):
                raise InternalStateError("undefined answer lost all delay lists")

    def _settled_literal(self, lit: DelayLiteral, in_scc: set,
                         true_set: set, overestimate: set) -> Optional[bool]:
        """Truth of a delay literal after the component settled; None if it
        stays undefined."""
        if lit.sign in (UNDEF, RESTRAINT):
            return None
        ptable = lit.table
        if lit.sign == POS_LIT:
            pans = ptable.answers.get(lit.answer_key)
            if pans is None or pans.deleted:
                return False
            if pans.unconditional:
                return True
            return None
        if ptable.has_unconditional_covering(lit.atom):
            return False
        if ptable.has_answer_covering(lit.atom):
            return None
        return True
