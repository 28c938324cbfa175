"""Subgoal tables keyed by variant: answer stores with delay lists,
re-evaluation marks, and simplification with direct back-references
from waited-on answers/tables to their dependent conditional answers.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Optional

from .errors import InternalStateError
from .terms import (
    Subst,
    Term,
    canonical_key,
    canonical_tuple_key,
    format_term,
    is_ground,
    term_vars,
    unify,
)

# Table status
NEW = "new"
INCOMPLETE = "incomplete"
COMPLETED = "completed"

# add_answer outcomes
NEW_SUBSTITUTION = "new_substitution"
REPEATED = "repeated"
UNDELETED = "undeleted"
CONDITIONAL_ADDED = "conditional_added"
STRENGTHENED = "strengthened_to_unconditional"

# Delay literal signs
POS = "+"      # waits on a specific answer of a table
NEG = "-"      # waits on the falsity of a (ground) atom against a table
UNDEF = "u"    # permanently undefined (the `undefined' built-in)
RESTRAINT = "r"  # permanently undefined restraint mark from answer abstraction

_table_serial = itertools.count(1)


class DelayLiteral:
    __slots__ = ("sign", "table", "answer_key", "atom", "_skey")

    def __init__(self, sign: str, table: Optional["Table"] = None,
                 answer_key=None, atom: Optional[Term] = None):
        self.sign = sign
        self.table = table          # provider table (POS/NEG)
        self.answer_key = answer_key  # POS: provider answer key
        self.atom = atom            # NEG: the negated ground atom; POS: answer atom
        self._skey = None

    def sort_key(self):
        key = self._skey
        if key is None:
            key = self._skey = (
                self.sign, self.table.serial if self.table else -1,
                self.answer_key if self.answer_key is not None else (),
                canonical_key(self.atom) if self.atom is not None else ())
        return key

    def registry_key(self):
        if self.sign == POS:
            return ("a", self.table.serial, self.answer_key)
        if self.sign == NEG:
            return ("t", self.table.serial)
        return None

    def render(self) -> str:
        if self.sign == NEG:
            return f"not {format_term(self.atom)}"
        if self.sign == POS:
            return format_term(self.atom) if self.atom is not None else f"<{self.table.serial}:{self.answer_key}>"
        if self.sign == RESTRAINT:
            return "$restraint"
        return "undefined"

    def __repr__(self):
        return self.render()


class DelayList:
    __slots__ = ("literals", "falsified", "_canon")

    def __init__(self, literals):
        self.literals = sorted(literals, key=DelayLiteral.sort_key)
        self.falsified = False
        self._canon = None

    def canonical(self):
        canon = self._canon
        if canon is None:
            canon = self._canon = tuple(lit.sort_key() for lit in self.literals)
        return canon

    def invalidate_canon(self):
        self._canon = None

    def render(self) -> str:
        return "[" + ",".join(lit.render() for lit in self.literals) + "]"

    def __repr__(self):
        return self.render() + ("*" if self.falsified else "")


class Answer:
    __slots__ = ("terms", "key", "delay_lists", "deleted", "was_unconditional",
                 "_instance")

    def __init__(self, terms: tuple, key: tuple):
        self.terms = terms
        self.key = key
        self.delay_lists: list = []
        self.deleted = False
        self.was_unconditional = False
        self._instance = None

    @property
    def unconditional(self) -> bool:
        return not self.delay_lists

    def __repr__(self):
        mark = "!" if self.deleted else ""
        cond = "" if self.unconditional else " if " + ";".join(dl.render() for dl in self.delay_lists)
        return f"<{self.terms}{cond}{mark}>"


class Table:
    """Per-variant subgoal record."""

    __slots__ = (
        "serial", "subgoal", "subst_vars", "decl", "answers", "status",
        "occp_num", "idg_node", "cursors", "in_reeval", "cut_hit",
        "program_exhausted",
    )

    def __init__(self, subgoal: Term, decl):
        self.serial = next(_table_serial)
        self.subgoal = subgoal
        self.subst_vars = term_vars(subgoal)
        self.decl = decl
        self.answers: dict = {}      # canonical key -> Answer, insertion ordered
        self.status = NEW
        self.occp_num = 0
        self.idg_node = None
        self.cursors: list = []      # live cursors (view-cursor module)
        self.in_reeval = False
        self.cut_hit = False
        self.program_exhausted = False

    @property
    def ans_subst_size(self) -> int:
        return len(self.subst_vars)

    def live_answers(self) -> Iterator[Answer]:
        for ans in self.answers.values():
            if not ans.deleted:
                yield ans

    def live_count(self) -> int:
        return sum(1 for _ in self.live_answers())

    def answer_instance(self, answer: Answer) -> Term:
        """The subgoal instantiated by an answer substitution (cached)."""
        instance = answer._instance
        if instance is None:
            if not self.subst_vars:
                instance = self.subgoal
            else:
                from .terms import apply
                instance = apply(dict(zip(self.subst_vars, answer.terms)), self.subgoal)
            answer._instance = instance
        return instance

    def has_unconditional_covering(self, atom: Term) -> bool:
        for ans in self.live_answers():
            if ans.unconditional and unify(atom, self.answer_instance(ans)) is not None:
                return True
        return False

    def has_answer_covering(self, atom: Term) -> bool:
        for ans in self.live_answers():
            if unify(atom, self.answer_instance(ans)) is not None:
                return True
        return False

    def covering_answers(self, atom: Term) -> list:
        return [ans for ans in self.live_answers()
                if unify(atom, self.answer_instance(ans)) is not None]

    def __repr__(self):
        return f"Table({format_term(self.subgoal)}, {self.status}, {len(self.answers)} answers)"


class TableSpace:
    """All tables of one engine session plus the simplification registry."""

    def __init__(self):
        self.tables: dict = {}        # canonical subgoal key -> Table
        self.backrefs: dict = {}      # registry key -> list[(table, answer, dlist, literal)]
        self.preserve_hook = None     # set by the engine: preserve cursor views
        self.count_hook = None        # set by the engine: sync idg answer counts
        self.stats = {
            "simplifications": 0,
            "strengthened": 0,
            "simplify_deleted": 0,
        }
        self._event_queue: list = []
        self._processing = False

    # -- lookup ----------------------------------------------------------

    def find_table(self, goal: Term) -> Optional[Table]:
        return self.tables.get(canonical_key(goal))

    def find_or_create_table(self, goal: Term, decl) -> tuple:
        key = canonical_key(goal)
        table = self.tables.get(key)
        if table is not None:
            return table, False
        table = Table(goal, decl)
        self.tables[key] = table
        return table, True

    def remove_table(self, table: Table) -> None:
        key = canonical_key(table.subgoal)
        if self.tables.get(key) is table:
            del self.tables[key]

    def snapshot(self) -> list:
        """Introspection rows: subgoal text, status, answer count,
        conditional count, occp_num."""
        rows = []
        for table in self.tables.values():
            live = list(table.live_answers())
            rows.append({
                "subgoal": format_term(table.subgoal),
                "status": table.status,
                "answers": len(live),
                "conditional": sum(1 for a in live if not a.unconditional),
                "occp_num": table.occp_num,
            })
        return rows

    # -- answer store ------------------------------------------------------

    def add_answer(self, table: Table, terms: tuple, delays) -> str:
        """Record one derived answer; delays is a list of DelayLiteral
        (empty for an unconditional derivation)."""
        if table.status == COMPLETED and not table.in_reeval:
            raise InternalStateError(
                f"answer added to completed table {format_term(table.subgoal)}")
        key = canonical_tuple_key(terms)
        existing = table.answers.get(key)
        if existing is None:
            answer = Answer(terms, key)
            if delays:
                dl = DelayList(delays)
                answer.delay_lists.append(dl)
                self._register(table, answer, dl)
            table.answers[key] = answer
            if answer.unconditional:
                self._queue(("true", table, answer))
                self._run_events()
            return NEW_SUBSTITUTION

        if existing.deleted:
            existing.deleted = False
            was_cond = not existing.was_unconditional
            self._clear_lists(existing)
            if delays:
                dl = DelayList(delays)
                existing.delay_lists.append(dl)
                self._register(table, existing, dl)
            else:
                if was_cond:
                    self.stats["strengthened"] += 1
                    self._queue(("true", table, existing))
                    self._run_events()
            return UNDELETED

        if not delays:
            if existing.unconditional:
                return REPEATED
            self._strengthen(table, existing)
            self._run_events()
            return STRENGTHENED

        if existing.unconditional:
            return REPEATED
        dl = DelayList(delays)
        canon = dl.canonical()
        if any(d.canonical() == canon for d in existing.delay_lists):
            return REPEATED
        existing.delay_lists.append(dl)
        self._register(table, existing, dl)
        return CONDITIONAL_ADDED

    # -- re-evaluation marks -------------------------------------------

    def begin_reeval_marks(self, table: Table) -> None:
        for answer in table.answers.values():
            if not answer.deleted:
                answer.was_unconditional = answer.unconditional
            answer.deleted = True

    def finalize_reeval(self, table: Table) -> tuple:
        """Remove still-deleted answers; report (removed, weakened)."""
        removed = []
        weakened = []
        for key in [k for k, a in table.answers.items() if a.deleted]:
            removed.append(table.answers.pop(key))
        for answer in table.answers.values():
            if answer.was_unconditional and not answer.unconditional:
                weakened.append(answer)
        for answer in removed:
            if not answer.was_unconditional:
                self.stats["simplifications"] += 1
            self._queue(("false", table, answer))
        self._run_events()
        self._sync_count(table)
        return removed, weakened

    # -- simplification ----------------------------------------------------

    def simplify(self, table: Table, answer: Optional[Answer], outcome: str) -> None:
        """Propagate a newly decided truth value to dependent answers.

        outcome "now_true": answer became unconditional.
        outcome "now_false": answer was removed from its table.
        """
        self._queue(("true" if outcome == "now_true" else "false", table, answer))
        self._run_events()

    def strengthen_answer(self, table: Table, answer: Answer) -> None:
        """Settle a conditional answer to true and propagate."""
        if table.answers.get(answer.key) is not answer or answer.unconditional:
            return
        self._strengthen(table, answer)
        self._run_events()

    def delete_answer(self, table: Table, answer: Answer) -> None:
        """Settle a conditional answer to false and propagate."""
        if table.answers.get(answer.key) is not answer:
            return
        self._delete_answer(table, answer)
        self._run_events()

    def _register(self, table: Table, answer: Answer, dl: DelayList) -> None:
        for lit in dl.literals:
            key = lit.registry_key()
            if key is not None:
                self.backrefs.setdefault(key, []).append((table, answer, dl, lit))

    def _clear_lists(self, answer: Answer) -> None:
        answer.delay_lists = []

    def _strengthen(self, table: Table, answer: Answer) -> None:
        if table.status == COMPLETED and table.occp_num > 0 and self.preserve_hook:
            self.preserve_hook(table)
        self.stats["strengthened"] += 1
        self._clear_lists(answer)
        self._queue(("true", table, answer))

    def _delete_answer(self, table: Table, answer: Answer) -> None:
        if answer.key not in table.answers:
            return
        if table.status == COMPLETED and table.occp_num > 0 and self.preserve_hook:
            self.preserve_hook(table)
        del table.answers[answer.key]
        self.stats["simplify_deleted"] += 1
        self._queue(("false", table, answer))
        self._sync_count(table)

    def _sync_count(self, table: Table) -> None:
        if self.count_hook is not None:
            self.count_hook(table)

    def _queue(self, event) -> None:
        self._event_queue.append(event)

    def _run_events(self) -> None:
        if self._processing:
            return
        self._processing = True
        try:
            while self._event_queue:
                kind, table, answer = self._event_queue.pop()
                if kind == "true":
                    self._on_answer_true(table, answer)
                else:
                    self._on_answer_false(table, answer)
        finally:
            self._processing = False

    def _dependents(self, key) -> list:
        refs = self.backrefs.get(key)
        if not refs:
            return []
        live = []
        for dep_table, dep_answer, dlist, lit in refs:
            if dep_table.answers.get(dep_answer.key) is not dep_answer:
                continue
            if dep_answer.deleted:
                continue
            if dlist not in dep_answer.delay_lists or dlist.falsified:
                continue
            if lit not in dlist.literals:
                continue
            live.append((dep_table, dep_answer, dlist, lit))
        self.backrefs[key] = [r for r in refs
                              if r[0].answers.get(r[1].key) is r[1]
                              and r[2] in r[1].delay_lists]
        return live

    def _on_answer_true(self, table: Table, answer: Answer) -> None:
        # Positive waits on this answer are satisfied.
        for dep in self._dependents(("a", table.serial, answer.key)):
            self._satisfy_literal(*dep)
        # Negative waits on atoms this answer now covers are falsified.
        instance = table.answer_instance(answer)
        for dep in self._dependents(("t", table.serial)):
            _, _, _, lit = dep
            if unify(lit.atom, instance) is not None:
                self._falsify_list(*dep)

    def _on_answer_false(self, table: Table, answer: Answer) -> None:
        # Absence only settles once the table is completed: an incomplete
        # table may still re-derive the substitution or add covering answers.
        if table.status != COMPLETED:
            return
        # Positive waits on this answer are falsified.
        for dep in self._dependents(("a", table.serial, answer.key)):
            self._falsify_list(*dep)
        # Negative waits on atoms with no remaining covering answer succeed.
        instance = table.answer_instance(answer)
        for dep in self._dependents(("t", table.serial)):
            _, _, _, lit = dep
            if unify(lit.atom, instance) is not None and not table.has_answer_covering(lit.atom):
                self._satisfy_literal(*dep)

    def _satisfy_literal(self, dep_table: Table, dep_answer: Answer,
                         dlist: DelayList, lit: DelayLiteral) -> None:
        self.stats["simplifications"] += 1
        dlist.literals.remove(lit)
        dlist.invalidate_canon()
        if not dlist.literals:
            self._strengthen(dep_table, dep_answer)

    def _falsify_list(self, dep_table: Table, dep_answer: Answer,
                      dlist: DelayList, lit: DelayLiteral) -> None:
        self.stats["simplifications"] += 1
        dlist.falsified = True
        if all(dl.falsified for dl in dep_answer.delay_lists):
            self._delete_answer(dep_table, dep_answer)
