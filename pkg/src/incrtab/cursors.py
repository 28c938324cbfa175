"""View-consistent answer cursors over completed tables.

A cursor iterates the live answer store in insertion order.  When the table
is about to be re-evaluated (or mutated by simplification) while cursors are
open, the unconsumed suffix of every open cursor is copied into an immutable
snapshot and the cursor switches to snapshot mode, so it keeps yielding
exactly the answers that were present when it was opened.
"""

from __future__ import annotations

from typing import Optional

from .errors import InternalStateError
from .tables import COMPLETED, Table

TRUE = "true"
UNDEFINED = "undefined"

LIVE = "live"
SNAPSHOT = "snapshot"
DONE = "done"


class CursorSnapshot:
    """Ordered unconsumed answer substitutions with frozen truth markers."""

    __slots__ = ("entries",)

    def __init__(self, entries: list):
        self.entries = tuple(entries)   # ((terms, marker), ...)


class Cursor:
    __slots__ = ("table", "mode", "pos", "snapshot", "_keys")

    def __init__(self, table: Table):
        self.table = table
        self.mode = LIVE
        self.pos = 0
        self.snapshot: Optional[CursorSnapshot] = None
        # Insertion order frozen at open time; deletions are checked at
        # yield time, additions after open are past the recorded suffix
        # only if the table is re-evaluated, which snapshots first.
        self._keys = list(table.answers.keys())

    def __iter__(self):
        return self

    def __next__(self):
        nxt = self.next()
        if nxt is None:
            raise StopIteration
        return nxt

    def next(self) -> Optional[tuple]:
        """(substitution tuple, truth value) or None when exhausted."""
        if self.mode == DONE:
            return None
        if self.mode == SNAPSHOT:
            if self.pos >= len(self.snapshot.entries):
                self._release()
                return None
            terms, marker = self.snapshot.entries[self.pos]
            self.pos += 1
            if self.pos >= len(self.snapshot.entries):
                self._release()
            return terms, marker
        while self.pos < len(self._keys):
            answer = self.table.answers.get(self._keys[self.pos])
            self.pos += 1
            if answer is None or answer.deleted:
                continue
            if self.pos >= len(self._keys):
                self._exhaust_live()
            return answer.terms, TRUE if answer.unconditional else UNDEFINED
        self._exhaust_live()
        return None

    def close(self) -> None:
        if self.mode == LIVE:
            self._exhaust_live()
        elif self.mode == SNAPSHOT:
            self._release()

    def _exhaust_live(self) -> None:
        if self.mode == LIVE:
            self.mode = DONE
            self.table.occp_num -= 1
            if self in self.table.cursors:
                self.table.cursors.remove(self)

    def _release(self) -> None:
        if self.mode == SNAPSHOT:
            self.mode = DONE
            self.snapshot = None
            if self in self.table.cursors:
                self.table.cursors.remove(self)


def open_cursor(table: Table) -> Cursor:
    if table.status != COMPLETED:
        raise InternalStateError("cursor opened on incomplete table")
    cursor = Cursor(table)
    table.occp_num += 1
    table.cursors.append(cursor)
    return cursor


def preserve_views(table: Table) -> None:
    """Snapshot the unconsumed suffix of every open cursor on table.

    Called before a re-evaluation or simplification mutates a completed
    table with occp_num > 0.  Snapshot cursors stop counting as open.
    """
    if table.occp_num <= 0:
        return
    for cursor in list(table.cursors):
        if cursor.mode != LIVE:
            continue
        entries = []
        for key in cursor._keys[cursor.pos:]:
            answer = table.answers.get(key)
            if answer is None or answer.deleted:
                continue
            marker = TRUE if answer.unconditional else UNDEFINED
            entries.append((answer.terms, marker))
        cursor.snapshot = CursorSnapshot(entries)
        cursor.mode = SNAPSHOT
        cursor.pos = 0
    table.occp_num = 0
