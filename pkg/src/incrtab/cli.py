"""Command-line front end: consult, one-shot queries, an interactive REPL
and the benchmark runner.

Exit codes: 0 ok, 1 usage, 2 load error, 3 evaluation error, 4 timeout.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import bench
from .engine import Engine
from .errors import (
    EngineError,
    EvaluationTimeout,
    ExistenceError,
    InstantiationError,
    ParseError,
    PermissionViolation,
)
from .parser import parse_clause, parse_goal
from .terms import format_term

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LOAD = 2
EXIT_EVAL = 3
EXIT_TIMEOUT = 4


def format_answer(var_names: list, terms: tuple, truth: str) -> str:
    if not var_names:
        text = "yes"
    else:
        text = ", ".join(f"{name} = {format_term(term)}"
                         for name, term in zip(var_names, terms))
    if truth == "undefined":
        text += " (undefined)"
    return text


def run_query(engine: Engine, text: str, out=sys.stdout) -> int:
    bodies, out_vars = parse_goal(text)
    names = [v.name for v in out_vars]
    cursor = engine.solve_goal(bodies, out_vars)
    rendered = []
    for terms, truth in cursor:
        rendered.append(format_answer(names, terms, truth))
    if rendered:
        print(" ; ".join(rendered), file=out)
    else:
        print("no", file=out)
    return len(rendered)


class Repl:
    """Line-oriented session: '?- Goal.', ':assert C.', ':retract C.',
    ':tables', ':idg', ':abolish Goal.', ':stats'."""

    def __init__(self, engine: Engine, out=sys.stdout):
        self.engine = engine
        self.out = out

    def handle(self, line: str) -> None:
        line = line.strip()
        if not line or line.startswith("%"):
            return
        try:
            self._dispatch(line)
        except EngineError as exc:
            print(f"error: {exc}", file=self.out)

    def _dispatch(self, line: str) -> None:
        if line.startswith("?-"):
            run_query(self.engine, line[2:].strip().rstrip("."), self.out)
        elif line.startswith(":assert"):
            clause = parse_clause(line[len(":assert"):].strip())
            self.engine.store.assert_clause(clause)
            print("ok", file=self.out)
        elif line.startswith(":retract"):
            clause = parse_clause(line[len(":retract"):].strip())
            token = self.engine.store.retract_clause(clause)
            print("ok" if token.clause is not None else "no clause", file=self.out)
        elif line == ":tables":
            for row in self.engine.space.snapshot():
                print("{subgoal}  {status}  answers={answers} "
                      "conditional={conditional} occp={occp_num}".format(**row),
                      file=self.out)
        elif line == ":idg":
            stats = self.engine.idg.stats()
            print("nodes={nodes} leaves={leaves} edges={edges} "
                  "invalid={invalid}".format(**stats), file=self.out)
        elif line == ":idg edges":
            for edge in self.engine.idg.dump_edges():
                print(edge, file=self.out)
        elif line.startswith(":abolish"):
            goal_text = line[len(":abolish"):].strip().rstrip(".")
            bodies, _ = parse_goal(goal_text)
            if len(bodies) != 1 or len(bodies[0]) != 1 or bodies[0][0].atom is None:
                raise ParseError("abolish expects a single goal atom")
            self.engine.abolish_table(bodies[0][0].atom)
            print("ok", file=self.out)
        elif line == ":stats":
            for key, value in self.engine.stats.as_dict().items():
                print(f"{key}={value}", file=self.out)
            for key, value in self.engine.space.stats.items():
                print(f"{key}={value}", file=self.out)
        elif line == ":help":
            print("commands: ?- Goal. | :assert C. | :retract C. | :tables | "
                  ":idg | :abolish Goal. | :stats | :quit", file=self.out)
        elif line in (":quit", ":q", "halt."):
            raise EOFError
        else:
            print(f"unknown command: {line}", file=self.out)

    def loop(self, stream=sys.stdin) -> None:
        prompt = "incrtab> " if stream.isatty() else ""
        while True:
            if prompt:
                print(prompt, end="", flush=True, file=self.out)
            line = stream.readline()
            if not line:
                return
            try:
                self.handle(line)
            except EOFError:
                return


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incrtab",
        description="Tabled logic engine with incremental table maintenance "
                    "under the well-founded semantics.")
    parser.add_argument("--consult", action="append", default=[],
                        metavar="FILE", help="program file to load (repeatable)")
    parser.add_argument("--query", action="append", default=[],
                        metavar="GOAL", help="goal to run after loading")
    parser.add_argument("--bench", metavar="NAME",
                        help="benchmark to run: reach, ureach, social")
    parser.add_argument("--scale", action="append", default=[], metavar="K=V",
                        help="benchmark scale parameter (repeatable)")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--timeout", type=float, default=None, metavar="SECS",
                        help="per-phase / per-query deadline")
    parser.add_argument("--report", metavar="PATH",
                        help="write benchmark reports to PATH (JSON lines)")
    parser.add_argument("--no-oracle", action="store_true",
                        help="skip from-scratch oracle checks in benchmarks")
    parser.add_argument("--repl", action="store_true",
                        help="enter the interactive session")
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    engine = Engine()
    for path in args.consult:
        try:
            engine.consult_file(path)
        except OSError as exc:
            print(f"cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_LOAD
        except (ParseError, PermissionViolation, ExistenceError) as exc:
            print(f"load error in {path}: {exc}", file=sys.stderr)
            return EXIT_LOAD

    timed_out = False
    for goal in args.query:
        if args.timeout is not None:
            engine.set_deadline(args.timeout)
        try:
            run_query(engine, goal)
        except EvaluationTimeout:
            print("timeout", file=sys.stderr)
            timed_out = True
        except (ParseError, ExistenceError, PermissionViolation,
                InstantiationError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_EVAL
        finally:
            engine.set_deadline(None)

    if args.bench:
        scale = {}
        for kv in args.scale:
            if "=" not in kv:
                print(f"bad --scale {kv!r}, expected K=V", file=sys.stderr)
                return EXIT_USAGE
            key, value = kv.split("=", 1)
            scale[key.strip()] = value.strip()
        sink_file = open(args.report, "w", encoding="utf-8") if args.report else None

        def sink(report):
            line = report.as_json()
            if sink_file:
                sink_file.write(line + "\n")
            else:
                print(line)

        try:
            reports = bench.run_benchmark(
                args.bench, scale, sink=sink, timeout=args.timeout,
                seed=args.seed, oracle=not args.no_oracle)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except EngineError as exc:
            print(f"evaluation error: {exc}", file=sys.stderr)
            return EXIT_EVAL
        finally:
            if sink_file:
                sink_file.close()
        if any(r.timeout for r in reports):
            timed_out = True

    if args.repl or not (args.query or args.bench or args.consult):
        Repl(engine).loop()

    return EXIT_TIMEOUT if timed_out else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
