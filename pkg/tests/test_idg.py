import pytest

from incrtab.engine import Engine
from incrtab.errors import InternalStateError, PermissionViolation
from incrtab.idg import COMPUTE_DEPENDENCIES_FIRST, COMPUTE_DIRECTLY, Idg
from incrtab.parser import parse_clause
from incrtab.program import PredicateDecl
from incrtab.tables import COMPLETED, Table
from incrtab.terms import Var, format_term, mk

P_INC = """
:- table t_1/1, t_2/1, t_4/1, t_5/1 as incremental.
t_1(X) :- t_4(X), tnot(t_2(X)).
t_4(X) :- t_5(X).
t_4(X) :- t_4(Y), t_5(X).
t_5(X) :- nt_1(X).
t_2(X) :- q(X).
nt_1(X) :- p(f(X)).
nt_1(X) :- p(g(X)).
:- dynamic p/1, q/1 as incremental.
p(f(1)).
q(1).
"""


def loaded_engine():
    engine = Engine()
    engine.consult_text(P_INC)
    list(engine.query("t_1(X)"))
    return engine


def node_names(nodes):
    return [format_term(n.table.subgoal) for n in nodes]


def test_p_inc_idg_shape():
    engine = loaded_engine()
    stats = engine.idg.stats()
    assert stats["nodes"] == 4
    # leaf patterns created by the query: p(f(X)), p(g(X)) and q(1)
    assert stats["leaves"] == 3
    assert engine.idg.dump_edges() == [
        "p(f(X)) -> t_5(X)",
        "p(g(X)) -> t_5(X)",
        "q(1) -> t_2(1)",
        "t_2(1) -> t_1(X)",
        "t_4(X) -> t_1(X)",
        "t_4(X) -> t_4(X)",
        "t_5(X) -> t_4(X)",
    ]


def test_invalidate_from_p_update():
    engine = loaded_engine()
    engine.store.assert_clause(parse_clause("p(g(2))."))
    invalid = engine.last_invalid_list
    assert node_names(invalid) == ["t_5(X)", "t_4(X)", "t_1(X)"]
    assert [n.falsecount for n in invalid] == [1, 1, 1]


def test_invalidate_from_unmatched_update():
    engine = loaded_engine()
    engine.store.assert_clause(parse_clause("q(g(2))."))
    assert engine.last_invalid_list == []


def test_second_update_hits_falsecount_guard():
    engine = loaded_engine()
    engine.store.assert_clause(parse_clause("p(g(2))."))
    first = {format_term(n.table.subgoal): n for n in engine.last_invalid_list}
    engine.store.assert_clause(parse_clause("p(g(3))."))
    assert engine.last_invalid_list == []
    # falsecounts unchanged: the same leaf wave cannot contribute twice
    assert all(n.falsecount == 1 for n in first.values())


def test_register_call_edge_idempotent():
    idg = Idg()
    t1 = Table(mk("a", Var("X")), PredicateDecl("a", 1, tabled=True, incremental=True))
    t2 = Table(mk("b", Var("X")), PredicateDecl("b", 1, tabled=True, incremental=True))
    n1, n2 = idg.node_for(t1), idg.node_for(t2)
    idg.register_call_edge(n1, n2)
    idg.register_call_edge(n1, n2)
    assert len(n1.affected_edges) == 1
    assert len(n2.dependent_edges) == 1


def test_self_loop_edge_permitted():
    engine = loaded_engine()
    assert "t_4(X) -> t_4(X)" in engine.idg.dump_edges()


def test_leaf_abstraction_single_leaf():
    engine = Engine()
    engine.consult_text(
        ":- table reach/2 as incremental.\n"
        ":- dynamic edge/2 as incremental, abstract(0).\n"
        "reach(X,Y) :- edge(X,Y).\n"
        "reach(X,Y) :- reach(X,Z), edge(Z,Y).\n"
        "edge(1,2). edge(2,3). edge(3,4).\n")
    list(engine.query("reach(X,Y)"))
    assert engine.idg.stats()["leaves"] == 1


def test_leaf_per_binding_without_abstraction():
    engine = Engine()
    engine.consult_text(
        ":- table reach/2 as incremental.\n"
        ":- dynamic edge/2 as incremental.\n"
        "reach(X,Y) :- edge(X,Y).\n"
        "reach(X,Y) :- reach(X,Z), edge(Z,Y).\n"
        "edge(1,2). edge(2,3). edge(3,4).\n")
    list(engine.query("reach(X,Y)"))
    assert engine.idg.stats()["leaves"] > 1


def test_propagate_validity_underflow_detected():
    idg = Idg()
    t1 = Table(mk("a", Var("X")), PredicateDecl("a", 1, tabled=True, incremental=True))
    t2 = Table(mk("b", Var("X")), PredicateDecl("b", 1, tabled=True, incremental=True))
    n1, n2 = idg.node_for(t1), idg.node_for(t2)
    idg.register_call_edge(n1, n2)
    n1.affected_edges[n2] = True  # pending contribution, but falsecount is 0
    with pytest.raises(InternalStateError):
        idg.propagate_validity(n1)


def test_propagate_validity_resets_reeval_ready():
    engine = loaded_engine()
    engine.store.assert_clause(parse_clause("p(g(2))."))
    nodes = {format_term(n.table.subgoal): n for n in engine.last_invalid_list}
    drain = engine.idg.collect_dependencies(nodes["t_1(X)"])
    assert all(n.reeval_ready == COMPUTE_DIRECTLY for n in drain)
    engine.recompute_dependent_tables(drain)
    assert all(n.falsecount == 0 for n in nodes.values())
    assert all(n.reeval_ready == COMPUTE_DEPENDENCIES_FIRST for n in drain)


def test_collect_dependencies_dependency_first_order():
    engine = loaded_engine()
    engine.store.assert_clause(parse_clause("p(g(2))."))
    nodes = {format_term(n.table.subgoal): n for n in engine.last_invalid_list}
    drain = engine.idg.collect_dependencies(nodes["t_1(X)"])
    names = node_names(drain)
    assert names[-1] == "t_1(X)"
    assert names.index("t_5(X)") < names.index("t_4(X)") < names.index("t_1(X)")
    # valid dependency t_2(1) is present but drains as a no-op
    assert "t_2(1)" in names


def test_collect_skips_compute_directly_nodes():
    engine = loaded_engine()
    engine.store.assert_clause(parse_clause("p(g(2))."))
    nodes = {format_term(n.table.subgoal): n for n in engine.last_invalid_list}
    engine.idg.collect_dependencies(nodes["t_1(X)"])
    again = engine.idg.collect_dependencies(nodes["t_1(X)"])
    assert node_names(again) == ["t_1(X)"]


def test_update_during_incomplete_affected_table_is_permission_error():
    engine = loaded_engine()
    engine.store.assert_clause(parse_clause("p(g(2))."))
    nodes = {format_term(n.table.subgoal): n for n in engine.last_invalid_list}
    nodes["t_5(X)"].table.status = "incomplete"
    with pytest.raises(PermissionViolation):
        engine.store.assert_clause(parse_clause("p(g(9))."))
    nodes["t_5(X)"].table.status = COMPLETED


def test_falsecount_conservation_over_updates():
    engine = loaded_engine()
    for fact in ["p(g(2)).", "p(g(3)).", "q(7)."]:
        engine.store.assert_clause(parse_clause(fact))
    list(engine.query("t_1(X)"))
    assert all(n.falsecount == 0 for n in engine.idg.nodes.values())
    engine.store.retract_clause(parse_clause("p(g(2))."))
    list(engine.query("t_1(X)"))
    assert all(n.falsecount == 0 for n in engine.idg.nodes.values())


def test_idg_stats_empty_engine():
    engine = Engine()
    assert engine.idg.stats() == {"nodes": 0, "leaves": 0, "edges": 0,
                                  "invalid": 0}
