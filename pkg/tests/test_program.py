import pytest

from incrtab.errors import ExistenceError, ParseError, PermissionViolation
from incrtab.parser import parse_clause, parse_program
from incrtab.program import Clause, Literal, POS, PredicateDecl, ProgramStore
from incrtab.terms import Const, Var, canonical_key, mk


def make_store():
    store = ProgramStore()
    store.declare(PredicateDecl("reach", 2, tabled=True, incremental=True))
    store.declare(PredicateDecl("edge", 2, dynamic=True, incremental=True,
                                idg_abstraction=0))
    return store


def test_declare_incremental_table():
    store = ProgramStore()
    store.declare(PredicateDecl("reach", 2, tabled=True, incremental=True))
    assert store.decl_of(("reach", 2)).incremental


def test_declare_dynamic_with_abstraction():
    store = ProgramStore()
    store.declare(PredicateDecl("edge", 2, dynamic=True, incremental=True,
                                idg_abstraction=0))
    assert store.decl_of(("edge", 2)).idg_abstraction == 0


def test_declare_incremental_table_over_dynamic_is_permission_error():
    store = ProgramStore()
    store.declare(PredicateDecl("p", 1, dynamic=True, incremental=True))
    store.store_dynamic_clause(parse_clause("p(1)."))
    with pytest.raises(PermissionViolation):
        store.declare(PredicateDecl("p", 1, tabled=True, incremental=True))


def test_declare_dynamic_incremental_table_mixture_rejected():
    store = ProgramStore()
    with pytest.raises(PermissionViolation):
        store.declare(PredicateDecl("p", 1, dynamic=True, tabled=True,
                                    incremental=True))


def test_abstraction_requires_dynamic_incremental():
    store = ProgramStore()
    with pytest.raises(PermissionViolation):
        store.declare(PredicateDecl("p", 1, tabled=True, idg_abstraction=0))


def test_load_clause_source_order():
    store = make_store()
    c1 = parse_clause("reach(X,Y) :- edge(X,Y).")
    c2 = parse_clause("reach(X,Y) :- reach(X,Z), edge(Z,Y).")
    store.load_clause(c1)
    store.load_clause(c2)
    goal = mk("reach", Var("A"), Var("B"))
    matched = [clause for clause, *_ in store.matching_clauses(goal)]
    assert matched == [c1, c2]


def test_load_clause_dynamic_head_rejected():
    store = make_store()
    with pytest.raises(PermissionViolation):
        store.load_clause(parse_clause("edge(1,2)."))


def test_load_tnot_on_non_tabled_rejected():
    store = ProgramStore()
    store.declare(PredicateDecl("p", 1, tabled=True))
    store.declare(PredicateDecl("q", 1))
    with pytest.raises(PermissionViolation):
        store.load_clause(parse_clause("p(X) :- tnot(q(X))."))


def test_incremental_table_calling_non_incremental_dynamic_rejected():
    store = ProgramStore()
    store.declare(PredicateDecl("p", 1, tabled=True, incremental=True))
    store.declare(PredicateDecl("d", 1, dynamic=True))
    with pytest.raises(PermissionViolation):
        store.load_clause(parse_clause("p(X) :- d(X)."))


def test_assert_requires_dynamic_incremental():
    store = make_store()
    with pytest.raises(PermissionViolation):
        store.assert_clause(parse_clause("reach(1,2)."))


def test_assert_then_retract_roundtrip():
    store = make_store()
    store.assert_clause(parse_clause("edge(1,2)."))
    token = store.retract_clause(parse_clause("edge(1,2)."))
    assert token.clause is not None
    assert not store.has_clauses(("edge", 2))


def test_retract_absent_fact_is_noop_token():
    store = make_store()
    token = store.retract_clause(parse_clause("edge(9,9)."))
    assert token.clause is None


def test_retract_removes_first_variant_only():
    store = make_store()
    store.assert_clause(parse_clause("edge(1,2)."))
    store.assert_clause(parse_clause("edge(1,2)."))
    store.retract_clause(parse_clause("edge(1,2)."))
    assert store.clause_count(("edge", 2)) == 1


def test_matching_clauses_unknown_predicate():
    store = make_store()
    with pytest.raises(ExistenceError):
        list(store.matching_clauses(mk("nope", Var("X"))))


def test_matching_clauses_first_argument_indexing():
    store = ProgramStore()
    store.declare(PredicateDecl("p", 1, dynamic=True, incremental=True))
    store.assert_clause(parse_clause("p(f(1))."))
    store.assert_clause(parse_clause("p(g(2))."))
    matches = list(store.matching_clauses(mk("p", mk("f", Var("X")))))
    assert len(matches) == 1
    _, head, _, mgu = matches[0]
    assert canonical_key(head) == canonical_key(mk("p", mk("f", 1)))


def test_clause_order_stable_across_interleaved_updates():
    store = ProgramStore()
    store.declare(PredicateDecl("p", 1, dynamic=True, incremental=True))
    store.assert_clause(parse_clause("p(1)."))
    store.assert_clause(parse_clause("p(2)."))
    store.assert_clause(parse_clause("p(3)."))
    store.retract_clause(parse_clause("p(2)."))
    store.assert_clause(parse_clause("p(4)."))
    goal = mk("p", Var("X"))
    values = [mgu[list(mgu)[0]].value
              for _, head, _, mgu in store.matching_clauses(goal)]
    assert values == [1, 3, 4]


def test_update_tokens_reference_dynamic_incremental():
    store = make_store()
    token = store.assert_clause(parse_clause("edge(5,6)."))
    assert token.decl.dynamic and token.decl.incremental


# -- parser ------------------------------------------------------------------


def test_parse_directive_multiple_predicates():
    units = parse_program(":- table t_1/1, t_2/1 as incremental.")
    decls = units[0].decls
    assert [(d.name, d.arity, d.incremental) for d in decls] == [
        ("t_1", 1, True), ("t_2", 1, True)]


def test_parse_directive_options():
    units = parse_program(
        ":- table equals/2 as incremental, subgoal_abstract(3), answer_abstract(2).\n"
        ":- dynamic edge/2 as incremental, abstract(0).")
    table_decl = units[0].decls[0]
    assert table_decl.subgoal_abstraction == 3
    assert table_decl.answer_abstraction == 2
    dyn_decl = units[1].decls[0]
    assert dyn_decl.idg_abstraction == 0


def test_parse_disjunction_expands_clauses():
    units = parse_program("a(X) :- b(X), (c(X) ; d(X)), e(X).")
    clauses = units[0]
    assert len(clauses) == 2
    assert [lit.atom.functor for lit in clauses[0].body] == ["b", "c", "e"]
    assert [lit.atom.functor for lit in clauses[1].body] == ["b", "d", "e"]


def test_parse_builtins():
    units = parse_program(
        "a(X,Y) :- X = Y, X \\= f(Y), atomic(X), undefined, tnot(b(X)), !.")
    body = units[0][0].body
    assert [lit.kind for lit in body] == ["=", "\\=", "atomic", "undefined",
                                          "tnot", "!"]


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse_program("p(1).\nq(2]).")
    assert err.value.line == 2


def test_parse_reserved_atom_rejected():
    with pytest.raises(ParseError):
        parse_program("p('$sk1').")


def test_parse_quoted_atom_and_negative_int():
    units = parse_program("p('Hello world', -3).")
    clause = units[0][0]
    assert clause.head.args[0] == Const("Hello world")
    assert clause.head.args[1] == Const(-3)


def test_parse_comments_and_anonymous_vars():
    units = parse_program("""
% a comment
p(_, _Named) :- q(_).  /* block */
""")
    clause = units[0][0]
    a1, a2 = clause.head.args
    assert a1 is not a2
