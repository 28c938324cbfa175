"""Bundled program sources: the worked examples and the benchmark programs.

Kept as source text so the CLI, the benchmark harness and the tests all
load them through the ordinary consult path.
"""

P_INC = """\
% Four mutually layered incremental tables over two dynamic predicates.
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

CONDITIONAL_EXAMPLE = """\
% p(2) is supported only through undefined negative loops.
:- table p/1, q/1.
p(1).
p(2) :- tnot(q(2)).
p(2) :- tnot(q(3)).
q(X) :- tnot(p(X)).
"""


def reach_program(incremental: bool = True, abstraction: bool = False) -> str:
    """Left-linear transitive closure over a dynamic edge relation."""
    if not incremental:
        return (
            ":- table reach/2.\n"
            ":- dynamic edge/2.\n"
            "reach(X,Y) :- edge(X,Y).\n"
            "reach(X,Y) :- reach(X,Z), edge(Z,Y).\n"
        )
    abs_suffix = ", abstract(0)" if abstraction else ""
    return (
        ":- table reach/2 as incremental.\n"
        f":- dynamic edge/2 as incremental{abs_suffix}.\n"
        "reach(X,Y) :- edge(X,Y).\n"
        "reach(X,Y) :- reach(X,Z), edge(Z,Y).\n"
    )


def ureach_program(incremental: bool = True, abstraction: bool = False) -> str:
    """Non-stratified transitive closure: base answers through edge/2 are
    undefined, answers through edge_1/2 are true."""
    if not incremental:
        return (
            ":- table ureach/2.\n"
            ":- dynamic edge/2, edge_1/2.\n"
            "ureach(X,Y) :- ureach(X,Z), edge(Z,Y).\n"
            "ureach(X,Y) :- edge(X,Y), undefined.\n"
            "ureach(X,Y) :- edge_1(X,Y).\n"
        )
    abs_suffix = ", abstract(0)" if abstraction else ""
    return (
        ":- table ureach/2 as incremental.\n"
        f":- dynamic edge/2, edge_1/2 as incremental{abs_suffix}.\n"
        "ureach(X,Y) :- ureach(X,Z), edge(Z,Y).\n"
        "ureach(X,Y) :- edge(X,Y), undefined.\n"
        "ureach(X,Y) :- edge_1(X,Y).\n"
    )


_SOCIAL_CORE = """\
good_influence(P1,P2) :-
    influences(P1,P2),
    sk_not(high_risk(P1)), sk_not(possible_risk(P1)),
    (high_risk(P2) ; possible_risk(P2)).

:- table high_risk_association/2 as incremental.
high_risk_association(Per1,Per2) :- high_risk_contact(Per1,Per2), has_disease(Per2).
high_risk_association(Per1,Per2) :- high_risk_association(Per1,Per3), high_risk_contact(Per3,Per2).

high_risk_contact(Per1,Per2) :- may_share_needle(Per1,Per2).
high_risk_contact(Per1,Per2) :- may_have_unprotected_sex(Per1,Per2).

:- table high_risk/1 as incremental.
high_risk(Per) :- high_risk_association(Per,_), !.

:- table possible_risk_association/2 as incremental, answer_abstract(3).
possible_risk_association(Per1,Per2) :- might_be_sexual_partner(Per1,Per2),
    high_risk_contact(Per2,_).
possible_risk_association(Per1,Per2) :- possible_risk_association(Per1,Per3),
    might_be_sexual_partner(Per3,Per2).

:- table possible_risk/1 as incremental.
possible_risk(Per) :- possible_risk_association(Per,_), !.

influences(Per1,Per2) :- loves(Per2,Per1).
influences(Per1,Per2) :- works_for(Per2,Per1).
influences(Per1,Per2) :- attends_church(Per2,Church), pastor(Church,Per1).
influences(Per1,Per2) :- lives_at(Per1,Loc), lives_at(Per2,Loc).

may_share_needle(Per1,Per2) :- obtained_needle(Per1,Needle,_Loc1),
    returned_needle(Per2,Needle,_Loc2), Per1 \\= Per2.
may_share_needle(Per1,Per2) :- share_needle_report(Per1,Per2,_Per3).

might_be_sexual_partner(Per1,Per2) :- loves(Per1,Per2), sk_not(related(Per1,Per2)).
might_be_sexual_partner(Per1,Per2) :- sexual_partner_report(Per1,Per2,_Per3).

:- table related/2 as incremental.
related(Per1,Per2) :- equals(Per1,parent_of(Per2)).
related(Per1,Per2) :- equals(Per1,parent_of(parent_of(Per2))).

:- table loves/2 as incremental.
loves(X,Y) :- loves(Y,X).
loves(X,Y) :- friend(X,Y).
loves(X,Y) :- equals(parent_of(X),Y).
loves(X,Y) :- grandparent_of(X,Y).

father_of(X,Y) :- equals(parent_of(X),Y), male(Y).
mother_of(X,Y) :- equals(parent_of(X),Y), female(Y).
grandparent_of(X,Y) :- equals(parent_of(parent_of(X)),Y).

:- dynamic friend/2, returned_needle/3, obtained_needle/3, share_needle_report/3,
   sexual_partner_report/3 as incremental.
:- dynamic has_disease/1, works_for/2, may_have_unprotected_sex/2, pastor/2,
   parent_of_edb/2, lives_at/2, attends_church/2 as incremental, abstract(0).
:- dynamic male/1, female/1 as incremental.
"""

_EQUALS_GENERAL = """\
:- table equals/2 as incremental, subgoal_abstract(3).
equals(X,Y) :- equals(Y,X).
equals(parent_of(X),parent_of(X)).
equals(parent_of(X),Y) :- parent_of_edb(X,Y).
equals(parent_of(parent_of(X)),Y) :- parent_of_edb(X,Z), equals(parent_of(Z),Y).
"""

_EQUALS_SPECIALIZED = """\
:- table equals/2 as incremental, subgoal_abstract(3).
equals(X,Y) :- atomic(X), Y = parent_of(_), equals(Y,X).
equals(parent_of(X),parent_of(X)).
equals(parent_of(X),Y) :- parent_of_edb(X,Y).
equals(parent_of(parent_of(X)),Y) :- parent_of_edb(X,Z), equals(parent_of(Z),Y1), Y1 = Y.
"""


def social_program(specialized_equals: bool = True, incremental: bool = True) -> str:
    """The social-network benchmark program; the specialized variant
    restricts the symmetry clause of equals/2 to constant/functional pairs.

    With incremental=False, the same program under plain tabling (used as
    the from-scratch oracle configuration: same answers, no IDG)."""
    equals = _EQUALS_SPECIALIZED if specialized_equals else _EQUALS_GENERAL
    text = _SOCIAL_CORE + "\n" + equals
    if not incremental:
        text = text.replace(" as incremental,\n   abstract(0)", "")
        text = text.replace(" as incremental, abstract(0)", "")
        text = text.replace(" as incremental", "")
        text = text.replace(", abstract(0)", "")
    return text


SOCIAL_EDB_PREDICATES = [
    ("friend", 2),
    ("returned_needle", 3),
    ("obtained_needle", 3),
    ("share_needle_report", 3),
    ("sexual_partner_report", 3),
    ("has_disease", 1),
    ("works_for", 2),
    ("may_have_unprotected_sex", 2),
    ("pastor", 2),
    ("parent_of_edb", 2),
    ("lives_at", 2),
    ("attends_church", 2),
]
