from fractions import Fraction

import pytest

from helpers import bundled, count, run_engine
from wfomc.engine import (
    BudgetExceeded,
    Cache,
    EngineConfig,
    GroundingTooLarge,
    apply_lifted_decomposition,
    apply_reused_variable_rewrite,
    find_lifted_decomposition,
    find_reused_variable_rewrite,
    ground_segment,
    lifted_case_branches,
    simplify,
    unary_cells,
    wfomc,
)
from wfomc.logic import Clause, Constant, Literal, Predicate, Segment, Theory, Var, connected_components, split_segment
from wfomc.oracle import oracle_source, oracle_theory
from wfomc.parser import parse_theory

ONE = (Fraction(1), Fraction(1))
SMOKERS_W = (Fraction(1, 5), Fraction(1, 2)), (Fraction(4, 5), Fraction(6, 5))


def L(pred, *args, positive=True):
    return Literal(positive, pred, args)


def smokers_theory(n):
    seg = Segment.fresh("people", n)
    S, C = Predicate("Smokes", ["people"]), Predicate("Cancer", ["people"])
    x = Var("x", seg)
    return Theory([Clause([L(S, x, positive=False), L(C, x)])]), {S: SMOKERS_W[0], C: SMOKERS_W[1]}


def test_smokers_example_value():
    t, w = smokers_theory(2)
    assert wfomc(t, w) == Fraction(841, 625)


@pytest.mark.parametrize("mode", ["R", "RD"])
def test_symtrans_three(mode):
    assert count(bundled("symtrans", p=3), mode) == 15


def test_empty_theory_smoothing():
    src = parse_theory("domain d 3\npredicate P(d)\n")
    assert count(src) == 8


def test_unit_contradiction():
    d = Segment.fresh("d", 2)
    P = Predicate("P", ["d"])
    x = Var("x", d)
    out, mult = simplify(Theory([Clause([L(P, x)]), Clause([L(P, x, positive=False)])]), {P: ONE})
    assert out is None and mult == 0


def test_unit_propagation_multiplier():
    d = Segment.fresh("d", 3)
    P = Predicate("P", ["d"])
    out, mult = simplify(Theory([Clause([L(P, Var("x", d))])]), {P: (Fraction(2), Fraction(5))})
    assert not out.clauses and mult == 8


def test_unit_propagation_removes_literal():
    # !Q(A) propagated into R(A,y) | S(A,y) | Q(A) and S(A,y) | T(A)
    m = Segment.fresh("m", 2)
    A = Constant("A", "x")
    Q, T = Predicate("Q", ["x"]), Predicate("T", ["x"])
    R, S = Predicate("R", ["x", "m"]), Predicate("S", ["x", "m"])
    y = Var("y", m)
    t = Theory(
        [
            Clause([L(Q, A, positive=False)]),
            Clause([L(R, A, y), L(S, A, y), L(Q, A)]),
            Clause([L(S, A, y), L(T, A)]),
        ]
    )
    w = {Q: (Fraction(3), Fraction(7)), R: ONE, S: ONE, T: ONE}
    out, mult = simplify(t, w)
    assert mult == 7
    assert out == Theory([Clause([L(R, A, y), L(S, A, y)]), Clause([L(S, A, y), L(T, A)])])


def test_tautology_dropped():
    dx, dy = Segment.fresh("dx", 2), Segment.fresh("dy", 2)
    S = Predicate("S", ["dx", "dy"])
    N = Constant("N", "dx")
    y1, y2 = Var("y1", dy), Var("y2", dy)
    c = Clause([L(S, N, y1), L(S, N, y2, positive=False), L(S, N, y1, positive=False), L(S, N, y2)])
    assert c.is_tautology()
    out, mult = simplify(Theory([c]), {S: ONE})
    assert not out.clauses and mult == 4


def test_subsumption():
    d = Segment.fresh("d", 2)
    P, Q = Predicate("P", ["d"]), Predicate("Q", ["d"])
    x = Var("x", d)
    t = Theory([Clause([L(P, x), L(Q, x)]), Clause([L(P, x)])])
    out, mult = simplify(t, {P: ONE, Q: ONE})
    # P forced true on both individuals, Q free
    assert mult * (wfomc(out, {P: ONE, Q: ONE}) if out.clauses else 1) == 4


def test_decompose_disjoint_smokers():
    src = parse_theory(
        "domain a 1\ndomain b 1\npredicate S(a) 0.2 0.5\npredicate C(a) 0.8 1.2\n"
        "predicate S2(b) 0.2 0.5\npredicate C2(b) 0.8 1.2\n!S(x) | C(x)\n!S2(y) | C2(y)\n"
    )
    assert count(src) == Fraction(29, 25) ** 2 == oracle_source(src)


def test_connected_theory_not_decomposed():
    t, _ = smokers_theory(2)
    assert len(connected_components(t)) == 1


def test_lifted_decomposition_smokers():
    t, w = smokers_theory(3)
    seg = find_lifted_decomposition(t)
    assert seg is not None
    t1 = apply_lifted_decomposition(t, seg)
    assert not t1.segments()
    assert wfomc(t1, w) ** 3 == Fraction(29, 25) ** 3 == oracle_theory(t, w)


def test_lifted_decomposition_not_for_two_same_segment_vars():
    dx, dy = Segment.fresh("dx", 2), Segment.fresh("dy", 2)
    S = Predicate("S", ["dx", "dy"])
    x1, x2, y1, y2 = Var("x1", dx), Var("x2", dx), Var("y1", dy), Var("y2", dy)
    c = Clause([L(S, x1, y1), L(S, x2, y1, positive=False), L(S, x2, y2), L(S, x1, y2, positive=False)])
    assert find_lifted_decomposition(Theory([c])) is None


def test_case_analysis_single_individual():
    assert count(bundled("smokers", people=1), "R") == Fraction(29, 25)


def test_lifted_case_analysis_coefficients():
    d = Segment.fresh("d", 2)
    P = Predicate("P", ["d"])
    t = Theory([Clause([L(P, Var("x", d))])])
    (cell,) = unary_cells(t)
    branches = list(lifted_case_branches(t, cell))
    # j=0 and j=1 are ruled out by the unit clause itself
    assert [(j, c) for j, c, _ in branches] == [(2, 1)]
    assert wfomc(t, {P: ONE}) == 1


def test_lifted_case_analysis_all_branches():
    d = Segment.fresh("d", 2)
    P, Q = Predicate("P", ["d"]), Predicate("Q", ["d"])
    x = Var("x", d)
    t = Theory([Clause([L(P, x), L(Q, x)])])
    cell = L(P, x).cell
    assert [(j, c) for j, c, _ in lifted_case_branches(t, cell)] == [(0, 1), (1, 2), (2, 1)]


def test_lifted_case_analysis_empty_segment():
    d = Segment.fresh("d", 0)
    P, Q = Predicate("P", ["d"]), Predicate("Q", ["d"])
    x = Var("x", d)
    t = Theory([Clause([L(P, x), L(Q, x)])])
    assert [(j, c) for j, c, _ in lifted_case_branches(t, L(P, x).cell)] == [(0, 1)]


def test_reused_variable_rewrite_preserves_count():
    dx = Segment.fresh("dx", 2)
    dy = Segment.fresh("dy", 2)
    yt, yf = split_segment(dy, 1)
    S = Predicate("S", ["dx", "dy"])
    x = Var("x", dx)
    c = Clause([L(S, x, Var("y1", yf), positive=False), L(S, x, Var("y2", yt))])
    t = Theory([c])
    found = find_reused_variable_rewrite(t)
    assert found is not None
    w = {S: (Fraction(2), Fraction(-1, 3))}
    w2 = dict(w)
    t2 = apply_reused_variable_rewrite(t, found, w2)
    assert len(t2.clauses) == 4
    assert oracle_theory(t, w) == oracle_theory(t2, w2)
    assert wfomc(t, w) == oracle_theory(t, w)


def test_reused_variable_rewrite_not_applicable():
    d = Segment.fresh("d", 2)
    F = Predicate("F", ["d", "d"])
    x, y = Var("x", d), Var("y", d)
    assert find_reused_variable_rewrite(Theory([Clause([L(F, x, y, positive=False), L(F, y, x)])])) is None


def test_smoothing_weights():
    src = parse_theory("domain d 2\npredicate P(d) 2 1\npredicate Q(d)\nQ(x)\n")
    assert count(src) == 9


def test_ground_segment_symtrans():
    assert count(bundled("symtrans", p=2), "R") == 5


def test_ground_single_individual_vacuous():
    d = Segment.fresh("d", 1)
    F = Predicate("F", ["d", "d"])
    t = Theory([Clause([L(F, Var("x", d), Var("y", d))])])
    g = ground_segment(t, d)
    assert all(c.is_vacuous() for c in g.clauses) or not g.clauses


def test_grounding_limit_raised():
    with pytest.raises(GroundingTooLarge):
        count(bundled("transitivity", p=5), "R", ground_atom_limit=5)


def test_node_limit():
    with pytest.raises(BudgetExceeded):
        count(bundled("symtrans", p=8), "R", node_limit=10)


def test_transitivity_falls_back_to_grounding():
    v, eng = run_engine(bundled("transitivity", p=4), "RD")
    assert v == oracle_source(bundled("transitivity", p=4))
    assert eng.stats.groundings > 0


@pytest.mark.parametrize("name", ["smokers", "symtrans", "s4", "birthday", "birthday_noinj", "volunteers", "fxy_fyx"])
def test_bundled_rd_without_grounding(name):
    _, eng = run_engine(bundled(name), "RD")
    assert eng.stats.groundings == 0


def test_cache_reuse_across_runs():
    cache = Cache()
    a, _ = run_engine(bundled("symtrans", p=6), "RD", cache)
    b, eng = run_engine(bundled("symtrans", p=6), "RD", cache)
    assert a == b == 877
    assert eng.stats.cache_hits >= 1


def test_cache_off_agrees():
    src = bundled("s4", dx=3, dy=3)
    assert count(src, use_cache=False) == count(src)


def test_float_mode_runs():
    v = count(bundled("smokers", people=5), float_mode=True)
    assert isinstance(v, float)
