from fractions import Fraction

import pytest

from helpers import bundled
from wfomc.engine import Engine, EngineConfig
from wfomc.logic import Clause, Constant, Literal, Predicate, Segment, Theory, Var
from wfomc.oracle import oracle_theory
from wfomc.preprocess import compile_source
from wfomc.recursion import RecursionGuard, probe_candidate, rule_domain_recursion

ONE = (Fraction(1), Fraction(1))


def L(pred, *args, positive=True):
    return Literal(positive, pred, args)


def _shape(c: Clause) -> frozenset:
    """Literals with constants named by stem and variables by segment role."""
    out = set()
    for l in c.literals:
        args = tuple("N" if isinstance(a, Constant) else "v" for a in l.args)
        out.add((l.positive, l.predicate.name, args))
    return frozenset(out)


def test_friendship_three_clauses():
    p = Segment.fresh("p", 3)
    F = Predicate("Friend", ["p", "p"])
    x, y = Var("x", p), Var("y", p)
    t = Theory([Clause([L(F, x, y, positive=False), L(F, y, x)])])
    out = rule_domain_recursion(t, p)
    assert len(out.clauses) == 3
    shapes = {_shape(c) for c in out.clauses}
    assert frozenset({(False, "Friend", ("N", "v")), (True, "Friend", ("v", "N"))}) in shapes
    assert frozenset({(False, "Friend", ("v", "N")), (True, "Friend", ("N", "v"))}) in shapes
    assert frozenset({(False, "Friend", ("v", "v")), (True, "Friend", ("v", "v"))}) in shapes
    # the remaining variables range over the rest of the population
    assert {s.size for s in out.segments()} == {2}


def test_s4_on_dx():
    dx, dy = Segment.fresh("dx", 3), Segment.fresh("dy", 3)
    S = Predicate("S", ["dx", "dy"])
    x1, x2, y1, y2 = Var("x1", dx), Var("x2", dx), Var("y1", dy), Var("y2", dy)
    c = Clause([L(S, x1, y1), L(S, x2, y1, positive=False), L(S, x2, y2), L(S, x1, y2, positive=False)])
    out = rule_domain_recursion(Theory([c]), dx)
    # x1 := N, x2 := N and neither; both at once would reuse the constant.
    # The copy with the constant twice is the tautology of the hand derivation.
    assert len(out.clauses) == 3
    w = {S: (Fraction(2), Fraction(-1, 2))}
    small = Theory([Clause(c.literals)])
    assert oracle_theory(small, w) == oracle_theory(out, w)


def test_empty_segment_rejected():
    with pytest.raises(ValueError):
        rule_domain_recursion(Theory(), Segment.fresh("d", 0))


@pytest.mark.parametrize(
    "name, sizes",
    [
        ("smokers", {"people": 3}),
        ("symtrans", {"p": 3}),
        ("s4", {"dx": 2, "dy": 3}),
        ("fxy_fyx", {"p": 4}),
        ("transitivity", {"p": 3}),
        ("birthday", {"people": 2, "days": 3}),
        ("volunteers", {"v": 2, "j": 2}),
    ],
)
def test_semantics_preserved(name, sizes):
    pr = compile_source(bundled(name, **sizes))
    for seg in pr.theory.segments():
        if seg.size:
            after = rule_domain_recursion(pr.theory, seg)
            assert oracle_theory(after, pr.weights, pr.universe) == oracle_theory(pr.theory, pr.weights, pr.universe)


def _probe(name, **sizes):
    pr = compile_source(bundled(name, **sizes))
    eng = Engine(pr.weights, EngineConfig(mode="RD"), root_order=pr.root_order)
    (seg,) = [s for s in pr.theory.segments() if s.size]
    return probe_candidate(eng, pr.theory, seg)


def test_probe_accepts_symtrans():
    assert _probe("symtrans", p=10)


def test_probe_rejects_transitivity():
    assert not _probe("transitivity", p=10)


def test_probe_empty_theory():
    eng = Engine({}, EngineConfig(mode="RD"))
    assert probe_candidate(eng, Theory(), Segment.fresh("d", 3))


def test_probe_budget_exhaustion():
    pr = compile_source(bundled("symtrans", p=10))
    eng = Engine(pr.weights, EngineConfig(mode="RD"))
    (seg,) = pr.theory.segments()
    assert not probe_candidate(eng, pr.theory, seg, budget=1)


def test_guard_requires_smaller_size():
    g = RecursionGuard()
    g.record("shape", 10)
    assert g.closes("shape", 9)
    assert not g.closes("shape", 10)
    assert not g.closes("other", 1)
