from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import bundled_text, random_theory_text
from wfomc.cli import bundled_theories
from wfomc.parser import ParseError, parse_theory, parse_weight, serialize_theory

SMOKERS = """domain people 2
predicate Smokes(people) 0.2 0.5
predicate Cancer(people) 0.8 1.2
!Smokes(x) | Cancer(x)
"""


def test_smokers_weights_exact():
    src = parse_theory(SMOKERS)
    assert src.domains == {"people": 2}
    assert src.pred("Smokes", 1).weights == (Fraction(1, 5), Fraction(1, 2))
    assert src.pred("Cancer", 1).weights == (Fraction(4, 5), Fraction(6, 5))
    (c,) = src.clauses
    assert [str(l) for l in c.literals] == ["!Smokes(x)", "Cancer(x)"]


def test_empty_input():
    src = parse_theory("")
    assert not src.domains and not src.predicates and not src.clauses and not src.mln


def test_comments_and_blank_lines():
    src = parse_theory("// header\n\ndomain d 3 // trailing\n")
    assert src.domains == {"d": 3}


def test_default_weights():
    src = parse_theory("domain d 1\npredicate P(d)\n")
    assert src.pred("P", 1).weights == (1, 1)


@pytest.mark.parametrize(
    "text, w", [("0.2", Fraction(1, 5)), ("-1/3", Fraction(-1, 3)), ("3", Fraction(3)), ("1e-2", Fraction(1, 100))]
)
def test_parse_weight(text, w):
    assert parse_weight(text) == w


def _err(text):
    with pytest.raises(ParseError) as e:
        parse_theory(text)
    return e.value


def test_inconsistent_variable_domain():
    e = _err("domain a 2\ndomain b 2\npredicate S(a)\npredicate C(b)\n!S(x) | C(x)\n")
    assert e.line == 5 and e.col == 11
    assert "domain" in e.msg


def test_unknown_predicate():
    e = _err("domain a 2\nP(x)\n")
    assert e.line == 2 and e.col == 1 and "unknown predicate" in e.msg


def test_arity_mismatch():
    e = _err("domain a 2\npredicate P(a)\nP(x,y)\n")
    assert "arity" in e.msg


def test_malformed_weight():
    e = _err("domain a 2\npredicate P(a) 0.2 x1\n")
    assert e.line == 2 and "weight" in e.msg


def test_duplicate_domain():
    assert "duplicate" in _err("domain a 2\ndomain a 3\n").msg


def test_unknown_domain():
    assert "unknown domain" in _err("predicate P(a)\n").msg


def test_existential_variable_must_occur():
    assert _err("domain a 2\npredicate P(a)\nexists d: P(x)\n").line == 3


def test_mln_precedence():
    src = parse_theory("domain a 2\npredicate P(a)\npredicate Q(a)\nmln 2 !P(x) & Q(x) | P(x) => Q(x) <=> P(x)\n")
    f = src.mln[0].formula
    assert f[0] == "iff"
    assert f[1][0] == "imp"
    assert f[1][1][0] == "or" and f[1][1][1][0] == "and"


def test_mln_negated_group():
    src = parse_theory("domain a 2\npredicate P(a)\nmln 1/2 !(P(x) | !P(x))\n")
    f = src.mln[0].formula
    assert f[0] == "not" and f[1][0] == "or"


def test_serialize_keeps_exists_and_fractions():
    text = "domain d 3\ndomain p 2\npredicate Born(p,d) 1/3 1\nexists d: Born(p,d)\n"
    out = serialize_theory(parse_theory(text))
    assert "exists d: Born(p,d)" in out
    assert "1/3" in out
    assert parse_theory(out) == parse_theory(text)


@pytest.mark.parametrize("name", bundled_theories())
def test_round_trip_bundled(name):
    src = parse_theory(bundled_text(name))
    assert parse_theory(serialize_theory(src)) == src


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip_random(seed):
    src = parse_theory(random_theory_text(seed))
    assert parse_theory(serialize_theory(src)) == src
