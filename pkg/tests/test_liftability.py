import pytest

from helpers import bundled, random_theory
from wfomc.liftability import NO, UNKNOWN, YES, classify, is_fo2, is_ru, is_s2fo2, is_s2ru
from wfomc.parser import parse_theory
from wfomc.preprocess import compile_source


def theory(name, **sizes):
    return compile_source(bundled(name, **sizes)).theory


def answers(t):
    r = classify(t)
    return r.fo2.answer, r.ru.answer, r.s2fo2.answer, r.s2ru.answer


def test_smokers_all_yes():
    assert answers(theory("smokers")) == (YES, YES, YES, YES)


def test_s4_all_no():
    t = theory("s4")
    v = is_fo2(t)
    assert v.answer == NO and "4 variables" in v.witness
    assert answers(t) == (NO, NO, NO, NO)


def test_volunteers():
    t = theory("volunteers")
    assert answers(t) == (NO, NO, YES, YES)
    assert "Assigned" in is_s2fo2(t).witness


def test_birthday_skolemized():
    t = theory("birthday")
    s = is_s2fo2(t)
    assert s.answer == YES and "Born" in s.witness
    assert is_s2ru(t).answer == YES
    assert is_fo2(t).answer == NO


def test_symtrans_not_ru():
    t = theory("symtrans")
    assert is_ru(t).answer in (NO, UNKNOWN)
    # F is over p x p, so it can never be an alpha predicate
    assert is_s2ru(t).answer in (NO, UNKNOWN)


def test_fxy_fyx_fo2():
    assert answers(theory("fxy_fyx")) == (YES, YES, YES, YES)


def test_three_variable_example_not_fo2():
    src = parse_theory("domain p 3\npredicate F(p,p)\npredicate F(p,p,p)\nF(x,y) | F(y,z) | F(x,y,z)\n")
    assert is_fo2(compile_source(src).theory).answer == NO


def test_report_lines():
    lines = classify(theory("volunteers")).lines()
    assert [l.split(":")[0] for l in lines] == ["FO2", "RU", "S2FO2", "S2RU"]


def _corpus():
    for seed in range(500):
        yield seed, compile_source(random_theory(seed)).theory


def test_subset_laws_random_corpus():
    violations = []
    for seed, t in _corpus():
        fo2, ru, s2fo2, s2ru = answers(t)
        if fo2 == YES and ru == NO:
            violations.append((seed, "FO2 but not RU"))
        if fo2 == YES and s2fo2 != YES:
            violations.append((seed, "FO2 but not S2FO2"))
        if ru == YES and s2ru == NO:
            violations.append((seed, "RU but not S2RU"))
        if s2fo2 == YES and s2ru == NO:
            violations.append((seed, "S2FO2 but not S2RU"))
    assert violations == []


@pytest.mark.parametrize("seed", range(0, 500, 50))
def test_ru_member_is_engine_solvable_without_grounding(seed):
    from helpers import run_engine

    src = random_theory(seed)
    t = compile_source(src).theory
    if is_ru(t).answer != YES:
        pytest.skip("not RU")
    _, eng = run_engine(src, "R", ground_atom_limit=0)
    assert eng.stats.groundings == 0
