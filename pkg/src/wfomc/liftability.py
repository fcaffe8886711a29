"""Membership checks for FO2, RU, S2FO2 and S2RU.

The RU check runs on a copy of the theory whose segments have symbolic
size.  It applies the rules other than lifted case analysis until none
applies, then tries the generic lifted case-analysis branch of every
one-variable cell.  A repeated shape on the current path, or a theory that
keeps growing, gives "unknown".
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .canonical import shape_key
from .engine import (
    apply_lifted_decomposition,
    apply_pair_decomposition,
    find_lifted_decomposition,
    find_pair_decomposition,
    ground_cells,
    lifted_case_branches,
    simplify_structure,
    unary_cells,
    _literal_for_cell,
)
from .logic import Clause, Literal, Predicate, Segment, Theory, Var, connected_components

YES, NO, UNKNOWN = "yes", "no", "unknown"
RU_NODE_BUDGET = 20000
# generic branches of non-RU theories can keep splitting segments without a
# shape ever repeating; past this many clauses the search gives up
RU_CLAUSE_LIMIT = 64
SUBSET_LIMIT = 10


@dataclass
class Verdict:
    answer: str
    witness: str = ""

    @property
    def member(self) -> bool:
        return self.answer == YES


@dataclass
class ClassReport:
    fo2: Verdict
    ru: Verdict
    s2fo2: Verdict
    s2ru: Verdict

    def lines(self) -> list[str]:
        out = []
        for name, v in (("FO2", self.fo2), ("RU", self.ru), ("S2FO2", self.s2fo2), ("S2RU", self.s2ru)):
            out.append(f"{name}: {v.answer}" + (f" ({v.witness})" if v.witness else ""))
        return out


def _combine(answers) -> str:
    answers = list(answers)
    if NO in answers:
        return NO
    if UNKNOWN in answers:
        return UNKNOWN
    return YES


# --------------------------------------------------------------------------
# FO2


def is_fo2(t: Theory) -> Verdict:
    for c in t.clauses:
        if len(c.variables) > 2:
            return Verdict(NO, f"{len(c.variables)} variables in {c}")
    return Verdict(YES)


# --------------------------------------------------------------------------
# RU


def symbolic_copy(t: Theory) -> Theory:
    """The same theory with every segment replaced by one of symbolic size."""
    segs = {s: Segment.fresh(s.root, None) for s in t.segments()}
    vmap = {}
    for c in t.clauses:
        for v in c.variables:
            vmap[v] = Var(v.name, segs[v.segment])
    return Theory(c.rename(vmap) for c in t.clauses)


class _RuChecker:
    def __init__(self):
        self.weights: dict = defaultdict(lambda: (Fraction(1), Fraction(1)))
        self.memo: dict = {}
        self.nodes = 0
        self.witness = ""

    def check(self, t: Theory, path: frozenset) -> str:
        self.nodes += 1
        if self.nodes > RU_NODE_BUDGET:
            self.witness = "search budget exhausted"
            return UNKNOWN
        s, _ = simplify_structure(t)
        if s is None or not s.clauses:
            return YES
        comps = connected_components(s)
        if len(comps) > 1:
            return self._all(self.check(c, path) for c in comps)
        seg = find_lifted_decomposition(s)
        if seg is not None:
            return self.check(apply_lifted_decomposition(s, seg), path)
        seg = find_pair_decomposition(s)
        if seg is not None:
            return self.check(apply_pair_decomposition(s, seg), path)
        gc = ground_cells(s)
        if gc:
            lit = _literal_for_cell(s, gc[0])
            pos = Literal(True, lit.predicate, lit.args)
            return self._all(
                self.check(Theory(s.clauses | {Clause([l])}), path) for l in (pos, pos.negate())
            )
        if len(s.clauses) > RU_CLAUSE_LIMIT:
            self.witness = f"theory grew past {RU_CLAUSE_LIMIT} clauses"
            return UNKNOWN
        shape = shape_key(s, self.weights)
        if shape in path:
            self.witness = f"shape repeats: {s}"
            return UNKNOWN
        if shape in self.memo:
            return self.memo[shape]
        uc = unary_cells(s)
        if not uc:
            self.witness = f"no one-variable atom in {s}"
            res = NO
        else:
            seen = []
            for cell in uc:
                ((_, _, branch),) = list(lifted_case_branches(s, cell, [None]))
                r = self.check(branch, path | {shape})
                seen.append(r)
                if r == YES:
                    break
            res = YES if YES in seen else (UNKNOWN if UNKNOWN in seen else NO)
        self.memo[shape] = res
        return res

    @staticmethod
    def _all(gen) -> str:
        out = YES
        for r in gen:
            if r == NO:
                return NO
            if r == UNKNOWN:
                out = UNKNOWN
        return out


def is_ru(t: Theory) -> Verdict:
    chk = _RuChecker()
    ans = chk.check(symbolic_copy(t), frozenset())
    return Verdict(ans, "" if ans == YES else chk.witness)


# --------------------------------------------------------------------------
# S2FO2 / S2RU


def _alpha_candidates(t: Theory) -> list[Predicate]:
    preds = {l.predicate for c in t.clauses for l in c.literals}
    out = [p for p in preds if p.arity == 2 and p.domains[0] != p.domains[1]]
    return sorted(out, key=lambda p: p.name)


def _is_alpha_clause(c: Clause, S: set) -> bool:
    ps = {l.predicate for l in c.literals}
    return len(c.literals) == 2 and len(ps) == 1 and next(iter(ps)) in S


def _literal_vars(l: Literal) -> int:
    return len(set(a for a in l.args if type(a) is Var))


def _split(t: Theory, S: set) -> tuple[list[Clause], list[Clause], str]:
    """(alpha, beta, reason beta violates the shape or "")."""
    alpha, beta = [], []
    for c in t.clauses:
        (alpha if _is_alpha_clause(c, S) else beta).append(c)
    for c in beta:
        s_lits = [l for l in c.literals if l.predicate in S]
        if len(s_lits) > 1:
            return alpha, beta, f"{c} has {len(s_lits)} alpha literals"
        if s_lits and any(_literal_vars(l) > 1 for l in c.literals if l is not s_lits[0]):
            return alpha, beta, f"{c} mixes an alpha literal with a binary atom"
    return alpha, beta, ""


def _s2_check(t: Theory, beta_check) -> Verdict:
    cands = _alpha_candidates(t)
    if len(cands) > SUBSET_LIMIT:
        subsets = [(), tuple(cands)]
    else:
        subsets = [c for r in range(len(cands) + 1) for c in itertools.combinations(cands, r)]
    answers = []
    last = ""
    for sub in subsets:
        S = set(sub)
        alpha, beta, why = _split(t, S)
        if why:
            last = why
            answers.append(NO)
            continue
        v = beta_check(Theory(beta))
        answers.append(v.answer)
        if v.answer == YES:
            names = ",".join(p.name for p in sub) or "none"
            return Verdict(YES, f"S={{{names}}}, {len(alpha)} alpha / {len(beta)} beta clauses")
        last = f"beta: {v.witness}"
    ans = UNKNOWN if UNKNOWN in answers else NO
    return Verdict(ans, last)


def is_s2fo2(t: Theory) -> Verdict:
    return _s2_check(t, is_fo2)


def is_s2ru(t: Theory) -> Verdict:
    return _s2_check(t, is_ru)


def classify(t: Theory) -> ClassReport:
    return ClassReport(is_fo2(t), is_ru(t), is_s2fo2(t), is_s2ru(t))
