"""Brute-force weighted model counting over all truth assignments.

Deliberately simple: ground everything, enumerate every assignment in
numpy blocks, and sum exact weights.  Used to check the lifted engine.

Two entry points build a ground theory:

* ``ground_source`` works on a parsed source file and evaluates existential
  clauses and MLN formulas directly, without the preprocessing rewrites.
* ``ground_theory`` works on an engine ``Theory`` (segments and constants).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import numpy as np

from .logic import Constant, Theory, Var
from .parser import SourceTheory, is_variable

DEFAULT_LIMIT = 26
_LOW_BITS = 20


class OracleLimitExceeded(RuntimeError):
    pass


@dataclass
class GroundTheory:
    """Ground atoms ``(pred_key, args)``, clauses as tuples of signed 1-based
    atom indices, MLN factors as (weight, ground formula) and the number of
    unconstrained atoms per predicate key."""

    atoms: list[tuple] = field(default_factory=list)
    clauses: list[tuple[int, ...]] = field(default_factory=list)
    factors: list[tuple[Fraction, tuple]] = field(default_factory=list)
    free: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)
    unsat: bool = False

    def atom(self, key: Hashable, args: tuple) -> int:
        a = (key, args)
        i = self.index.get(a)
        if i is None:
            i = self.index[a] = len(self.atoms)
            self.atoms.append(a)
        return i

    def add_clause(self, lits: Sequence[int]) -> None:
        s = set(lits)
        if any(-l in s for l in s):
            return
        if not s:
            self.unsat = True
        self.clauses.append(tuple(sorted(s, key=abs)))


# --------------------------------------------------------------------------
# grounding


def _injective(vars_by_dom: dict[str, list[str]], pools: dict[str, list]):
    """All assignments mapping distinct variables of a domain to distinct
    individuals of the given pools."""
    doms = list(vars_by_dom)
    per = [itertools.permutations(pools[d], len(vars_by_dom[d])) for d in doms]
    for combo in itertools.product(*per):
        m = {}
        for d, vals in zip(doms, combo):
            m.update(zip(vars_by_dom[d], vals))
        yield m


def _source_individuals(src: SourceTheory) -> dict[str, list[str]]:
    named: dict[str, list[str]] = {d: [] for d in src.domains}

    def visit(lits):
        for l in lits:
            decl = src.pred(l.pred, len(l.args))
            for a, d in zip(l.args, decl.domains):
                if not is_variable(a) and a not in named[d]:
                    named[d].append(a)

    for c in src.clauses:
        visit(c.literals)
    for m in src.mln:
        visit(_formula_lits(m.formula))
    out = {}
    for d, n in src.domains.items():
        if len(named[d]) > n:
            raise ValueError(f"domain {d} has more named constants than individuals")
        out[d] = named[d] + [f"{d}#{i}" for i in range(n - len(named[d]))]
    return out


def _formula_lits(f):
    if f[0] == "lit":
        return [f[1]]
    return [l for g in f[1:] for l in _formula_lits(g)]


def _lit_domains(src: SourceTheory, lits) -> tuple[list[str], dict[str, str]]:
    order, doms = [], {}
    for l in lits:
        decl = src.pred(l.pred, len(l.args))
        for a, d in zip(l.args, decl.domains):
            if is_variable(a) and a not in doms:
                doms[a] = d
                order.append(a)
    return order, doms


def _by_dom(vs, doms) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for v in vs:
        out.setdefault(doms[v], []).append(v)
    return out


def ground_source(src: SourceTheory, limit: int = DEFAULT_LIMIT) -> GroundTheory:
    """Ground a source theory under the distinctness convention for clause
    variables; existentials become one disjunction per outer assignment and
    MLN formulas range over all tuples."""
    ind = _source_individuals(src)
    g = GroundTheory()

    def lit_index(l, m) -> int:
        i = g.atom((l.pred, len(l.args)), tuple(m.get(a, a) for a in l.args))
        return i + 1 if l.positive else -(i + 1)

    for c in src.clauses:
        order, doms = _lit_domains(src, c.literals)
        consts = {a for l in c.literals for a in l.args if not is_variable(a)}
        pools = {d: [x for x in xs if x not in consts] for d, xs in ind.items()}
        outer = [v for v in order if v != c.exists]
        for m in _injective(_by_dom(outer, doms), pools):
            if c.exists is None:
                g.add_clause([lit_index(l, m) for l in c.literals])
                continue
            d = doms[c.exists]
            taken = set(m.values())
            lits = []
            for val in pools[d]:
                if val in taken:
                    continue
                mm = dict(m)
                mm[c.exists] = val
                lits.extend(lit_index(l, mm) for l in c.literals)
            g.add_clause(lits)
    for mf in src.mln:
        order, doms = _lit_domains(src, _formula_lits(mf.formula))
        for vals in itertools.product(*(ind[doms[v]] for v in order)):
            m = dict(zip(order, vals))
            g.factors.append((mf.weight, _ground_formula(mf.formula, lambda l: lit_index(l, m))))
    for (name, ar), decl in src.predicates.items():
        total = 1
        for d in decl.domains:
            total *= src.domains[d]
        used = sum(1 for k, _ in g.atoms if k == (name, ar))
        g.free[(name, ar)] = total - used
    _check(g, limit)
    return g


def _ground_formula(f, lit_index):
    if f[0] == "lit":
        return ("lit", lit_index(f[1]))
    return (f[0],) + tuple(_ground_formula(h, lit_index) for h in f[1:])


def ground_theory(t: Theory, universe: Mapping | None = None, limit: int = DEFAULT_LIMIT) -> GroundTheory:
    """Ground an engine theory.  Segment members become fresh individuals;
    variables of one segment take pairwise distinct values."""
    members = {}
    for s in t.segments():
        if s.size is None:
            raise ValueError("cannot ground a symbolic segment")
        members[s] = [(s.id, i) for i in range(s.size)]
    g = GroundTheory()
    for c in t.clauses:
        vs = sorted(c.variables, key=lambda v: (v.segment.id, v.name))
        by_seg: dict = {}
        for v in vs:
            by_seg.setdefault(v.segment, []).append(v)
        segs = list(by_seg)
        per = [itertools.permutations(members[s], len(by_seg[s])) for s in segs]
        for combo in itertools.product(*per):
            m = {}
            for s, vals in zip(segs, combo):
                m.update(zip(by_seg[s], vals))
            lits = []
            for l in c.literals:
                args = tuple(m[a] if type(a) is Var else a.name for a in l.args)
                i = g.atom(l.predicate, args) + 1
                lits.append(i if l.positive else -i)
            g.add_clause(lits)
    # every atom of a mentioned cell belongs to the problem, even when no
    # clause instance survives distinctness
    for p, n in t.atom_counts().items():
        used = sum(1 for k, _ in g.atoms if k == p)
        if n > used:
            g.free[p] = g.free.get(p, 0) + n - used
    if universe:
        mentioned = t.atom_counts()
        for p, total in universe.items():
            extra = total - mentioned.get(p, 0)
            if extra:
                g.free[p] = g.free.get(p, 0) + extra
    _check(g, limit)
    return g


def _check(g: GroundTheory, limit: int) -> None:
    if len(g.atoms) > limit:
        raise OracleLimitExceeded(f"{len(g.atoms)} ground atoms exceed the oracle limit {limit}")


# --------------------------------------------------------------------------
# enumeration


def _eval_formula(f, val):
    op = f[0]
    if op == "lit":
        v = val(abs(f[1]) - 1)
        return v if f[1] > 0 else ~v
    if op == "not":
        return ~_eval_formula(f[1], val)
    a = _eval_formula(f[1], val)
    b = _eval_formula(f[2], val)
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "imp":
        return ~a | b
    return ~(a ^ b)


def brute_force_wfomc(
    g: GroundTheory, weights: Mapping, limit: int = DEFAULT_LIMIT, low_bits: int = _LOW_BITS
) -> Fraction:
    """Sum over all assignments of the product of atom weights (and MLN
    factor values) for assignments satisfying every ground clause."""
    _check(g, limit)
    w = {k: (Fraction(a), Fraction(b)) for k, (a, b) in weights.items()}
    free = Fraction(1)
    for k, m in g.free.items():
        if m:
            free *= (w[k][0] + w[k][1]) ** m
    if g.unsat:
        return Fraction(0)
    n = len(g.atoms)
    keys = sorted({k for k, _ in g.atoms}, key=repr)
    atoms_of = {k: [i for i, (kk, _) in enumerate(g.atoms) if kk == k] for k in keys}
    # mixed radix code: true-atom count per predicate, then satisfied count per factor weight
    fweights = sorted({fw for fw, _ in g.factors})
    fcount = Counter(fw for fw, _ in g.factors)
    dims = [len(atoms_of[k]) + 1 for k in keys] + [fcount[fw] + 1 for fw in fweights]
    radix = []
    r = 1
    for d in dims:
        radix.append(r)
        r *= d
    if r >= 1 << 62:
        raise OracleLimitExceeded("too many weight classes")

    lo = min(n, low_bits)
    idx = np.arange(1 << lo, dtype=np.uint64)
    bits = [((idx >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in range(lo)]
    base = np.zeros(1 << lo, dtype=np.int64)
    for j, k in enumerate(keys):
        mask = sum(1 << i for i in atoms_of[k] if i < lo)
        if mask:
            base += np.bitwise_count(idx & np.uint64(mask)).astype(np.int64) * radix[j]
    hist: Counter = Counter()
    ones = np.ones(1 << lo, dtype=bool)
    for hi in range(1 << (n - lo)):

        def val(i):
            if i < lo:
                return bits[i]
            return ones if (hi >> (i - lo)) & 1 else ~ones

        ok = ones.copy()
        for c in g.clauses:
            sat = None
            done = False
            for l in c:
                i = abs(l) - 1
                if i >= lo:
                    if bool((hi >> (i - lo)) & 1) == (l > 0):
                        done = True
                        break
                    continue
                b = bits[i] if l > 0 else ~bits[i]
                sat = b if sat is None else sat | b
            if done:
                continue
            if sat is None:
                ok[:] = False
                break
            ok &= sat
        if not ok.any():
            continue
        code = base.copy()
        for j, k in enumerate(keys):
            hmask = sum(1 << (i - lo) for i in atoms_of[k] if i >= lo)
            code += bin(hi & hmask).count("1") * radix[j]
        for fw, f in g.factors:
            j = len(keys) + fweights.index(fw)
            code += _eval_formula(f, val).astype(np.int64) * radix[j]
        vals, counts = np.unique(code[ok], return_counts=True)
        for v, c in zip(vals.tolist(), counts.tolist()):
            hist[v] += c

    total = Fraction(0)
    for code, cnt in hist.items():
        term = Fraction(cnt)
        for j, k in enumerate(keys):
            kt = (code // radix[j]) % dims[j]
            term *= w[k][0] ** kt * w[k][1] ** (len(atoms_of[k]) - kt)
        for jj, fw in enumerate(fweights):
            j = len(keys) + jj
            kt = (code // radix[j]) % dims[j]
            term *= Fraction(fw) ** kt
        total += term
    return total * free


def oracle_source(src: SourceTheory, limit: int = DEFAULT_LIMIT) -> Fraction:
    """WFOMC (or MLN partition function) of a parsed source theory."""
    g = ground_source(src, limit)
    weights = {k: d.weights for k, d in src.predicates.items()}
    return brute_force_wfomc(g, weights, limit)


def oracle_theory(t: Theory, weights: Mapping, universe: Mapping | None = None, limit: int = DEFAULT_LIMIT) -> Fraction:
    """WFOMC of an engine theory over its mentioned atoms (plus ``universe``)."""
    return brute_force_wfomc(ground_theory(t, universe, limit), weights, limit)
