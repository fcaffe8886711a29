"""From parsed source to weighted universal clauses.

* ``exists v: L1 | ... | Lk`` becomes ``Sk(u) | !Li`` for every literal,
  where ``u`` are the remaining variables and Sk has weights (1, -1).
  Per grounding of ``u`` the Skolem atom contributes 1 - [no witness],
  which is exactly [some witness exists].
* ``mln w f`` becomes ``Aux(v) <=> f`` in CNF with Aux weighted (w, 1).
  Because distinct variables denote distinct individuals, the biconditional
  is emitted once for every way the free variables can coincide (with each
  other or with constants of the formula), so every grounding of the
  formula is covered as in a standard Markov logic network.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Iterable, Sequence

from .logic import Clause, Constant, Literal, Predicate, Segment, Theory, Var, shatter_clause
from .parser import (
    Formula,
    MlnFormula,
    PredDecl,
    SClause,
    SLiteral,
    SourceTheory,
    formula_literals,
    is_variable,
)

DEFAULT_LITERAL_BOUND = 16


class EncodingError(ValueError):
    pass


@dataclass
class EncodingArtifacts:
    """Predicates introduced by preprocessing, with their provenance."""

    skolem: dict[str, PredDecl] = field(default_factory=dict)
    aux: dict[str, PredDecl] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)


def _fresh_name(src: SourceTheory, stem: str, taken: set) -> str:
    names = {k[0] for k in src.predicates} | taken
    i = 1
    while f"{stem}{i}" in names:
        i += 1
    taken.add(f"{stem}{i}")
    return f"{stem}{i}"


def _clause_vars(lits: Iterable[SLiteral]) -> list[str]:
    out: list[str] = []
    for l in lits:
        for a in l.args:
            if is_variable(a) and a not in out:
                out.append(a)
    return out


def _var_domains(src: SourceTheory, lits: Iterable[SLiteral]) -> dict[str, str]:
    doms = {}
    for l in lits:
        decl = src.pred(l.pred, len(l.args))
        for a, d in zip(l.args, decl.domains):
            if is_variable(a):
                doms[a] = d
    return doms


# --------------------------------------------------------------------------
# Skolemization


@dataclass(frozen=True)
class _Sentence:
    """A clause plus the constants its variables must avoid."""

    literals: tuple[SLiteral, ...]
    avoid: frozenset[str] | None = None


def _skolemize_clause(src: SourceTheory, c: SClause, name: str) -> tuple[PredDecl, list[SClause]]:
    v = c.exists
    for l in c.literals:
        if v not in l.args:
            raise EncodingError(f"unsupported existential shape: literal {l} does not mention {v}")
    doms = _var_domains(src, c.literals)
    u = [x for x in _clause_vars(c.literals) if x != v]
    decl = PredDecl(name, tuple(doms[x] for x in u), (Fraction(1), Fraction(-1)))
    sk = SLiteral(True, name, tuple(u))
    return decl, [SClause((sk, SLiteral(not l.positive, l.pred, l.args))) for l in c.literals]


def _skolemize(src: SourceTheory) -> tuple[SourceTheory, EncodingArtifacts, list[_Sentence]]:
    out = src.copy()
    out.clauses = []
    art = EncodingArtifacts()
    sentences = []
    taken: set = set()
    for c in src.clauses:
        if c.exists is None:
            out.clauses.append(c)
            sentences.append(_Sentence(c.literals))
            continue
        name = _fresh_name(src, "Sk", taken)
        decl, clauses = _skolemize_clause(src, c, name)
        out.predicates[(name, decl.arity)] = decl
        out.clauses.extend(clauses)
        art.skolem[name] = decl
        art.provenance[name] = f"exists {c.exists}: " + " | ".join(map(str, c.literals))
        # the variables keep avoiding every constant of the original sentence
        avoid = frozenset(_sentence_constants(c.literals))
        sentences.extend(_Sentence(k.literals, avoid) for k in clauses)
    return out, art, sentences


def skolemize_existentials(src: SourceTheory) -> tuple[SourceTheory, EncodingArtifacts]:
    """Replace every existential clause by Skolem clauses."""
    out, art, _ = _skolemize(src)
    return out, art


# --------------------------------------------------------------------------
# MLN encoding


def _nnf(f: Formula, neg: bool = False) -> Formula:
    op = f[0]
    if op == "lit":
        l = f[1]
        return ("lit", SLiteral(l.positive != neg, l.pred, l.args))
    if op == "not":
        return _nnf(f[1], not neg)
    if op == "and":
        return ("or" if neg else "and", _nnf(f[1], neg), _nnf(f[2], neg))
    if op == "or":
        return ("and" if neg else "or", _nnf(f[1], neg), _nnf(f[2], neg))
    if op == "imp":
        return _nnf(("or", ("not", f[1]), f[2]), neg)
    if op == "iff":
        a, b = f[1], f[2]
        return _nnf(("and", ("imp", a, b), ("imp", b, a)), neg)
    raise ValueError(op)


def _cnf(f: Formula) -> list[frozenset[SLiteral]]:
    op = f[0]
    if op == "lit":
        return [frozenset([f[1]])]
    if op == "and":
        return _cnf(f[1]) + _cnf(f[2])
    left, right = _cnf(f[1]), _cnf(f[2])
    return [a | b for a in left for b in right]


def _clean(clauses: Iterable[frozenset[SLiteral]]) -> list[frozenset[SLiteral]]:
    out = []
    seen = set()
    for c in clauses:
        if any(SLiteral(not l.positive, l.pred, l.args) in c for l in c):
            continue
        if c in seen:
            continue
        seen.add(c)
        out.append(c)
    return out


def _subst_formula(f: Formula, m: dict) -> Formula:
    if f[0] == "lit":
        l = f[1]
        return ("lit", SLiteral(l.positive, l.pred, tuple(m.get(a, a) for a in l.args)))
    return (f[0],) + tuple(_subst_formula(g, m) for g in f[1:])


def _set_partitions(items: Sequence[str]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in _set_partitions(rest):
        yield [[first]] + p
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1 :]


def equality_patterns(vars_by_dom: dict[str, list[str]], consts_by_dom: dict[str, list[str]]):
    """Every way the variables may coincide with each other or with the given
    constants, as substitutions var -> representative var or constant."""
    per_dom = []
    for d, vs in vars_by_dom.items():
        options = []
        consts = consts_by_dom.get(d, [])
        for part in _set_partitions(vs):
            # each block is either free or pinned to a distinct constant
            for pins in itertools.product([None] + consts, repeat=len(part)):
                used = [p for p in pins if p is not None]
                if len(used) != len(set(used)):
                    continue
                m = {}
                for block, pin in zip(part, pins):
                    rep = pin if pin is not None else block[0]
                    for v in block:
                        m[v] = rep
                options.append(m)
        per_dom.append(options)
    for combo in itertools.product(*per_dom):
        m = {}
        for part in combo:
            m.update(part)
        yield m


def encode_mln_formula(
    weight: Fraction,
    f: Formula,
    src: SourceTheory,
    aux_name: str = "Aux1",
    literal_bound: int = DEFAULT_LITERAL_BOUND,
) -> tuple[list[SClause], PredDecl]:
    """Clauses of Aux(v) <=> f over all equality patterns, plus the Aux
    declaration with weights (weight, 1)."""
    lits = formula_literals(f)
    if len(lits) > literal_bound:
        raise EncodingError(f"formula has {len(lits)} literals, above the bound {literal_bound}")
    doms = _var_domains(src, lits)
    fv = _clause_vars(lits)
    decl = PredDecl(aux_name, tuple(doms[v] for v in fv), (Fraction(weight), Fraction(1)))
    vars_by_dom: dict[str, list[str]] = {}
    for v in fv:
        vars_by_dom.setdefault(doms[v], []).append(v)
    consts_by_dom: dict[str, list[str]] = {}
    for l in lits:
        d = src.pred(l.pred, len(l.args)).domains
        for a, dom in zip(l.args, d):
            if not is_variable(a) and a not in consts_by_dom.setdefault(dom, []):
                consts_by_dom[dom].append(a)
    out: list[SClause] = []
    seen: set = set()
    for m in equality_patterns(vars_by_dom, consts_by_dom):
        g = _subst_formula(f, m)
        aux_args = tuple(m.get(v, v) for v in fv)
        pos = SLiteral(True, aux_name, aux_args)
        neg = SLiteral(False, aux_name, aux_args)
        cls = [c | {neg} for c in _cnf(_nnf(g))] + [c | {pos} for c in _cnf(_nnf(g, True))]
        for c in _clean(cls):
            key = frozenset(c)
            if key in seen:
                continue
            seen.add(key)
            out.append(SClause(tuple(sorted(c, key=str))))
    return out, decl


def encode_mln(src: SourceTheory, literal_bound: int = DEFAULT_LITERAL_BOUND) -> tuple[SourceTheory, EncodingArtifacts]:
    out = src.copy()
    out.mln = []
    art = EncodingArtifacts()
    taken: set = set()
    for m in src.mln:
        name = _fresh_name(src, "Aux", taken)
        clauses, decl = encode_mln_formula(m.weight, m.formula, src, name, literal_bound)
        out.predicates[(name, decl.arity)] = decl
        out.clauses.extend(clauses)
        art.aux[name] = decl
        art.provenance[name] = f"mln {m.weight}"
    return out, art


# --------------------------------------------------------------------------
# normalization and compilation


def normalize_theory(t: Theory) -> Theory:
    """Drop tautologies and duplicate clauses (duplicate literals are already
    merged because clauses are sets)."""
    return Theory(c for c in t.clauses if not c.is_tautology())


@dataclass
class Problem:
    """A compiled weighted theory ready for counting."""

    theory: Theory
    weights: dict[Predicate, tuple[Fraction, Fraction]]
    universe: dict[Predicate, int]
    domains: dict[str, int]
    root_segments: dict[str, Segment]
    constants: dict[str, list[Constant]]
    predicates: dict[tuple[str, int], Predicate]
    artifacts: EncodingArtifacts
    source: SourceTheory

    @property
    def root_order(self) -> list[str]:
        return list(self.domains)


def _sentence_constants(lits: Iterable[SLiteral]) -> set[str]:
    return {a for l in lits for a in l.args if not is_variable(a)}


def compile_source(src: SourceTheory, literal_bound: int = DEFAULT_LITERAL_BOUND) -> Problem:
    """Skolemize, encode MLN formulas and build the engine theory."""
    sk_src, sk_art, sentences = _skolemize(src)
    full, mln_art = encode_mln(sk_src, literal_bound)
    art = EncodingArtifacts(sk_art.skolem, mln_art.aux, {**sk_art.provenance, **mln_art.provenance})
    sentences += [_Sentence(c.literals) for c in full.clauses[len(sk_src.clauses) :]]

    consts: dict[str, list[Constant]] = {d: [] for d in full.domains}
    seen_const: dict[str, Constant] = {}
    for s in sentences:
        for l in s.literals:
            decl = full.pred(l.pred, len(l.args))
            for a, d in zip(l.args, decl.domains):
                if not is_variable(a):
                    k = seen_const.get(a)
                    if k is None:
                        k = seen_const[a] = Constant(a, d, generic=False)
                        consts[d].append(k)
                    elif k.root != d:
                        raise EncodingError(f"constant {a} used in domains {k.root} and {d}")
    roots = {}
    for d, n in full.domains.items():
        m = n - len(consts[d])
        if m < 0:
            raise EncodingError(f"domain {d} has more named constants than individuals")
        roots[d] = Segment.fresh(d, m)
    preds = {k: Predicate(p.name, p.domains) for k, p in full.predicates.items()}
    weights = {preds[k]: p.weights for k, p in full.predicates.items()}

    clauses: list[Clause] = []
    for s in sentences:
        doms = _var_domains(full, s.literals)
        vmap = {v: Var(v, roots[d]) for v, d in doms.items()}
        lits = []
        for l in s.literals:
            p = preds[(l.pred, len(l.args))]
            args = [vmap[a] if is_variable(a) else seen_const[a] for a in l.args]
            lits.append(Literal(l.positive, p, args))
        c = Clause(lits)
        avoid = s.avoid if s.avoid is not None else _sentence_constants(s.literals)
        cur = [c]
        for d, seg in roots.items():
            others = [k for k in consts[d] if k.name not in avoid]
            if not others:
                continue
            cur = [cc for x in cur for cc in shatter_clause(x, seg, [seg] + others)]
        clauses.extend(cur)
    theory = Theory(clauses)
    mentioned = theory.atom_counts()
    universe = {}
    for k, p in preds.items():
        if p.name in art.skolem:
            universe[p] = mentioned.get(p, 0)
        else:
            universe[p] = prod(full.domains[d] for d in p.domains)
    return Problem(theory, weights, universe, dict(full.domains), roots, consts, preds, art, src)


def solve(problem: Problem, config=None, cache=None):
    """Exact weighted model count of a compiled problem."""
    from .engine import wfomc

    return wfomc(problem.theory, problem.weights, config, problem.universe, cache, problem.root_order)
