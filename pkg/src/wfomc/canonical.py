"""Renaming-invariant serializations of theories, used as cache keys.

Segments, generic constants and auxiliary predicates are renameable; user
predicates and named constants keep their identity.  Symbols are first
ordered by a few rounds of colour refinement; symbols that remain tied are
tried in every order (when that is cheap) and the smallest serialization
wins.  When the tie groups are too large a deterministic but
non-canonical order is used instead, which can only cost cache hits.

The key is always a complete description of the theory (clauses, segment
roots and sizes, weights), never a bare hash, so equal keys imply
isomorphic theories.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial
from typing import Mapping

from .logic import Clause, Constant, Literal, Predicate, Segment, Theory, Var

PERMUTATION_LIMIT = 720
_CLAUSE_PERM_LIMIT = 5040

Weights = Mapping[Predicate, tuple[Fraction, Fraction]]


def _wkey(w: tuple[Fraction, Fraction]) -> tuple:
    if type(w[0]) is float:
        return w[0].as_integer_ratio() + w[1].as_integer_ratio()
    return (w[0].numerator, w[0].denominator, w[1].numerator, w[1].denominator)


def _clause_var_groups(c: Clause, order_of) -> list[list[Var]]:
    groups: dict = {}
    for v in c.variables:
        groups.setdefault(order_of(v.segment), []).append(v)
    return [groups[k] for k in sorted(groups)]


def serialize_clause(c: Clause, sym: Mapping, pred_key) -> tuple:
    """Smallest serialization of ``c`` over all renamings of its variables
    (within each segment), given indices for the renameable symbols."""
    seg_idx = lambda s: sym[s]
    groups = _clause_var_groups(c, seg_idx)
    lits = list(c.literals)

    def render(assign: dict) -> tuple:
        out = []
        for l in lits:
            args = []
            for a in l.args:
                if type(a) is Var:
                    args.append(assign[a])
                elif a.generic:
                    args.append((1, sym[a]))
                else:
                    args.append((2, a.name))
            out.append((pred_key(l.predicate), l.positive, tuple(args)))
        out.sort()
        return tuple(out)

    n_perm = 1
    for g in groups:
        n_perm *= factorial(len(g))
    if n_perm == 1 or n_perm > _CLAUSE_PERM_LIMIT:
        assign = {}
        for g in groups:
            g = sorted(g, key=lambda v: v.name)
            s = sym[g[0].segment]
            for k, v in enumerate(g):
                assign[v] = (0, s, k)
        return render(assign)
    best = None
    for perms in itertools.product(*(itertools.permutations(g) for g in groups)):
        assign = {}
        for g in perms:
            s = sym[g[0].segment]
            for k, v in enumerate(g):
                assign[v] = (0, s, k)
        r = render(assign)
        if best is None or r < best:
            best = r
    return best


def clause_key(c: Clause) -> tuple:
    """Key of a single clause, invariant under variable renaming only
    (segments and constants keep their identity)."""
    sym = _IdentityIndex()
    return serialize_clause(c, sym, _fixed_pred_key)


class _IdentityIndex(dict):
    def __missing__(self, k):
        if isinstance(k, Segment):
            return k.id
        return k.name


def _fixed_pred_key(p: Predicate) -> tuple:
    return (p.name, p.arity)


def _initial_colors(t: Theory, weights: Weights, sizes: bool) -> dict:
    colors = {}
    for s in t.segments():
        colors[s] = (0, s.root, s.size if (sizes and s.size is not None) else -1)
    for c in t.constants():
        colors[c] = (1, c.root, 0) if c.generic else (2, c.root + "/" + c.name, 0)
    for p in t.predicates():
        if p.aux:
            colors[p] = (3, repr(p.domains) + repr(_wkey(weights[p])), 0)
    return colors


def _rank(colors: dict) -> dict:
    distinct = sorted(set(colors.values()))
    idx = {c: i for i, c in enumerate(distinct)}
    return {k: idx[v] for k, v in colors.items()}


def _refine(t: Theory, colors: dict) -> dict:
    occ: dict = {k: [] for k in colors}
    for c in t.clauses:
        lit_descs = []
        for l in c.literals:
            p = l.predicate
            pc = colors[p] if p.aux else (p.name, p.arity)
            first: dict = {}
            args = []
            for a in l.args:
                if type(a) is Var:
                    k = first.setdefault(a, len(first))
                    args.append((0, colors[a.segment], k))
                else:
                    args.append((1, colors[a], 0))
            lit_descs.append((l, (l.positive, pc if isinstance(pc, int) else -1, p.name, tuple(args))))
        ccol = tuple(sorted(d for _, d in lit_descs))
        for l, d in lit_descs:
            if l.predicate.aux:
                occ[l.predicate].append((ccol, d, -1))
            for i, a in enumerate(l.args):
                s = a.segment if type(a) is Var else a
                if s in occ:
                    occ[s].append((ccol, d, i))
    new = {k: (colors[k], tuple(sorted(v))) for k, v in occ.items()}
    return _rank(new)


def _tie_groups(colors: dict) -> list[list]:
    by: dict = {}
    for k, c in colors.items():
        by.setdefault(c, []).append(k)
    return [by[c] for c in sorted(by)]


def _fallback_key(k) -> tuple:
    if isinstance(k, Segment):
        return (0, k.id, "")
    if isinstance(k, Constant):
        return (1, 0, k.name)
    return (2, 0, k.name)


def canonical_form(t: Theory, weights: Weights, sizes: bool = True) -> tuple[tuple, dict]:
    """Return (key, symbol index map).  With ``sizes=False`` segment sizes are
    erased, giving the *shape* of the theory."""
    colors = _rank(_initial_colors(t, weights, sizes))
    n_classes = len(set(colors.values()))
    for _ in range(3):
        if n_classes == len(colors):
            break
        colors = _refine(t, colors)
        m = len(set(colors.values()))
        if m == n_classes:
            break
        n_classes = m
    groups = _tie_groups(colors)
    n_perm = 1
    for g in groups:
        n_perm *= factorial(len(g))
        if n_perm > PERMUTATION_LIMIT:
            break
    if n_perm > PERMUTATION_LIMIT:
        orders = [[sorted(g, key=_fallback_key) for g in groups]]
    else:
        orders = itertools.product(*(itertools.permutations(g) for g in groups))

    user_w = tuple(sorted((p.name, p.arity) + _wkey(weights[p]) for p in t.predicates() if not p.aux))
    best = None
    best_idx = None
    clauses = list(t.clauses)
    for order in orders:
        flat = [k for g in order for k in g]
        idx = {k: i for i, k in enumerate(flat)}

        def pred_key(p, idx=idx):
            return (1, idx[p], "") if p.aux else (0, p.arity, p.name)

        body = tuple(sorted(serialize_clause(c, idx, pred_key) for c in clauses))
        table = []
        for k in flat:
            if isinstance(k, Segment):
                table.append(("s", k.root, k.size if sizes else None))
            elif isinstance(k, Constant):
                table.append(("c", k.root, k.name if not k.generic else ""))
            else:
                table.append(("p", k.domains, _wkey(weights[k])))
        key = (body, tuple(table), user_w)
        if best is None or key < best:
            best = key
            best_idx = idx
    return best, best_idx


def canonical_key(t: Theory, weights: Weights) -> tuple:
    return canonical_form(t, weights, True)[0]


def shape_key(t: Theory, weights: Weights) -> tuple:
    return canonical_form(t, weights, False)[0]
