"""The lifted counting driver.

``Engine.count(t)`` returns the weighted model count of ``t`` over exactly
the ground atoms its clauses mention.  Rules are tried in a fixed order:

1. simplification: vacuous clauses, tautologies, duplicates, unit
   propagation, complementary-literal merging and subsumption
2. cache lookup
3. decomposition into independent components
4. lifted decomposition (one variable, or an unordered pair of variables)
5. case analysis on a ground atom
6. lifted case analysis on a cell with one variable
7. the reused-variable rewrite
8. domain recursion (RD mode only, guarded by a probe)
9. grounding

Weights are applied only when unit propagation fixes a cell.  Whenever a
simplification makes atoms disappear without fixing them, the result is
multiplied by (w + w_bar) per vanished atom.
"""

from __future__ import annotations

import itertools
import sys
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from .canonical import canonical_form, canonical_key, clause_key
from .logic import (
    Clause,
    Constant,
    Literal,
    Predicate,
    Segment,
    Theory,
    Var,
    cell_size,
    cell_vars,
    connected_components,
    shatter_theory,
    split_segment,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

Weights = dict[Predicate, tuple[Fraction, Fraction]]

SUBSUMPTION_MAPPING_CAP = 1000
SUBSUMPTION_CLAUSE_CAP = 80


class EngineError(RuntimeError):
    """Base class for engine failures; carries partial statistics."""

    code = "engine-error"

    def __init__(self, msg: str, stats: "Stats | None" = None):
        super().__init__(msg)
        self.stats = stats


class GroundingTooLarge(EngineError):
    code = "grounding-too-large"


class BudgetExceeded(EngineError):
    code = "budget-exceeded"


@dataclass
class EngineConfig:
    mode: str = "RD"  # "R" or "RD"
    dr_before_grounding: bool | None = None  # defaults to True in RD mode
    probe_budget: int = 1000
    ground_atom_limit: int = 30
    float_mode: bool = False
    timeout: float | None = None
    node_limit: int | None = None
    use_cache: bool = True

    def __post_init__(self):
        if self.mode not in ("R", "RD"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.dr_before_grounding is None:
            self.dr_before_grounding = self.mode == "RD"
        if self.probe_budget <= 0 or self.ground_atom_limit < 0:
            raise ValueError("budgets must be positive")


@dataclass
class Stats:
    nodes: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    groundings: int = 0
    domain_recursions: int = 0
    probes: int = 0
    probes_accepted: int = 0
    rule_counts: Counter = field(default_factory=Counter)

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "rule_counts"}
        d["rules"] = dict(self.rule_counts)
        return d


class Cache:
    """CanonicalKey -> value.  Plain dict operations are atomic under the GIL,
    and any two writers for one key write the same value."""

    def __init__(self):
        self._data: dict = {}
        self.hits = 0
        self.misses = 0

    def get(self, key):
        v = self._data.get(key)
        if v is None:
            self.misses += 1
        else:
            self.hits += 1
        return v

    def __contains__(self, key):
        return key in self._data

    def put(self, key, value):
        self._data[key] = value

    def clear(self):
        self._data.clear()

    def __len__(self):
        return len(self._data)

    @property
    def entries(self) -> int:
        return len(self._data)


# --------------------------------------------------------------------------
# simplification


def _sig(c: Clause) -> tuple:
    """Variable-name-free signature; equal for clauses equal up to renaming."""
    return tuple(
        sorted(
            (l.predicate.name, l.predicate.arity, l.positive, tuple((0, a.segment.id) if type(a) is Var else (1, a.name) for a in l.args))
            for l in c.literals
        )
    )


def _lit_sig(l: Literal, positive: bool) -> tuple:
    return (l.predicate.name, l.predicate.arity, positive, tuple((0, a.segment.id) if type(a) is Var else (1, a.name) for a in l.args))


def subsumes(c2: Clause, c1: Clause, cap: int = SUBSUMPTION_MAPPING_CAP) -> bool:
    """Sound check that c2 implies c1: an injective, segment-preserving map
    of c2's variables sends every literal of c2 into c1."""
    if len(c2) > len(c1):
        return False
    by_key: dict = defaultdict(list)
    for l in c1.literals:
        by_key[(l.predicate, l.positive)].append(l)
    lits = []
    for l in c2.literals:
        cands = by_key.get((l.predicate, l.positive))
        if not cands:
            return False
        lits.append((len(cands), l, cands))
    lits.sort(key=lambda x: x[0])
    tries = [0]

    def match(i: int, mapping: dict, used: set) -> bool:
        if i == len(lits):
            return True
        _, l2, cands = lits[i]
        for l1 in cands:
            tries[0] += 1
            if tries[0] > cap:
                return False
            added = []
            ok = True
            for a2, a1 in zip(l2.args, l1.args):
                if type(a2) is Var:
                    if type(a1) is not Var or a1.segment != a2.segment:
                        ok = False
                        break
                    m = mapping.get(a2)
                    if m is None:
                        if a1 in used:
                            ok = False
                            break
                        mapping[a2] = a1
                        used.add(a1)
                        added.append(a2)
                    elif m != a1:
                        ok = False
                        break
                elif a1 != a2:
                    ok = False
                    break
            if ok and match(i + 1, mapping, used):
                return True
            for a2 in added:
                used.discard(mapping.pop(a2))
        return False

    return match(0, {}, set())


class Contradiction(Exception):
    pass


def _unit_propagate(clauses: set, fixed: dict) -> bool:
    """One round of unit propagation in place.  ``fixed`` maps cell -> sign.
    Returns True if anything changed; raises Contradiction."""
    units: dict = {}
    for c in clauses:
        if len(c.literals) == 1:
            (l,) = c.literals
            s = units.get(l.cell)
            if s is not None and s != l.positive:
                raise Contradiction
            units[l.cell] = l.positive
        elif not c.literals:
            raise Contradiction
    if not units:
        return False
    for cell, s in units.items():
        if cell in fixed and fixed[cell] != s:
            raise Contradiction
        fixed[cell] = s
    new = set()
    for c in clauses:
        keep = []
        sat = False
        touched = False
        for l in c.literals:
            s = units.get(l.cell)
            if s is None:
                keep.append(l)
            elif s == l.positive:
                sat = True
                break
            else:
                touched = True
        if sat:
            continue
        if not touched:
            new.add(c)
            continue
        if not keep:
            raise Contradiction
        new.add(Clause(keep))
    clauses.clear()
    clauses.update(new)
    return True


def _dedupe_and_merge(clauses: set) -> bool:
    """Drop clauses equal up to variable renaming, and replace pairs
    (R | M), (R | !M) by R.  Returns True if anything changed."""
    by_sig: dict = defaultdict(list)
    for c in clauses:
        by_sig[_sig(c)].append(c)
    changed = False
    keys: dict = {}

    def key(c):
        k = keys.get(c)
        if k is None:
            k = keys[c] = clause_key(c)
        return k

    for sig, group in list(by_sig.items()):
        if len(group) > 1:
            seen = {}
            for c in group:
                k = key(c)
                if k in seen:
                    clauses.discard(c)
                    changed = True
                else:
                    seen[k] = c
            by_sig[sig] = list(seen.values())
    if changed:
        return True
    for c in list(clauses):
        if len(c.literals) < 2 or c not in clauses:
            continue
        base = _sig(c)
        for m in c.literals:
            ms = _lit_sig(m, m.positive)
            fs = _lit_sig(m, not m.positive)
            lst = list(base)
            lst.remove(ms)
            lst.append(fs)
            others = by_sig.get(tuple(sorted(lst)))
            if not others:
                continue
            flipped = Clause([l for l in c.literals if l is not m] + [m.negate()])
            fk = clause_key(flipped)
            for o in others:
                if o is not c and o in clauses and key(o) == fk:
                    rest = Clause(l for l in c.literals if l is not m)
                    clauses.discard(c)
                    clauses.discard(o)
                    clauses.add(rest)
                    return True
    return False


def _subsumption(clauses: set) -> bool:
    if len(clauses) > SUBSUMPTION_CLAUSE_CAP or len(clauses) < 2:
        return False
    cl = sorted(clauses, key=len)
    keysets = {c: {(l.predicate, l.positive) for l in c.literals} for c in cl}
    removed = set()
    for i, c2 in enumerate(cl):
        if c2 in removed:
            continue
        k2 = keysets[c2]
        for c1 in cl[i + 1 :]:
            if c1 in removed or len(c1) < len(c2) or not k2 <= keysets[c1]:
                continue
            if subsumes(c2, c1):
                removed.add(c1)
    if removed:
        clauses.difference_update(removed)
        return True
    return False


def simplify_structure(t: Theory) -> tuple[Theory | None, dict]:
    """Simplify without weights.  Returns (theory or None on contradiction,
    fixed cells)."""
    clauses = set()
    for c in t.clauses:
        if c.is_vacuous() or c.is_tautology():
            continue
        clauses.add(c)
    fixed: dict = {}
    try:
        while True:
            if _unit_propagate(clauses, fixed):
                continue
            if _dedupe_and_merge(clauses):
                continue
            if _subsumption(clauses):
                continue
            break
    except Contradiction:
        return None, fixed
    return Theory(clauses), fixed


def simplify(t: Theory, weights: Mapping) -> tuple[Theory | None, Fraction]:
    """Simplified theory and the multiplier (unit weights times smoothing)."""
    out, fixed = simplify_structure(t)
    if out is None:
        return None, Fraction(0)
    mult = Fraction(1)
    fixed_atoms: dict = defaultdict(int)
    for cell, s in fixed.items():
        n = cell_size(cell)
        p = cell[0]
        fixed_atoms[p] += n
        w = weights[p][0 if s else 1]
        if n:
            mult *= w**n
    before = t.atom_counts()
    after = out.atom_counts()
    for p, n in before.items():
        m = n - after.get(p, 0) - fixed_atoms.get(p, 0)
        if m < 0:
            raise AssertionError(f"negative smoothing exponent for {p}")
        if m:
            w = weights[p]
            mult *= (w[0] + w[1]) ** m
    return out, mult


# --------------------------------------------------------------------------
# rule applicability (shared by the counter, the probe and the RU checker)


def find_lifted_decomposition(t: Theory) -> Segment | None:
    """A segment with exactly one variable in every clause, present in every
    literal, at the same argument positions within each cell.  Atoms of
    different cells never coincide, so groundings for different values of
    the variable share no atom."""
    cands = None
    for c in t.clauses:
        cnt = c.var_segments()
        ok = {s for s, k in cnt.items() if k == 1}
        cands = ok if cands is None else cands & ok
        if not cands:
            return None
    if not cands:
        return None
    for seg in sorted(cands, key=lambda s: s.id):
        positions: dict = {}
        good = True
        for c in t.clauses:
            for l in c.literals:
                pos = tuple(i for i, a in enumerate(l.args) if type(a) is Var and a.segment == seg)
                if not pos:
                    good = False
                    break
                prev = positions.setdefault(l.cell, pos)
                if prev != pos:
                    good = False
                    break
            if not good:
                break
        if good:
            return seg
    return None


def apply_lifted_decomposition(t: Theory, seg: Segment) -> Theory:
    k = Constant.fresh(seg.root, "K")
    out = []
    for c in t.clauses:
        (v,) = [v for v in c.variables if v.segment == seg]
        out.append(c.rename({v: k}))
    return Theory(out)


def find_pair_decomposition(t: Theory) -> Segment | None:
    """A segment such that every clause has exactly two variables, both from
    it, each occurring in every literal of the clause."""
    seg = None
    for c in t.clauses:
        vs = c.variables
        if len(vs) != 2:
            return None
        a, b = vs
        if a.segment != b.segment:
            return None
        if seg is None:
            seg = a.segment
        elif seg != a.segment:
            return None
        for l in c.literals:
            if a not in l.args or b not in l.args:
                return None
    return seg


def apply_pair_decomposition(t: Theory, seg: Segment) -> Theory:
    k1 = Constant.fresh(seg.root, "K")
    k2 = Constant.fresh(seg.root, "K")
    out = []
    for c in t.clauses:
        a, b = sorted(c.variables, key=lambda v: v.name)
        out.append(c.rename({a: k1, b: k2}))
        out.append(c.rename({a: k2, b: k1}))
    return Theory(out)


def _cell_sort_key(cell) -> tuple:
    p, desc = cell
    return (p.name, p.arity, tuple(("c", d.name) if type(d) is not tuple else ("s", str(d[0].id), d[1]) for d in desc))


def ground_cells(t: Theory) -> list:
    return sorted((c for c in t.cells() if not cell_vars(c)), key=_cell_sort_key)


def unary_cells(t: Theory) -> list:
    """Cells with exactly one variable; cells mentioning a constant first."""
    out = [c for c in t.cells() if len(cell_vars(c)) == 1]
    return sorted(out, key=lambda c: (not any(type(d) is not tuple for d in c[1]),) + _cell_sort_key(c))


def _literal_for_cell(t: Theory, cell) -> Literal:
    for c in t.clauses:
        for l in c.literals:
            if l.cell == cell:
                return l
    raise KeyError(cell)


def lifted_case_branches(t: Theory, cell, seg_sizes: Sequence[int | None] | None = None):
    """Yield (j, binomial, branch theory) for lifted case analysis on a
    one-variable cell.  Branches that a clause made only of literals on this
    cell already rules out are skipped."""
    lit = _literal_for_cell(t, cell)
    (v,) = lit.variables()
    seg = v.segment
    n = seg.size
    pure = []
    for c in t.clauses:
        if all(l.cell == cell for l in c.literals):
            neg = sum(1 for l in c.literals if not l.positive)
            pure.append((neg, len(c.literals) - neg))
    js = range(n + 1) if seg_sizes is None else seg_sizes
    for j in js:
        if j is not None and any(j >= m and n - j >= q for m, q in pure):
            continue
        if j is None:
            st, sf = Segment.fresh(seg.root, None), Segment.fresh(seg.root, None)
        else:
            st, sf = split_segment(seg, j)
        body = shatter_theory(t, seg, [st, sf])
        ut = Clause([Literal(True, lit.predicate, [Var(v.name, st) if a == v else a for a in lit.args])])
        uf = Clause([Literal(False, lit.predicate, [Var(v.name, sf) if a == v else a for a in lit.args])])
        yield j, (1 if j is None else comb(n, j)), Theory(body.clauses | {ut, uf})


def find_reused_variable_rewrite(t: Theory):
    """A clause whose literals split into groups sharing only the variables
    common to all literals, with private variables of different groups in
    different segments.  Returns (clause, X, group1, rest) or None."""
    for c in sorted(t.clauses, key=repr):
        if len(c.literals) < 2:
            continue
        lits = list(c.literals)
        X = set(lits[0].variables())
        for l in lits[1:]:
            X &= set(l.variables())
        private = [set(l.variables()) - X for l in lits]
        if not any(private):
            continue
        # union-find over literals connected by private variables
        parent = list(range(len(lits)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        owner: dict = {}
        for i, ps in enumerate(private):
            for v in ps:
                j = owner.setdefault(v, i)
                if j != i:
                    parent[find(i)] = find(j)
        groups: dict = defaultdict(list)
        for i in range(len(lits)):
            if private[i]:
                groups[find(i)].append(i)
        if len(groups) < 2:
            continue
        glist = sorted(groups.values(), key=lambda g: min(repr(lits[i]) for i in g))
        segs = [{v.segment for i in g for v in private[i]} for g in glist]
        g1_segs = segs[0]
        if any(g1_segs & s for s in segs[1:]):
            continue
        g1 = [lits[i] for i in glist[0]]
        bare = [lits[i] for i in range(len(lits)) if not private[i]]
        g1 = g1 + bare
        rest = [l for l in lits if l not in g1]
        return c, sorted(X, key=lambda v: v.name), g1, rest
    return None


_aux_ids = itertools.count(1)


def apply_reused_variable_rewrite(t: Theory, found, weights: dict) -> Theory:
    """(G1 | G2) with G1, G2 sharing only X becomes
    G1 | !A(X),  G2 | A(X),  A(X) | B(X),  G2 | B(X)
    with weights A: (1, 1) and B: (1, -1)."""
    c, X, g1, rest = found
    n = next(_aux_ids)
    doms = tuple(v.segment.root for v in X)
    A = Predicate(f"_A{n}", doms, aux=True)
    B = Predicate(f"_B{n}", doms, aux=True)
    weights[A] = (Fraction(1), Fraction(1))
    weights[B] = (Fraction(1), Fraction(-1))
    ax = tuple(X)
    new = [
        Clause(g1 + [Literal(False, A, ax)]),
        Clause(rest + [Literal(True, A, ax)]),
        Clause([Literal(True, A, ax), Literal(True, B, ax)]),
        Clause(rest + [Literal(True, B, ax)]),
    ]
    return Theory((t.clauses - {c}) | set(new))


def ground_segment(t: Theory, seg: Segment) -> Theory:
    """Replace a segment by explicit, non-renameable constants."""
    consts = [Constant.fresh(seg.root, "G", generic=False) for _ in range(seg.size)]
    return shatter_theory(t, seg, consts)


# --------------------------------------------------------------------------
# the driver


class Engine:
    def __init__(
        self,
        weights: Mapping[Predicate, tuple[Fraction, Fraction]],
        config: EngineConfig | None = None,
        cache: Cache | None = None,
        root_order: Sequence[str] = (),
    ):
        self.config = config or EngineConfig()
        num = float if self.config.float_mode else Fraction
        self.weights: Weights = {p: (num(a), num(b)) for p, (a, b) in weights.items()}
        self.cache = cache if cache is not None else Cache()
        self.stats = Stats()
        self.root_order = {r: i for i, r in enumerate(root_order)}
        self._deadline = None
        self._dr_memo: dict = {}

    # -- bookkeeping -------------------------------------------------------

    def _tick(self):
        self.stats.nodes += 1
        if self.config.node_limit is not None and self.stats.nodes > self.config.node_limit:
            raise BudgetExceeded("node limit exceeded", self.stats)
        if self._deadline is not None and (self.stats.nodes & 63) == 0 and time.monotonic() > self._deadline:
            raise BudgetExceeded("timeout", self.stats)

    def segment_order(self, t: Theory) -> list[Segment]:
        return sorted(t.segments(), key=lambda s: (self.root_order.get(s.root, len(self.root_order)), s.root, s.id))

    def key(self, t: Theory) -> tuple:
        return canonical_key(t, self.weights)

    # -- entry points ------------------------------------------------------

    def run(self, t: Theory) -> Fraction:
        """Count with the configured timeout."""
        if self.config.timeout is not None:
            self._deadline = time.monotonic() + self.config.timeout
        try:
            return self.count(t)
        finally:
            self._deadline = None

    def count(self, t: Theory) -> Fraction:
        self._tick()
        t2, mult = simplify(t, self.weights)
        if t2 is None or mult == 0:
            return Fraction(0)
        if not t2.clauses:
            return mult
        if not self.config.use_cache:
            return mult * self._solve(t2)
        k = self.key(t2)
        v = self.cache.get(k)
        if v is not None:
            self.stats.cache_hits += 1
            return mult * v
        self.stats.cache_misses += 1
        v = self._solve(t2)
        self.cache.put(k, v)
        return mult * v

    # -- rules -------------------------------------------------------------

    def _solve(self, t: Theory) -> Fraction:
        rc = self.stats.rule_counts
        comps = connected_components(t)
        if len(comps) > 1:
            rc["decompose"] += 1
            out = Fraction(1)
            for c in sorted(comps, key=len):
                out *= self.count(c)
                if out == 0:
                    break
            return out

        seg = find_lifted_decomposition(t)
        if seg is not None:
            rc["lifted_decompose"] += 1
            return self.count(apply_lifted_decomposition(t, seg)) ** seg.size

        seg = find_pair_decomposition(t)
        if seg is not None:
            rc["pair_decompose"] += 1
            return self.count(apply_pair_decomposition(t, seg)) ** comb(seg.size, 2)

        gc = ground_cells(t)
        if gc:
            rc["case_analysis"] += 1
            lit = _literal_for_cell(t, gc[0])
            pos = Literal(True, lit.predicate, lit.args)
            return self.count(Theory(t.clauses | {Clause([pos])})) + self.count(
                Theory(t.clauses | {Clause([pos.negate()])})
            )

        uc = unary_cells(t)
        if uc:
            rc["lifted_case_analysis"] += 1
            total = Fraction(0)
            for _, coef, branch in lifted_case_branches(t, uc[0]):
                total += coef * self.count(branch)
            return total

        found = find_reused_variable_rewrite(t)
        if found is not None:
            rc["reused_variable_rewrite"] += 1
            return self.count(apply_reused_variable_rewrite(t, found, self.weights))

        if self.config.mode == "RD":
            from .recursion import choose_recursion_segment, rule_domain_recursion

            seg = choose_recursion_segment(self, t)
            if seg is not None:
                rc["domain_recursion"] += 1
                self.stats.domain_recursions += 1
                return self.count(rule_domain_recursion(t, seg))

        return self._ground(t)

    def _ground(self, t: Theory) -> Fraction:
        atoms = t.total_atoms()
        order = [s for s in self.segment_order(t) if s.size and s.size > 0]
        if atoms > self.config.ground_atom_limit:
            if self.config.mode == "RD" and self.config.dr_before_grounding and order:
                from .recursion import rule_domain_recursion

                self.stats.rule_counts["domain_recursion_unprobed"] += 1
                self.stats.domain_recursions += 1
                return self.count(rule_domain_recursion(t, order[0]))
            raise GroundingTooLarge(
                f"grounding-too-large: {atoms} atoms exceed limit {self.config.ground_atom_limit}", self.stats
            )
        if not order:
            raise AssertionError("no rule applies to a theory without segments")
        self.stats.groundings += 1
        self.stats.rule_counts["ground"] += 1
        return self.count(ground_segment(t, order[0]))


def wfomc(
    t: Theory,
    weights: Mapping[Predicate, tuple[Fraction, Fraction]],
    config: EngineConfig | None = None,
    universe: Mapping[Predicate, int] | None = None,
    cache: Cache | None = None,
    root_order: Sequence[str] = (),
) -> Fraction:
    """Weighted model count of ``t``.  ``universe`` gives the total number of
    ground atoms per predicate; atoms not mentioned by ``t`` are free.
    Without it the mentioned atoms are the universe."""
    eng = Engine(weights, config, cache, root_order)
    v = eng.run(t)
    return v * free_atom_factor(t, eng.weights, universe)


def free_atom_factor(t: Theory, weights: Mapping, universe: Mapping[Predicate, int] | None) -> Fraction:
    if not universe:
        return Fraction(1)
    mentioned = t.atom_counts()
    out = Fraction(1)
    for p, total in universe.items():
        m = total - mentioned.get(p, 0)
        if m < 0:
            raise ValueError(f"universe of {p} smaller than its mentioned atoms")
        if m:
            w = weights[p]
            out *= (w[0] + w[1]) ** m
    return out
