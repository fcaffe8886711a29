"""Domain recursion: make one individual of a segment explicit.

A clause with k variables of the segment becomes 2**k copies in which each
of those variables is either the new constant or ranges over the rest of
the segment; copies that would use the constant twice are dropped because
distinct variables denote distinct individuals.

Whether the rule pays off is decided by a structural probe: the rewritten
theory is expanded with the ordinary rules (no values are computed) and
every leaf where those rules run out must be closed, i.e. already cached,
already known to recurse, or of the same shape as the probed theory at a
strictly smaller total size.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .canonical import canonical_form, canonical_key, shape_key
from .logic import Segment, Theory, connected_components, shatter_theory, split_off_constant

if TYPE_CHECKING:
    from .engine import Engine


class RecursionGuard:
    """Shape -> smallest total size seen on one recursion chain."""

    def __init__(self):
        self.ancestry: dict = {}

    def record(self, shape, size: int) -> None:
        prev = self.ancestry.get(shape)
        if prev is None or size < prev:
            self.ancestry[shape] = size

    def closes(self, shape, size: int) -> bool:
        prev = self.ancestry.get(shape)
        return prev is not None and size < prev


def rule_domain_recursion(t: Theory, seg: Segment) -> Theory:
    if seg.size is not None and seg.size < 1:
        raise ValueError("domain recursion on an empty segment")
    n, rest = split_off_constant(seg)
    return shatter_theory(t, seg, [n, rest])


def expand_structural(t: Theory, weights: dict) -> list[Theory] | None:
    """Children of ``t`` under the first applicable rule other than domain
    recursion and grounding, or None when none applies."""
    from . import engine as E

    seg = E.find_lifted_decomposition(t)
    if seg is not None:
        return [E.apply_lifted_decomposition(t, seg)]
    seg = E.find_pair_decomposition(t)
    if seg is not None:
        return [E.apply_pair_decomposition(t, seg)]
    gc = E.ground_cells(t)
    if gc:
        lit = E._literal_for_cell(t, gc[0])
        pos = E.Literal(True, lit.predicate, lit.args)
        return [Theory(t.clauses | {E.Clause([pos])}), Theory(t.clauses | {E.Clause([pos.negate()])})]
    uc = E.unary_cells(t)
    if uc:
        return [b for _, _, b in E.lifted_case_branches(t, uc[0])]
    found = E.find_reused_variable_rewrite(t)
    if found is not None:
        return [E.apply_reused_variable_rewrite(t, found, weights)]
    return None


def probe_candidate(engine: "Engine", t: Theory, seg: Segment, budget: int | None = None) -> bool:
    """Speculatively apply domain recursion on ``seg`` and explore at most
    ``budget`` nodes.  Accept iff every leaf is closed."""
    from .engine import simplify_structure

    budget = engine.config.probe_budget if budget is None else budget
    weights = dict(engine.weights)
    guard = RecursionGuard()
    guard.record(shape_key(t, weights), t.total_size())
    seen: set = set()
    stack = [rule_domain_recursion(t, seg)]
    nodes = 0
    while stack:
        node = stack.pop()
        nodes += 1
        if nodes > budget:
            return False
        s, _ = simplify_structure(node)
        if s is None or not s.clauses:
            continue
        comps = connected_components(s)
        if len(comps) > 1:
            stack.extend(comps)
            continue
        if canonical_key(s, weights) in engine.cache:
            continue
        form, idx = canonical_form(s, weights, sizes=False)
        if guard.closes(form, s.total_size()) or form in seen:
            continue
        seen.add(form)
        children = expand_structural(s, weights)
        if children is None:
            if any(engine._dr_memo.get((form, i)) for i in idx.values()):
                continue
            return False
        stack.extend(children)
    return True


def choose_recursion_segment(engine: "Engine", t: Theory) -> Segment | None:
    """First segment, in declaration order, whose probe accepts.  Decisions
    are memoized per (shape, segment role)."""
    order = [s for s in engine.segment_order(t) if s.size]
    if not order:
        return None
    form, idx = canonical_form(t, engine.weights, sizes=False)
    for seg in order:
        label = (form, idx[seg])
        dec = engine._dr_memo.get(label)
        if dec is None:
            engine.stats.probes += 1
            dec = probe_candidate(engine, t, seg)
            engine._dr_memo[label] = dec
            if dec:
                engine.stats.probes_accepted += 1
        if dec:
            return seg
    return None
