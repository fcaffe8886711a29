"""Core first-order objects: domains, segments, literals, clauses and theories.

A root domain is partitioned into *segments* (exchangeable sub-populations)
and explicitly named constants.  Two variables typed with the same segment
always denote different individuals, and a variable never denotes one of the
constants of the theory, so the implicit-inequality convention is carried by
the segment structure alone.

Every literal ranges over exactly one *cell* of ground atoms: its predicate,
the segment or constant at each argument position, and the pattern of
repeated variables.  Two cells of one theory are either equal or disjoint,
which is what makes unit propagation and smoothing exact.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass
from math import prod
from typing import Iterable, Iterator, Mapping, Sequence, Union

_segment_ids = itertools.count(1)
_constant_ids = itertools.count(1)


class SymbolicSizeError(ValueError):
    """A concrete size was required but the segment is symbolic."""

    def __init__(self, msg: str = "symbolic-size"):
        super().__init__(msg)


def falling(n: int, k: int) -> int:
    """n * (n-1) * ... * (n-k+1); zero when k > n."""
    if k > n:
        return 0
    return prod(range(n - k + 1, n + 1))


@dataclass(frozen=True)
class RootDomain:
    name: str
    size: int

    def __post_init__(self):
        if self.size < 0:
            raise ValueError(f"domain {self.name} has negative size")


class Segment:
    """A sub-population of a root domain.  ``size`` is None when symbolic."""

    __slots__ = ("id", "root", "size", "_hash")

    def __init__(self, id: int, root: str, size: int | None):
        self.id = id
        self.root = root
        self.size = size
        self._hash = hash(("seg", id))

    @classmethod
    def fresh(cls, root: str, size: int | None) -> "Segment":
        return cls(next(_segment_ids), root, size)

    def __eq__(self, other):
        return self is other or (isinstance(other, Segment) and self.id == other.id)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        s = "?" if self.size is None else self.size
        return f"{self.root}#{self.id}[{s}]"


class Constant:
    """A named individual.  ``generic`` constants were introduced by a lifted
    rule (an arbitrary representative) and may be renamed when caching;
    the others keep their identity."""

    __slots__ = ("name", "root", "generic", "_hash")

    def __init__(self, name: str, root: str, generic: bool = False):
        self.name = name
        self.root = root
        self.generic = generic
        self._hash = hash(("const", name, root))

    @classmethod
    def fresh(cls, root: str, stem: str = "N", generic: bool = True) -> "Constant":
        return cls(f"{stem}{next(_constant_ids)}", root, generic)

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Constant) and self.name == other.name and self.root == other.root
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return self.name


class Predicate:
    """A predicate symbol.  Identity is (name, arity); ``aux`` marks
    symbols introduced by a rewrite, which are renamed freely in cache keys."""

    __slots__ = ("name", "domains", "aux", "_hash")

    def __init__(self, name: str, domains: Sequence[str], aux: bool = False):
        self.name = name
        self.domains = tuple(domains)
        self.aux = aux
        self._hash = hash(("pred", name, len(self.domains)))

    @property
    def arity(self) -> int:
        return len(self.domains)

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Predicate) and self.name == other.name and self.domains == other.domains
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return self.name


class Var:
    __slots__ = ("name", "segment", "_hash")

    def __init__(self, name: str, segment: Segment):
        self.name = name
        self.segment = segment
        self._hash = hash((name, segment._hash))

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Var) and self.name == other.name and self.segment == other.segment
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return self.name


Term = Union[Var, Constant]


class Literal:
    __slots__ = ("positive", "predicate", "args", "_hash", "_cell")

    def __init__(self, positive: bool, predicate: Predicate, args: Sequence[Term]):
        args = tuple(args)
        if len(args) != predicate.arity:
            raise ValueError(f"arity mismatch for {predicate.name}")
        self.positive = positive
        self.predicate = predicate
        self.args = args
        self._hash = hash((positive, predicate, args))
        self._cell = None

    def negate(self) -> "Literal":
        return Literal(not self.positive, self.predicate, self.args)

    def variables(self) -> list[Var]:
        seen: list[Var] = []
        for a in self.args:
            if isinstance(a, Var) and a not in seen:
                seen.append(a)
        return seen

    @property
    def cell(self) -> tuple:
        """Cell key: the predicate plus, per position, the constant or
        (segment, k) where k numbers the literal's distinct variables of
        that segment in order of first occurrence."""
        if self._cell is None:
            seen: dict[Var, int] = {}
            per_seg: dict[Segment, int] = {}
            desc = []
            for a in self.args:
                if isinstance(a, Constant):
                    desc.append(a)
                else:
                    k = seen.get(a)
                    if k is None:
                        k = per_seg.get(a.segment, 0)
                        per_seg[a.segment] = k + 1
                        seen[a] = k
                    desc.append((a.segment, k))
            self._cell = (self.predicate, tuple(desc))
        return self._cell

    def substitute(self, mapping: Mapping[Var, Term]) -> "Literal":
        return Literal(self.positive, self.predicate, [mapping.get(a, a) if isinstance(a, Var) else a for a in self.args])

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Literal)
            and self._hash == other._hash
            and self.positive == other.positive
            and self.predicate == other.predicate
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        body = f"{self.predicate.name}({','.join(map(repr, self.args))})"
        return body if self.positive else "!" + body


def literal_cell(lit: Literal) -> tuple:
    return lit.cell


def cell_size(cell: tuple) -> int:
    counts: dict[Segment, int] = {}
    for d in cell[1]:
        if type(d) is tuple:
            seg, k = d
            if k + 1 > counts.get(seg, 0):
                counts[seg] = k + 1
    total = 1
    for seg, k in counts.items():
        if seg.size is None:
            raise SymbolicSizeError()
        total *= falling(seg.size, k)
    return total


def cell_segments(cell: tuple) -> set[Segment]:
    return {d[0] for d in cell[1] if type(d) is tuple}


def cell_vars(cell: tuple) -> set[tuple]:
    return {d for d in cell[1] if type(d) is tuple}


def cell_constants(cell: tuple) -> list[Constant]:
    return [d for d in cell[1] if type(d) is not tuple]


class Clause:
    """An immutable set of literals, universally quantified over its
    variables (implicitly pairwise distinct within a segment)."""

    __slots__ = ("literals", "_hash", "_vars")

    def __init__(self, literals: Iterable[Literal]):
        self.literals = frozenset(literals)
        self._hash = hash(self.literals)
        self._vars = None

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Clause) and self._hash == other._hash and self.literals == other.literals
        )

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    @property
    def variables(self) -> frozenset[Var]:
        if self._vars is None:
            self._vars = frozenset(a for lit in self.literals for a in lit.args if isinstance(a, Var))
        return self._vars

    def var_segments(self) -> Counter:
        return Counter(v.segment for v in self.variables)

    def segments(self) -> set[Segment]:
        return {v.segment for v in self.variables}

    def constants(self) -> set[Constant]:
        return {a for lit in self.literals for a in lit.args if isinstance(a, Constant)}

    def is_vacuous(self) -> bool:
        """True when no injective assignment of the variables exists."""
        for seg, k in self.var_segments().items():
            if seg.size is not None and k > seg.size:
                return True
        return False

    def is_tautology(self) -> bool:
        lits = self.literals
        return any(lit.negate() in lits for lit in lits if lit.positive)

    def rename(self, mapping: Mapping[Var, Term]) -> "Clause":
        return Clause(l.substitute(mapping) for l in self.literals)

    def __repr__(self):
        lits = sorted(map(repr, self.literals))
        return " | ".join(lits) if lits else "<empty>"


class Theory:
    """A set of clauses; derived data (cells, atom counts) is cached."""

    __slots__ = ("clauses", "_hash", "_cells", "_atoms")

    def __init__(self, clauses: Iterable[Clause] = ()):
        self.clauses = frozenset(clauses)
        self._hash = hash(self.clauses)
        self._cells = None
        self._atoms = None

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Theory) and self._hash == other._hash and self.clauses == other.clauses
        )

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.clauses)

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __bool__(self):
        return bool(self.clauses)

    def __repr__(self):
        return "{" + "; ".join(sorted(map(repr, self.clauses))) + "}"

    def segments(self) -> set[Segment]:
        return {s for c in self.clauses for s in c.segments()}

    def constants(self) -> set[Constant]:
        return {k for c in self.clauses for k in c.constants()}

    def predicates(self) -> set[Predicate]:
        return {l.predicate for c in self.clauses for l in c.literals}

    def cells(self) -> frozenset:
        if self._cells is None:
            self._cells = frozenset(l.cell for c in self.clauses for l in c.literals)
        return self._cells

    def atom_counts(self) -> dict[Predicate, int]:
        """Number of ground atoms per predicate mentioned by the clauses."""
        if self._atoms is None:
            out: dict[Predicate, int] = defaultdict(int)
            for cell in self.cells():
                out[cell[0]] += cell_size(cell)
            self._atoms = dict(out)
        return self._atoms

    def total_atoms(self) -> int:
        return sum(self.atom_counts().values())

    def total_size(self) -> int:
        return sum(s.size for s in self.segments()) + len(self.constants())


# --------------------------------------------------------------------------
# operations


def atom_universe(t: Theory) -> dict[tuple, int]:
    """Raw ground-atom counts per (predicate, argument segments/constants),
    computed as plain products of segment sizes."""
    out: dict[tuple, int] = {}
    for c in t.clauses:
        for lit in c.literals:
            parts = []
            n = 1
            for a in lit.args:
                if isinstance(a, Var):
                    if a.segment.size is None:
                        raise SymbolicSizeError()
                    parts.append(a.segment)
                    n *= a.segment.size
                else:
                    parts.append(a)
            out[(lit.predicate, tuple(parts))] = n
    return out


def connected_components(t: Theory) -> list[Theory]:
    """Group clauses that (transitively) share a cell of ground atoms."""
    clauses = list(t.clauses)
    if len(clauses) <= 1:
        return [t] if clauses else []
    parent = list(range(len(clauses)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[tuple, int] = {}
    for i, c in enumerate(clauses):
        for lit in c.literals:
            j = owner.setdefault(lit.cell, i)
            if j != i:
                a, b = find(i), find(j)
                if a != b:
                    parent[a] = b
    groups: dict[int, list[Clause]] = defaultdict(list)
    for i, c in enumerate(clauses):
        groups[find(i)].append(c)
    if len(groups) == 1:
        return [t]
    return [Theory(g) for g in groups.values()]


def split_segment(s: Segment, k: int) -> tuple[Segment, Segment]:
    """Fresh parts of sizes k and size-k of a concrete segment."""
    if s.size is None:
        raise SymbolicSizeError()
    if not 0 <= k <= s.size:
        raise ValueError(f"split size {k} out of range for segment of size {s.size}")
    return Segment.fresh(s.root, k), Segment.fresh(s.root, s.size - k)


def split_off_constant(s: Segment, stem: str = "N") -> tuple[Constant, Segment]:
    """Make one individual of ``s`` explicit; returns it and the remainder."""
    if s.size is not None and s.size < 1:
        raise ValueError("empty segment")
    rest = Segment.fresh(s.root, None if s.size is None else s.size - 1)
    return Constant.fresh(s.root, stem), rest


def substitute_constant(c: Clause, v: Var, k: Constant, rest: Segment | None = None) -> list[Clause]:
    """Replace ``v`` by ``k``.  The other variables of v's segment are retyped
    to ``rest``, the segment with k taken out."""
    if v not in c.variables:
        return [c]
    if v.segment.root != k.root:
        raise ValueError(f"root mismatch: {v.segment.root} vs {k.root}")
    mapping: dict[Var, Term] = {v: k}
    if rest is not None:
        for u in c.variables:
            if u != v and u.segment == v.segment:
                mapping[u] = Var(u.name, rest)
    return [c.rename(mapping)]


def shatter_clause(c: Clause, seg: Segment, parts: Sequence[Segment | Constant]) -> list[Clause]:
    """Copies of ``c`` covering every way its ``seg``-variables fall into the
    given disjoint parts.  A constant part receives at most one variable."""
    vs = sorted((v for v in c.variables if v.segment == seg), key=lambda v: v.name)
    if not vs:
        return [c]
    out = []
    for choice in itertools.product(parts, repeat=len(vs)):
        consts = [p for p in choice if isinstance(p, Constant)]
        if len(consts) != len(set(consts)):
            continue
        mapping = {v: (p if isinstance(p, Constant) else Var(v.name, p)) for v, p in zip(vs, choice)}
        out.append(c.rename(mapping))
    return out


def shatter_theory(t: Theory, seg: Segment, parts: Sequence[Segment | Constant]) -> Theory:
    return Theory(cc for c in t.clauses for cc in shatter_clause(c, seg, parts))
