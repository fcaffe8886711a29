"""Reader and writer for the line-oriented theory format.

    // comment
    domain people 3
    predicate Smokes(people) 0.2 0.5
    predicate Friends(people,people)
    !Smokes(x) | Cancer(x)
    exists d: Born(p,d)
    mln 3/2 Smokes(x) & Friends(x,y) => Smokes(y)

Variables start with a lower-case letter, constants with an upper-case one.
Weights are exact: decimals and p/q fractions both become ``Fraction``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WEIGHT = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+)?")


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass(frozen=True)
class PredDecl:
    name: str
    domains: tuple[str, ...]
    weights: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))

    @property
    def arity(self) -> int:
        return len(self.domains)


@dataclass(frozen=True)
class SLiteral:
    positive: bool
    pred: str
    args: tuple[str, ...]

    def __str__(self):
        return ("" if self.positive else "!") + f"{self.pred}({','.join(self.args)})"


@dataclass(frozen=True)
class SClause:
    literals: tuple[SLiteral, ...]
    exists: str | None = None


# formula trees: ("lit", SLiteral) | ("not", f) | ("and", f, g) | ("or", f, g)
# | ("imp", f, g) | ("iff", f, g)
Formula = tuple


@dataclass(frozen=True)
class MlnFormula:
    weight: Fraction
    formula: Formula


@dataclass
class SourceTheory:
    domains: dict[str, int] = field(default_factory=dict)
    predicates: dict[tuple[str, int], PredDecl] = field(default_factory=dict)
    clauses: list[SClause] = field(default_factory=list)
    mln: list[MlnFormula] = field(default_factory=list)

    def pred(self, name: str, arity: int) -> PredDecl:
        return self.predicates[(name, arity)]

    def copy(self) -> "SourceTheory":
        return SourceTheory(dict(self.domains), dict(self.predicates), list(self.clauses), list(self.mln))


def is_variable(term: str) -> bool:
    return term[:1].islower()


def parse_weight(text: str) -> Fraction:
    if not _WEIGHT.fullmatch(text):
        raise ValueError(f"malformed weight {text!r}")
    return Fraction(text)


class _Cursor:
    def __init__(self, text: str, line: int):
        self.text = text
        self.pos = 0
        self.line = line

    def error(self, msg: str, pos: int | None = None) -> ParseError:
        return ParseError(msg, self.line, (self.pos if pos is None else pos) + 1)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip()
        return self.pos >= len(self.text)

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def eat(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str):
        if not self.eat(s):
            raise self.error(f"expected {s!r}")

    def name(self) -> str:
        self.skip()
        m = _NAME.match(self.text, self.pos)
        if not m:
            raise self.error("expected a name")
        self.pos = m.end()
        return m.group()

    def token(self) -> tuple[str, int]:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and not self.text[self.pos].isspace():
            self.pos += 1
        return self.text[start : self.pos], start


class _ClauseScope:
    """Infers and checks variable domains within one sentence."""

    def __init__(self, src: SourceTheory, cur: _Cursor):
        self.src = src
        self.cur = cur
        self.var_dom: dict[str, str] = {}

    def literal(self) -> SLiteral:
        cur = self.cur
        positive = not cur.eat("!")
        cur.skip()
        start = cur.pos
        name = cur.name()
        cur.expect("(")
        args = []
        positions = []
        if not cur.peek(")"):
            while True:
                cur.skip()
                positions.append(cur.pos)
                args.append(cur.name())
                if not cur.eat(","):
                    break
        cur.expect(")")
        decl = self.src.predicates.get((name, len(args)))
        if decl is None:
            if any(k[0] == name for k in self.src.predicates):
                raise cur.error(f"arity mismatch for predicate {name}", start)
            raise cur.error(f"unknown predicate {name}", start)
        for a, dom, p in zip(args, decl.domains, positions):
            if is_variable(a):
                prev = self.var_dom.setdefault(a, dom)
                if prev != dom:
                    raise cur.error(f"variable {a} used with domains {prev} and {dom}", p)
        return SLiteral(positive, name, tuple(args))


def _parse_formula(scope: _ClauseScope) -> Formula:
    cur = scope.cur

    def iff():
        left = imp()
        while cur.eat("<=>"):
            left = ("iff", left, imp())
        return left

    def imp():
        left = disj()
        if cur.eat("=>"):
            return ("imp", left, imp())
        return left

    def disj():
        left = conj()
        while cur.peek("|"):
            cur.eat("|")
            left = ("or", left, conj())
        return left

    def conj():
        left = neg()
        while cur.eat("&"):
            left = ("and", left, neg())
        return left

    def neg():
        if cur.peek("!"):
            save = cur.pos
            cur.eat("!")
            cur.skip()
            if cur.peek("(") or cur.peek("!"):
                return ("not", neg())
            cur.pos = save
        if cur.eat("("):
            f = iff()
            cur.expect(")")
            return f
        return ("lit", scope.literal())

    f = iff()
    return f


def parse_theory(text: str) -> SourceTheory:
    src = SourceTheory()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0]
        if not line.strip():
            continue
        cur = _Cursor(line, lineno)
        cur.skip()
        first_pos = cur.pos
        m = _NAME.match(line, cur.pos)
        head = m.group() if m else ""
        after = line[m.end() :] if m else ""
        if head == "domain" and not after.lstrip().startswith("("):
            cur.pos = m.end()
            name = cur.name()
            tok, p = cur.token()
            if not tok.isdigit():
                raise cur.error("expected a natural number", p)
            if name in src.domains:
                raise cur.error(f"duplicate domain {name}", first_pos)
            src.domains[name] = int(tok)
        elif head == "predicate" and not after.lstrip().startswith("("):
            cur.pos = m.end()
            name = cur.name()
            cur.expect("(")
            doms = []
            if not cur.peek(")"):
                while True:
                    cur.skip()
                    p = cur.pos
                    d = cur.name()
                    if d not in src.domains:
                        raise cur.error(f"unknown domain {d}", p)
                    doms.append(d)
                    if not cur.eat(","):
                        break
            cur.expect(")")
            weights = []
            while not cur.at_end():
                tok, p = cur.token()
                try:
                    weights.append(parse_weight(tok))
                except ValueError:
                    raise cur.error(f"malformed weight {tok!r}", p) from None
            if len(weights) not in (0, 2):
                raise cur.error("expected two weights")
            key = (name, len(doms))
            if key in src.predicates:
                raise cur.error(f"duplicate predicate {name}/{len(doms)}", first_pos)
            w = (weights[0], weights[1]) if weights else (Fraction(1), Fraction(1))
            src.predicates[key] = PredDecl(name, tuple(doms), w)
        elif head == "mln" and not after.lstrip().startswith("("):
            cur.pos = m.end()
            tok, p = cur.token()
            try:
                w = parse_weight(tok)
            except ValueError:
                raise cur.error(f"malformed weight {tok!r}", p) from None
            scope = _ClauseScope(src, cur)
            f = _parse_formula(scope)
            if not cur.at_end():
                raise cur.error("unexpected trailing input")
            src.mln.append(MlnFormula(w, f))
        else:
            scope = _ClauseScope(src, cur)
            exists = None
            if head == "exists" and not after.lstrip().startswith("("):
                cur.pos = m.end()
                exists = cur.name()
                if not is_variable(exists):
                    raise cur.error("existential variable must be lower case")
                cur.expect(":")
            lits = [scope.literal()]
            while cur.eat("|"):
                lits.append(scope.literal())
            if not cur.at_end():
                raise cur.error("unexpected trailing input")
            if exists is not None and exists not in scope.var_dom:
                raise cur.error(f"existential variable {exists} does not occur in the clause")
            src.clauses.append(SClause(tuple(lits), exists))
    return src


def format_weight(w: Fraction) -> str:
    return str(w.numerator) if w.denominator == 1 else f"{w.numerator}/{w.denominator}"


def format_formula(f: Formula) -> str:
    op = f[0]
    if op == "lit":
        return str(f[1])
    if op == "not":
        return f"!({format_formula(f[1])})"
    sym = {"and": "&", "or": "|", "imp": "=>", "iff": "<=>"}[op]
    return f"({format_formula(f[1])} {sym} {format_formula(f[2])})"


def serialize_theory(src: SourceTheory) -> str:
    out = []
    for name, size in src.domains.items():
        out.append(f"domain {name} {size}")
    for d in src.predicates.values():
        out.append(f"predicate {d.name}({','.join(d.domains)}) {format_weight(d.weights[0])} {format_weight(d.weights[1])}")
    for c in src.clauses:
        body = " | ".join(map(str, c.literals))
        out.append(f"exists {c.exists}: {body}" if c.exists else body)
    for m in src.mln:
        out.append(f"mln {format_weight(m.weight)} {format_formula(m.formula)}")
    return "\n".join(out) + ("\n" if out else "")


def formula_literals(f: Formula) -> list[SLiteral]:
    if f[0] == "lit":
        return [f[1]]
    return [l for g in f[1:] for l in formula_literals(g)]
