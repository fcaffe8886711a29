"""Shared test utilities: bundled theories, engine runs, random theories."""

from __future__ import annotations

import random
from fractions import Fraction
from importlib import resources

from wfomc.engine import Cache, Engine, EngineConfig, free_atom_factor
from wfomc.parser import SourceTheory, parse_theory
from wfomc.preprocess import compile_source


def bundled_text(name: str) -> str:
    return (resources.files("wfomc") / "theories" / f"{name}.th").read_text()


def bundled(name: str, **sizes) -> SourceTheory:
    src = parse_theory(bundled_text(name))
    for k, v in sizes.items():
        assert k in src.domains, k
        src.domains[k] = v
    return src


def run_engine(src: SourceTheory, mode: str = "RD", cache: Cache | None = None, **cfg) -> tuple[Fraction, Engine]:
    pr = compile_source(src)
    eng = Engine(pr.weights, EngineConfig(mode=mode, **cfg), cache, pr.root_order)
    v = eng.run(pr.theory)
    return v * free_atom_factor(pr.theory, eng.weights, pr.universe), eng


def count(src: SourceTheory, mode: str = "RD", **cfg) -> Fraction:
    return run_engine(src, mode, **cfg)[0]


# "CRITERION n: PASS|FAIL ..." lines, printed at the end of the session
ACCEPTANCE_LOG: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LOG.append(line)
    print(line)


_WEIGHTS = ["1", "2", "1/2", "-1", "3/4", "-2/3", "0", "5/3", "1/3", "-1/2"]


def random_theory_text(seed: int, max_atoms: int = 24, existentials: bool = True) -> str:
    """A small random theory: at most 3 predicates of arity at most 2, at most
    3 clauses, domains of size at most 3 and rational weights (some negative
    or zero)."""
    rng = random.Random(seed)
    while True:
        n_dom = rng.choice([1, 1, 2])
        doms = {f"d{i}": rng.randint(1, 3) for i in range(n_dom)}
        names = list(doms)
        preds = []
        for i in range(rng.randint(1, 3)):
            ar = rng.choice([0, 1, 1, 2, 2])
            preds.append((f"P{i}", tuple(rng.choice(names) for _ in range(ar))))
        atoms = 0
        for _, ds in preds:
            a = 1
            for d in ds:
                a *= doms[d]
            atoms += a
        if atoms <= max_atoms:
            break
    pools = {d: (["x", "y", "z"] if i == 0 else ["u", "v", "w"]) for i, d in enumerate(names)}
    consts = {d: ("A" if i == 0 else "B") for i, d in enumerate(names)}
    lines = [f"domain {d} {n}" for d, n in doms.items()]
    for name, ds in preds:
        w1, w2 = rng.choice(_WEIGHTS), rng.choice(_WEIGHTS)
        lines.append(f"predicate {name}({','.join(ds)}) {w1} {w2}")
    for _ in range(rng.randint(1, 3)):
        lits = []
        for _ in range(rng.randint(1, 3)):
            name, ds = rng.choice(preds)
            args = []
            for d in ds:
                if doms[d] >= 2 and rng.random() < 0.1:
                    args.append(consts[d])
                else:
                    args.append(rng.choice(pools[d][: doms[d] + 1]))
            sign = "" if rng.random() < 0.5 else "!"
            lits.append(f"{sign}{name}({','.join(args)})")
        body = " | ".join(lits)
        if existentials and rng.random() < 0.15:
            common = None
            for l in lits:
                inner = l[l.index("(") + 1 : -1]
                vs = {a for a in inner.split(",") if a and a[0].islower()}
                common = vs if common is None else common & vs
            if common:
                v = sorted(common)[0]
                # the Skolem predicate's atoms count against the oracle too
                lines.append(f"exists {v}: {body}")
                continue
        lines.append(body)
    return "\n".join(lines) + "\n"


def random_theory(seed: int, **kw) -> SourceTheory:
    return parse_theory(random_theory_text(seed, **kw))
