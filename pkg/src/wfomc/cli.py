"""Command-line front end.

    wfomc count FILE [--set-domain NAME=N] [--mode R|RD] [--stats]
    wfomc ratio FILE_A FILE_B
    wfomc check FILE
    wfomc oracle FILE [--limit N]
    wfomc bench FILE [--domain NAME] --sizes A:B:STEP [--mode R|RD|both] --csv PATH
    wfomc list

FILE is a path or the name of a bundled theory (see ``wfomc list``).

Exit codes: 0 ok, 1 parse or encoding error, 2 budget, ground limit or
zero denominator, 3 oracle limit exceeded.
"""

from __future__ import annotations

import argparse
import csv
import multiprocessing as mp
import sys
import time
from decimal import Decimal, localcontext
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .engine import Cache, Engine, EngineConfig, EngineError, free_atom_factor
from .liftability import classify
from .oracle import DEFAULT_LIMIT, OracleLimitExceeded, oracle_source
from .parser import ParseError, SourceTheory, parse_theory, serialize_theory
from .preprocess import EncodingError, compile_source

EXIT_PARSE = 1
EXIT_ENGINE = 2
EXIT_ORACLE = 3
BENCH_GROUND_LIMIT = 10**6
CSV_HEADER = ["theory", "mode", "n", "seconds", "nodes", "cache_hits", "value", "status"]


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def bundled_theories() -> list[str]:
    root = resources.files("wfomc") / "theories"
    return sorted(p.name[:-3] for p in root.iterdir() if p.name.endswith(".th"))


def resolve(name: str) -> tuple[str, str]:
    """(display name, text) of a file path or bundled theory name."""
    p = Path(name)
    if p.is_file():
        return p.stem, p.read_text()
    stem = name[:-3] if name.endswith(".th") else name
    stem = Path(stem).name
    f = resources.files("wfomc") / "theories" / f"{stem}.th"
    if f.is_file():
        return stem, f.read_text()
    raise CliError(f"no such theory file: {name}", EXIT_PARSE)


def load(name: str, overrides: list[str] | None = None) -> tuple[str, SourceTheory]:
    label, text = resolve(name)
    try:
        src = parse_theory(text)
    except ParseError as e:
        raise CliError(f"{label}: {e}", EXIT_PARSE) from None
    for item in overrides or []:
        dom, _, n = item.partition("=")
        if dom not in src.domains or not n.isdigit():
            raise CliError(f"bad --set-domain {item!r}", EXIT_PARSE)
        src.domains[dom] = int(n)
    return label, src


def format_value(v: Fraction) -> str:
    """``p/q (decimal)`` with 12 significant digits; integers print bare."""
    if v.denominator == 1:
        return str(v.numerator)
    with localcontext() as ctx:
        ctx.prec = 12
        d = Decimal(v.numerator) / Decimal(v.denominator)
    e = d.adjusted()
    dec = format(d, ".11E") if e > 15 or e < -6 else format(d, f".{max(0, 11 - e)}f")
    return f"{v.numerator}/{v.denominator} ({dec})"


def make_config(args) -> EngineConfig:
    return EngineConfig(
        mode=args.mode,
        probe_budget=args.probe_budget,
        ground_atom_limit=args.ground_limit,
        node_limit=args.budget,
        timeout=getattr(args, "timeout", None),
    )


def count_source(src: SourceTheory, config: EngineConfig, cache: Cache | None = None) -> tuple[Fraction, Engine]:
    try:
        pr = compile_source(src)
    except EncodingError as e:
        raise CliError(f"encoding error: {e}", EXIT_PARSE) from None
    eng = Engine(pr.weights, config, cache, pr.root_order)
    try:
        v = eng.run(pr.theory)
    except EngineError as e:
        raise CliError(str(e), EXIT_ENGINE) from None
    return v * free_atom_factor(pr.theory, eng.weights, pr.universe), eng


def _print_stats(eng: Engine) -> None:
    for k, v in eng.stats.as_dict().items():
        print(f"{k}: {v}")


def cmd_count(args) -> int:
    _, src = load(args.file, args.set_domain)
    v, eng = count_source(src, make_config(args))
    print(format_value(v))
    if args.stats:
        _print_stats(eng)
    return 0


def cmd_ratio(args) -> int:
    _, a = load(args.numerator, args.set_domain)
    _, b = load(args.denominator, args.set_domain)
    cfg = make_config(args)
    va, _ = count_source(a, cfg)
    vb, _ = count_source(b, cfg)
    if vb == 0:
        raise CliError("zero denominator", EXIT_ENGINE)
    print(format_value(va / vb))
    return 0


def cmd_check(args) -> int:
    _, src = load(args.file, args.set_domain)
    try:
        pr = compile_source(src)
    except EncodingError as e:
        raise CliError(f"encoding error: {e}", EXIT_PARSE) from None
    for line in classify(pr.theory).lines():
        print(line)
    return 0


def cmd_oracle(args) -> int:
    _, src = load(args.file, args.set_domain)
    try:
        v = oracle_source(src, args.limit)
    except OracleLimitExceeded as e:
        raise CliError(str(e), EXIT_ORACLE) from None
    print(format_value(v))
    return 0


# --------------------------------------------------------------------------
# bench


def parse_sizes(text: str) -> list[int]:
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise CliError(f"bad --sizes {text!r}", EXIT_PARSE) from None
    if len(nums) == 1:
        return nums
    a, b = nums[0], nums[1]
    step = nums[2] if len(nums) > 2 else 1
    if step < 1:
        raise CliError("--sizes step must be positive", EXIT_PARSE)
    return list(range(a, b + 1, step))


def _bench_worker(text: str, sizes: dict, config: EngineConfig, conn) -> None:
    src = parse_theory(text)
    src.domains.update(sizes)
    t0 = time.perf_counter()
    try:
        v, eng = count_source(src, config)
        conn.send(("ok", time.perf_counter() - t0, eng.stats.nodes, eng.stats.cache_hits, str(v)))
    except CliError as e:
        conn.send((f"error:{e}", time.perf_counter() - t0, 0, 0, ""))
    conn.close()


def bench_rows(label, text, domains, sizes, modes, timeout, config_args):
    """Run every (mode, size) in a child process with a wall-clock limit.
    Once a mode times out, its larger sizes are reported as skipped."""
    ctx = mp.get_context("fork")
    rows = []
    for mode in modes:
        stop = False
        for n in sizes:
            if stop:
                rows.append([label, mode, n, "", "", "", "", "skipped"])
                continue
            cfg = EngineConfig(mode=mode, **config_args)
            recv, send = ctx.Pipe(duplex=False)
            p = ctx.Process(target=_bench_worker, args=(text, {d: n for d in domains}, cfg, send))
            t0 = time.perf_counter()
            p.start()
            send.close()
            got = recv.poll(timeout)
            if got:
                status, secs, nodes, hits, value = recv.recv()
                p.join()
                rows.append([label, mode, n, f"{secs:.6f}", nodes, hits, value, status])
            else:
                p.kill()
                p.join()
                rows.append([label, mode, n, f"{time.perf_counter() - t0:.6f}", "", "", "", "timeout"])
                stop = True
    return rows


def cmd_bench(args) -> int:
    label, src = load(args.file, args.set_domain)
    domains = list(src.domains) if args.domain in (None, "all") else args.domain.split(",")
    for d in domains:
        if d not in src.domains:
            raise CliError(f"unknown domain {d}", EXIT_PARSE)
    sizes = parse_sizes(args.sizes)
    modes = ["R", "RD"] if args.mode == "both" else [args.mode]
    ground = args.ground_limit if args.ground_limit is not None else BENCH_GROUND_LIMIT
    cfg = dict(probe_budget=args.probe_budget, ground_atom_limit=ground, node_limit=args.budget)
    rows = bench_rows(label, serialize_theory(src), domains, sizes, modes, args.timeout, cfg)
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(CSV_HEADER)
        w.writerows(rows)
    finally:
        if args.csv:
            out.close()
    return 0


def cmd_list(args) -> int:
    for name in bundled_theories():
        print(name)
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--set-domain", action="append", default=[], metavar="NAME=N", help="override a domain size")
    engine = argparse.ArgumentParser(add_help=False)
    engine.add_argument("--mode", choices=["R", "RD"], default="RD")
    engine.add_argument("--budget", type=int, default=None, help="node limit")
    engine.add_argument("--probe-budget", type=int, default=1000)
    engine.add_argument("--ground-limit", type=int, default=30)
    engine.add_argument("--timeout", type=float, default=None, help="seconds")
    engine.add_argument("--stats", action="store_true")

    ap = argparse.ArgumentParser(prog="wfomc", description="Exact weighted first-order model counting.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common, engine], help="weighted model count")
    p.add_argument("file")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("ratio", parents=[common, engine], help="ratio of two counts")
    p.add_argument("numerator")
    p.add_argument("denominator")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("check", parents=[common], help="liftability class membership")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oracle", parents=[common], help="brute-force count")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT, help="maximum ground atoms")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", parents=[common], help="runtime sweep written as CSV")
    p.add_argument("file")
    p.add_argument("--domain", default=None, help="domain(s) to vary, comma separated (default all)")
    p.add_argument("--sizes", required=True, help="A:B:STEP")
    p.add_argument("--mode", choices=["R", "RD", "both"], default="both")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--csv", default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--probe-budget", type=int, default=1000)
    p.add_argument("--ground-limit", type=int, default=None, help=f"default {BENCH_GROUND_LIMIT}")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("list", help="bundled theories")
    p.set_defaults(func=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
