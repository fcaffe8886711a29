"""Exact weighted first-order model counting with domain recursion."""

from .engine import Cache, EngineConfig, EngineError, GroundingTooLarge, BudgetExceeded, wfomc
from .logic import Clause, Constant, Literal, Predicate, Segment, Theory, Var
from .parser import ParseError, parse_theory, serialize_theory
from .preprocess import Problem, compile_source, solve

__all__ = [
    "BudgetExceeded",
    "Cache",
    "Clause",
    "Constant",
    "EngineConfig",
    "EngineError",
    "GroundingTooLarge",
    "Literal",
    "ParseError",
    "Predicate",
    "Problem",
    "Segment",
    "Theory",
    "Var",
    "compile_source",
    "parse_theory",
    "serialize_theory",
    "solve",
    "wfomc",
]
