"""Symbolic verification of Lie symmetries for spin-1/2 Schrödinger operators."""

from .expr import (
    Const, Expr, I, ONE, ZERO,
    add, conjugate, differentiate, div, expand_derived, func, mul, opaque,
    param, powr, reflect, simplify, substitute,
)
from .parser import ParseContext, ParseError, parse
from .printer import to_text
from .evaluate import Realization, SingularPointError, evaluate_jet
from .zerotest import ZeroVerdict, is_zero, is_zero_all

__all__ = [
    "Const", "Expr", "I", "ONE", "ZERO",
    "add", "conjugate", "differentiate", "div", "expand_derived", "func",
    "mul", "opaque", "param", "powr", "reflect", "simplify", "substitute",
    "ParseContext", "ParseError", "parse", "to_text",
    "Realization", "SingularPointError", "evaluate_jet",
    "ZeroVerdict", "is_zero", "is_zero_all",
]

__version__ = "0.1.0"
