"""Recursive-descent parser for the expression DSL.

Grammar (EBNF):

    input    := { header ';' } expr
    header   := 'opaque' NAME '/' INT | 'param' NAME
    expr     := term { ('+'|'-') term }
    term     := unary { ('*'|'/') unary }
    unary    := { '+'|'-' } power
    power    := atom [ '^' unary ]
    atom     := NUMBER | NAME | NAME '(' args ')' | NAME '[' ints ']' '(' args ')'
              | FUNC '(' expr ')' | 'pd' '(' expr ',' COORD ')' | '(' expr ')'

Reserved atoms: t x1 x2 x3 r rt phi theta rho i; reserved functions:
exp ln sin cos arctan sqrt; `pd(e, v)` differentiates at parse time;
`vkappa` abbreviates (phi - x3).  Numbers are exact rationals (decimal
literals are converted exactly).  Unknown names are errors unless declared
as parameters or opaque functions.
"""

from __future__ import annotations

import re as _re
from fractions import Fraction

from . import expr as ex

_TOKEN = _re.compile(
    r"\s*(?:(?P<num>\d+\.\d+|\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\^|\+|-|\*|/|\(|\)|\[|\]|,|;))"
)

_RESERVED = {
    "t": ex.T, "x1": ex.X1, "x2": ex.X2, "x3": ex.X3,
    "r": ex.R, "rt": ex.RT, "phi": ex.PHI, "theta": ex.THETA, "rho": ex.RHO,
    "i": ex.I,
}

DEFAULT_PARAMS = (
    "g", "e", "nu", "mu", "q", "kappa", "omega", "alpha", "lam", "c",
    "c1", "c2", "c3", "c4", "omega1", "omega2", "omega3",
)


class ParseError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ParseContext:
    """Declared names visible to the parser."""

    def __init__(self, params=DEFAULT_PARAMS, opaques=None, formals=()):
        self.params = set(params)
        self.opaques = dict(opaques or {})  # name -> arity
        self.formals = set(formals)

    def with_opaques(self, opaques):
        out = ParseContext(self.params, self.opaques, self.formals)
        out.opaques.update(opaques)
        return out


class _Parser:
    def __init__(self, text, ctx):
        self.text = text
        self.ctx = ctx
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                if text[pos:].strip():
                    raise ParseError(f"bad character {text[pos]!r}", pos)
                break
            pos = m.end()
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
        self.k = 0

    def peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.k += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val!r}", pos)

    def parse_input(self):
        # optional declaration headers separated by ';'
        while True:
            kind, val, pos = self.peek()
            if kind == "name" and val in ("opaque", "param"):
                save = self.k
                self.k += 1
                k2, name, p2 = self.next()
                if k2 != "name":
                    raise ParseError("expected a name in declaration", p2)
                if val == "opaque":
                    self.expect("/")
                    k3, arity, p3 = self.next()
                    if k3 != "num" or "." in arity:
                        raise ParseError("expected integer arity", p3)
                    self.ctx.opaques[name] = int(arity)
                else:
                    self.ctx.params.add(name)
                k4, v4, p4 = self.peek()
                if v4 == ";":
                    self.next()
                    continue
                raise ParseError("declaration must end with ';'", p4)
            break
        e = self.parse_expr()
        kind, val, pos = self.peek()
        if kind is not None:
            raise ParseError(f"unexpected trailing token {val!r}", pos)
        return e

    def parse_expr(self):
        out = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if val == "+":
                self.next()
                out = ex.add(out, self.parse_term())
            elif val == "-":
                self.next()
                out = ex.add(out, ex.mul(ex.MINUS_ONE, self.parse_term()))
            else:
                return out

    def parse_term(self):
        out = self.parse_unary()
        while True:
            kind, val, _ = self.peek()
            if val == "*":
                self.next()
                out = ex.mul(out, self.parse_unary())
            elif val == "/":
                self.next()
                out = ex.div(out, self.parse_unary())
            else:
                return out

    def parse_unary(self):
        sign = 1
        while True:
            kind, val, _ = self.peek()
            if val == "-":
                self.next()
                sign = -sign
            elif val == "+":
                self.next()
            else:
                break
        out = self.parse_power()
        return out if sign > 0 else ex.mul(ex.MINUS_ONE, out)

    def parse_power(self):
        base = self.parse_atom()
        kind, val, _ = self.peek()
        if val == "^":
            self.next()
            expo = self.parse_unary()
            if not isinstance(expo, ex.Const) or expo.im != 0:
                raise ParseError("exponent must be a rational constant",
                                 self.peek()[2])
            return ex.powr(base, expo.re)
        return base

    def parse_atom(self):
        kind, val, pos = self.next()
        if kind == "num":
            return ex.Const(Fraction(val))
        if val == "(":
            e = self.parse_expr()
            self.expect(")")
            return e
        if kind != "name":
            raise ParseError(f"unexpected token {val!r}", pos)
        if val == "pd":
            self.expect("(")
            e = self.parse_expr()
            self.expect(",")
            k2, v2, p2 = self.next()
            if v2 not in ("t", "x1", "x2", "x3"):
                raise ParseError("pd() differentiates by t, x1, x2 or x3", p2)
            self.expect(")")
            return ex.differentiate(e, v2)
        if val == "vkappa":
            return ex.add(ex.PHI, ex.mul(ex.MINUS_ONE, ex.X3))
        if val in ex.FUNCS:
            self.expect("(")
            e = self.parse_expr()
            self.expect(")")
            return ex.func(val, e)
        if val in self.ctx.opaques:
            d = None
            kind2, val2, _ = self.peek()
            if val2 == "[":
                self.next()
                d = [self.parse_int()]
                while self.peek()[1] == ",":
                    self.next()
                    d.append(self.parse_int())
                self.expect("]")
            self.expect("(")
            args = [self.parse_expr()]
            while self.peek()[1] == ",":
                self.next()
                args.append(self.parse_expr())
            self.expect(")")
            arity = self.ctx.opaques[val]
            if len(args) != arity:
                raise ParseError(f"opaque {val!r} expects {arity} arguments", pos)
            if d is not None and len(d) != arity:
                raise ParseError(f"derivative index of {val!r} needs {arity} entries", pos)
            return ex.opaque(val, args, d)
        if val in _RESERVED:
            return _RESERVED[val]
        if val in self.ctx.params:
            return ex.param(val)
        if val in self.ctx.formals:
            return ex.formal(val)
        raise ParseError(f"unknown identifier {val!r}", pos)

    def parse_int(self):
        kind, val, pos = self.next()
        if kind != "num" or "." in val:
            raise ParseError("expected an integer", pos)
        return int(val)


def parse(text, ctx=None):
    """Parse a DSL string into a canonical ScalarExpr."""
    ctx = ctx if ctx is not None else ParseContext()
    return _Parser(text, ctx).parse_input()
