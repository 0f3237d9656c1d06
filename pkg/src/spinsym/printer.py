"""Pretty printer for the expression DSL.

``parse(to_text(e))`` equals ``e`` up to canonical form.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Add, Const, Expr, Func, Mul, Opaque, Sym

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _const_text(re: Fraction, im: Fraction):
    """Return (text, precedence) for a complex rational."""
    if im == 0:
        s = _frac(re)
        prec = _PREC_ATOM if re >= 0 and re.denominator == 1 else _PREC_MUL
        return s, prec
    if re == 0:
        if im == 1:
            return "i", _PREC_ATOM
        if im == -1:
            return "-i", _PREC_MUL
        return f"{_frac(im)}*i", _PREC_MUL
    sign = "+" if im > 0 else "-"
    mag = abs(im)
    istr = "i" if mag == 1 else f"{_frac(mag)}*i"
    return f"({_frac(re)} {sign} {istr})", _PREC_ATOM


def _paren(text, prec, minprec):
    return f"({text})" if prec < minprec else text


def _render(e: Expr):
    if isinstance(e, Const):
        return _const_text(e.re, e.im)
    if isinstance(e, Sym):
        return e.name, _PREC_ATOM
    if isinstance(e, Func):
        inner, _ = _render(e.arg)
        return f"{e.fname}({inner})", _PREC_ATOM
    if isinstance(e, Opaque):
        args = ", ".join(_render(a)[0] for a in e.args)
        if any(e.d):
            return f"{e.name}[{','.join(map(str, e.d))}]({args})", _PREC_ATOM
        return f"{e.name}({args})", _PREC_ATOM
    if isinstance(e, Add):
        parts = []
        for t in e.terms:
            txt, prec = _render(t)
            if parts and not txt.startswith("-"):
                parts.append("+")
            parts.append(_paren(txt, prec, _PREC_ADD) if prec < _PREC_ADD else txt)
        out = []
        for p in parts:
            if p.startswith("-") and out and out[-1] != "+":
                out.append("- " + p[1:] if False else p)
            else:
                out.append(p)
        return " ".join(out).replace("+ -", "- "), _PREC_ADD
    if isinstance(e, Mul):
        num, den = [], []
        coeff = Const(e.coeff[0], e.coeff[1])
        lead = ""
        if not coeff.is_one():
            if coeff.re == -1 and coeff.im == 0:
                lead = "-"
            else:
                txt, prec = _const_text(coeff.re, coeff.im)
                num.append(_paren(txt, prec, _PREC_MUL))
        for b, x in e.factors:
            btxt, bprec = _render(b)
            btxt = _paren(btxt, bprec, _PREC_POW)
            tgt = num if x > 0 else den
            xa = abs(x)
            if xa == 1:
                tgt.append(btxt)
            elif xa == Fraction(1, 2):
                tgt.append(f"sqrt({_render(b)[0]})")
            else:
                ex = _frac(xa) if xa.denominator == 1 else f"({_frac(xa)})"
                tgt.append(f"{btxt}^{ex}")
        if not num:
            num.append("1")
        out = "*".join(num)
        for d in den:
            out += f"/{d}"
        return lead + out, _PREC_MUL
    raise TypeError(type(e))


def to_text(e: Expr) -> str:
    return _render(e)[0]
