"""Numeric evaluation: point values and truncated multivariate jets.

Two independent code paths evaluate expressions numerically.  ``eval_value``
walks the tree and produces one complex number; ``eval_jet`` propagates
truncated Taylor series (jets), which yields all partial derivatives up to a
requested order without symbolic differentiation.  The cross-check between
``eval_jet`` and differentiate-then-``eval_value`` is part of the test suite.

Opaque functions are resolved through a Realization: a concrete expression
in formal slot variables u1..uk.  Derivative indices on opaque applications
differentiate the realization in slot space.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache

from . import expr as ex


class SingularPointError(ArithmeticError):
    """Evaluation hit a pole / branch point; the caller should redraw."""


class Realization:
    """Concrete stand-in for an opaque function, as an expression in u1..uk."""

    def __init__(self, arity, expression):
        self.arity = arity
        self.expression = expression
        self._partials = {(0,) * arity: expression}

    @classmethod
    def from_callable_slots(cls, arity, build):
        slots = [ex.formal(f"u{i + 1}") for i in range(arity)]
        return cls(arity, build(*slots))

    def partial(self, d):
        d = tuple(d)
        if d not in self._partials:
            # peel one derivative off an already-known lower index
            i = next(k for k, v in enumerate(d) if v > 0)
            lower = list(d)
            lower[i] -= 1
            base = self.partial(tuple(lower))
            self._partials[d] = ex.differentiate(base, f"u{i + 1}")
        return self._partials[d]


def slot_names(arity):
    return tuple(f"u{i + 1}" for i in range(arity))


_SAFE_MAG = 1e9


class EvalContext:
    """Environment for numeric evaluation.

    env maps names (coordinates, parameters, formal slots) to complex
    values; realizations maps opaque names to Realization objects.
    """

    def __init__(self, env, realizations=None):
        self.env = env
        self.realizations = realizations or {}
        self.max_mag = 0.0
        self._memo = {}

    def child(self, env):
        sub = EvalContext(env, self.realizations)
        sub.max_mag = self.max_mag
        return sub

    def note(self, v):
        m = abs(v)
        if m > self.max_mag:
            self.max_mag = m
        if not (m < _SAFE_MAG) or v != v:  # inf / nan
            raise SingularPointError("magnitude blow-up")
        return v


def _atom_value(name, env):
    x1, x2, x3 = env["x1"], env["x2"], env["x3"]
    if name == "r":
        return cmath.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    if name == "rt":
        return cmath.sqrt(x1 * x1 + x2 * x2)
    if name == "phi":
        return cmath.atan(x2 / x1)
    if name == "theta":
        return cmath.atan(cmath.sqrt(x1 * x1 + x2 * x2) / x3)
    if name == "rho":
        return cmath.log(cmath.sqrt(x1 * x1 + x2 * x2))
    raise KeyError(name)


def _func_value(fname, v):
    try:
        if fname == "exp":
            return cmath.exp(v)
        if fname == "ln":
            if v == 0:
                raise SingularPointError("ln(0)")
            return cmath.log(v)
        if fname == "sin":
            return cmath.sin(v)
        if fname == "cos":
            return cmath.cos(v)
        if fname == "arctan":
            return cmath.atan(v)
    except (ValueError, OverflowError) as err:
        raise SingularPointError(str(err)) from err
    raise KeyError(fname)


def eval_value(e, ctx):
    """Evaluate e to a complex number under ctx."""
    memo = ctx._memo
    out = memo.get(e)
    if out is not None:
        return out
    if isinstance(e, ex.Const):
        out = complex(e.re) + 1j * complex(e.im)
    elif isinstance(e, ex.Sym):
        if e.kind == "atom":
            out = _atom_value(e.name, ctx.env)
        else:
            try:
                out = complex(ctx.env[e.name])
            except KeyError:
                raise KeyError(f"no value bound for {e.name!r}") from None
    elif isinstance(e, ex.Func):
        out = _func_value(e.fname, eval_value(e.arg, ctx))
    elif isinstance(e, ex.Opaque):
        real = ctx.realizations.get(e.name)
        if real is None:
            raise KeyError(f"no realization for opaque {e.name!r}")
        vals = [eval_value(a, ctx) for a in e.args]
        env = dict(ctx.env)
        env.update(zip(slot_names(real.arity), vals))
        sub = ctx.child(env)
        out = eval_value(real.partial(e.d), sub)
        ctx.max_mag = max(ctx.max_mag, sub.max_mag)
    elif isinstance(e, ex.Add):
        out = sum(eval_value(t, ctx) for t in e.terms)
    elif isinstance(e, ex.Mul):
        out = complex(e.coeff[0]) + 1j * complex(e.coeff[1])
        for b, x in e.factors:
            bv = eval_value(b, ctx)
            if x.denominator == 1:
                n = x.numerator
                if bv == 0 and n < 0:
                    raise SingularPointError("zero to negative power")
                out *= bv ** n
            else:
                if bv == 0 and x < 0:
                    raise SingularPointError("zero to negative power")
                out *= bv ** complex(x)
    else:
        raise TypeError(type(e))
    ctx.note(out)
    memo[e] = out
    return out


# ---------------------------------------------------------------------------
# jets: truncated multivariate Taylor series
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _indices(nvars, order):
    """All multi-indices with total degree <= order, graded lexicographic."""
    out = [()]
    for _ in range(nvars):
        out = [m + (k,) for m in out for k in range(order + 1 - sum(m))]
    return tuple(sorted(out, key=lambda m: (sum(m), m)))


class Jet:
    """Taylor coefficients (not derivatives) on multi-indices |m| <= order."""

    __slots__ = ("vars", "order", "c")

    def __init__(self, vars_, order, c=None):
        self.vars = vars_
        self.order = order
        self.c = c if c is not None else {}

    def value(self):
        return self.c.get((0,) * len(self.vars), 0j)

    def copy(self):
        return Jet(self.vars, self.order, dict(self.c))


def _jconst(v, vars_, order):
    j = Jet(vars_, order)
    if v != 0:
        j.c[(0,) * len(vars_)] = complex(v)
    return j


def _jvar(i, value, vars_, order):
    j = _jconst(value, vars_, order)
    if order >= 1:
        m = [0] * len(vars_)
        m[i] = 1
        j.c[tuple(m)] = 1.0 + 0j
    return j


def _jadd(a, b):
    out = dict(a.c)
    for m, v in b.c.items():
        out[m] = out.get(m, 0j) + v
    return Jet(a.vars, a.order, out)


def _jscale(a, s):
    return Jet(a.vars, a.order, {m: v * s for m, v in a.c.items()})


def _jmul(a, b):
    order = a.order
    out = {}
    for ma, va in a.c.items():
        sa = sum(ma)
        for mb, vb in b.c.items():
            if sa + sum(mb) > order:
                continue
            m = tuple(x + y for x, y in zip(ma, mb))
            out[m] = out.get(m, 0j) + va * vb
    return Jet(a.vars, a.order, out)


def _jpow_int(a, n):
    out = _jconst(1.0, a.vars, a.order)
    base = a
    if n < 0:
        raise ValueError("negative power handled via series composition")
    while n:
        if n & 1:
            out = _jmul(out, base)
        base = _jmul(base, base)
        n >>= 1
    return out


def _compose_series(coeffs, g):
    """sum coeffs[k] * (g - g0)^k, truncated; coeffs are Taylor coefficients."""
    delta = g.copy()
    zero_m = (0,) * len(g.vars)
    delta.c.pop(zero_m, None)
    out = _jconst(coeffs[0], g.vars, g.order)
    p = _jconst(1.0, g.vars, g.order)
    for k in range(1, g.order + 1):
        p = _jmul(p, delta)
        if coeffs[k] != 0:
            out = _jadd(out, _jscale(p, coeffs[k]))
    return out


def _series_for(fname, a, order):
    """Taylor coefficients f^{(k)}(a)/k! for k=0..order."""
    if fname == "exp":
        e = cmath.exp(a)
        fact = 1.0
        out = []
        for k in range(order + 1):
            out.append(e / fact)
            fact *= (k + 1)
        return out
    if fname == "ln":
        if a == 0:
            raise SingularPointError("ln at 0")
        out = [cmath.log(a)]
        for k in range(1, order + 1):
            out.append(((-1) ** (k - 1)) / (k * a ** k))
        return out
    if fname in ("sin", "cos"):
        s, c = cmath.sin(a), cmath.cos(a)
        cyc = [s, c, -s, -c] if fname == "sin" else [c, -s, -c, s]
        fact = 1.0
        out = []
        for k in range(order + 1):
            out.append(cyc[k % 4] / fact)
            fact *= (k + 1)
        return out
    if fname == "arctan":
        # arctan'(x) = (1/2i) [ 1/(x-i) - 1/(x+i) ]
        if a in (1j, -1j):
            raise SingularPointError("arctan branch point")
        out = [cmath.atan(a)]
        for k in range(1, order + 1):
            km = k - 1
            term = ((-1) ** km) * math.factorial(km) * (
                (a - 1j) ** (-k) - (a + 1j) ** (-k))
            out.append(term / (2j * math.factorial(k)))
        return out
    raise KeyError(fname)


def _series_pow(a, exponent, order):
    """Taylor coefficients of x^e at a, rational exponent."""
    if a == 0:
        raise SingularPointError("power at 0")
    # f^{(k)}(a)/k! with f(x) = x^e:  e(e-1)...(e-k+1) a^{e-k} / k!
    out = []
    c = 1.0
    for k in range(order + 1):
        out.append(c * a ** (complex(exponent) - k) / math.factorial(k))
        c *= (float(exponent) - k)
    return out


def eval_jet(e, ctx, vars_=("t", "x1", "x2", "x3"), order=2):
    """Jet of e in vars_ around the point given by ctx.env."""
    memo = {}

    def go(e):
        out = memo.get(e)
        if out is not None:
            return out
        if isinstance(e, ex.Const):
            out = _jconst(complex(e.re) + 1j * complex(e.im), vars_, order)
        elif isinstance(e, ex.Sym):
            if e.name in vars_:
                out = _jvar(vars_.index(e.name), complex(ctx.env[e.name]), vars_, order)
            elif e.kind == "atom":
                out = go(ex.atom_expansions()[e.name])
            else:
                out = _jconst(complex(ctx.env[e.name]), vars_, order)
        elif isinstance(e, ex.Func):
            g = go(e.arg)
            out = _compose_series(_series_for(e.fname, g.value(), order), g)
        elif isinstance(e, ex.Opaque):
            real = ctx.realizations.get(e.name)
            if real is None:
                raise KeyError(f"no realization for opaque {e.name!r}")
            arg_jets = [go(a) for a in e.args]
            slots = slot_names(real.arity)
            env2 = dict(ctx.env)
            env2.update({s: j.value() for s, j in zip(slots, arg_jets)})
            sub = ctx.child(env2)
            inner = eval_jet(real.partial(e.d), sub, slots, order)
            # multivariate composition: sum over slot multi-indices
            out = _jconst(0.0, vars_, order)
            deltas = []
            for j in arg_jets:
                d = j.copy()
                d.c.pop((0,) * len(vars_), None)
                deltas.append(d)
            pow_cache = [{0: _jconst(1.0, vars_, order)} for _ in slots]

            def slot_pow(i, k):
                if k not in pow_cache[i]:
                    pow_cache[i][k] = _jmul(slot_pow(i, k - 1), deltas[i])
                return pow_cache[i][k]

            for m, cv in inner.c.items():
                if cv == 0:
                    continue
                piece = _jconst(cv, vars_, order)
                for i, k in enumerate(m):
                    if k:
                        piece = _jmul(piece, slot_pow(i, k))
                out = _jadd(out, piece)
        elif isinstance(e, ex.Add):
            out = _jconst(0.0, vars_, order)
            for t in e.terms:
                out = _jadd(out, go(t))
        elif isinstance(e, ex.Mul):
            out = _jconst(complex(e.coeff[0]) + 1j * complex(e.coeff[1]), vars_, order)
            for b, x in e.factors:
                bj = go(b)
                if x.denominator == 1 and x.numerator > 0:
                    out = _jmul(out, _jpow_int(bj, x.numerator))
                else:
                    out = _jmul(out, _compose_series(
                        _series_pow(bj.value(), x, order), bj))
        else:
            raise TypeError(type(e))
        memo[e] = out
        ctx.note(out.value())
        return out

    return go(e)


def jet_partials(jet):
    """Convert Taylor coefficients to a table of partial-derivative values."""
    out = {}
    for m, v in jet.c.items():
        f = 1
        for k in m:
            f *= math.factorial(k)
        out[m] = v * f
    return out


def evaluate_jet(e, point, order, realizations=None, vars_=("t", "x1", "x2", "x3")):
    """Table of all partials of e at a point, multi-index -> value.

    point maps variable and parameter names to numbers.  Raises
    SingularPointError on poles and KeyError for unresolved opaques.
    """
    ctx = EvalContext(dict(point), realizations or {})
    jet = eval_jet(e, ctx, tuple(vars_), order)
    table = jet_partials(jet)
    full = {m: table.get(m, 0j) for m in _indices(len(vars_), order)}
    return full
