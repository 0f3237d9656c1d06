"""Symbolic scalar expressions over t, x1, x2, x3.

The expression language is deliberately small: exact complex-rational
constants, named real parameters, the four coordinates, a handful of
geometric atoms (r, rt, phi, theta, rho) kept symbolic with known
derivative rules, the primitive functions exp/ln/sin/cos/arctan/sqrt,
rational powers, and opaque function applications F(u1,...,uk) carrying a
partial-derivative multi-index.  Everything is immutable and canonicalised
on construction, so ``simplify`` is idempotent by construction.

Identity testing is probabilistic (see zerotest.py); the structural rules
here only keep expressions compact: ring normalisation of sums/products,
exp/ln cancellation, sin^2+cos^2 merging, and sign normalisation inside
sin/cos.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

COORDS = ("t", "x1", "x2", "x3")
SPATIAL = ("x1", "x2", "x3")
ATOMS = ("r", "rt", "phi", "theta", "rho")
FUNCS = ("exp", "ln", "sin", "cos", "arctan", "sqrt")

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _cc(re=0, im=0):
    return (Fraction(re), Fraction(im))


def _cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cneg(a):
    return (-a[0], -a[1])


def _cinv(a):
    d = a[0] * a[0] + a[1] * a[1]
    if d == 0:
        raise ZeroDivisionError("division by zero constant")
    return (a[0] / d, -a[1] / d)


def _cpow_int(a, n):
    if n < 0:
        return _cpow_int(_cinv(a), -n)
    out = _cc(1)
    base = a
    while n:
        if n & 1:
            out = _cmul(out, base)
        base = _cmul(base, base)
        n >>= 1
    return out


class Expr:
    """Base class; instances are immutable, hashable, totally ordered."""

    __slots__ = ("key", "skey", "_hash")

    def _init_key(self, key):
        self.key = key
        self.skey = repr(key)
        self._hash = hash(self.skey)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Expr) and self.skey == other.skey

    def __lt__(self, other):
        return self.skey < other.skey

    # Arithmetic sugar (used heavily by the operator layers).
    def __add__(self, other):
        return add(self, aslit(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, aslit(other)))

    def __rsub__(self, other):
        return add(aslit(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, aslit(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, aslit(other))

    def __rtruediv__(self, other):
        return div(aslit(other), self)

    def __neg__(self):
        return mul(MINUS_ONE, self)

    def __repr__(self):
        from .printer import to_text

        return to_text(self)


class Const(Expr):
    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)
        self._init_key(("C", str(self.re), str(self.im)))

    @property
    def value(self):
        return (self.re, self.im)

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def is_one(self):
        return self.re == 1 and self.im == 0


class Sym(Expr):
    """Named leaf: coordinate, parameter or geometric atom."""

    __slots__ = ("name", "kind")

    def __init__(self, name, kind):
        self.name = name
        self.kind = kind  # "coord" | "param" | "atom" | "formal"
        self._init_key(("S", kind, name))


class Func(Expr):
    __slots__ = ("fname", "arg")

    def __init__(self, fname, arg):
        self.fname = fname
        self.arg = arg
        self._init_key(("F", fname, arg.key))


class Opaque(Expr):
    """Application F^{(d)}(args) of an opaque function with derivative index d."""

    __slots__ = ("name", "args", "d")

    def __init__(self, name, args, d=None):
        self.name = name
        self.args = tuple(args)
        self.d = tuple(d) if d is not None else (0,) * len(self.args)
        if len(self.d) != len(self.args):
            raise ValueError("derivative index length mismatch")
        self._init_key(("O", name, self.d, tuple(a.key for a in self.args)))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)  # canonical: sorted, merged, len >= 2
        self._init_key(("A", tuple(t.key for t in self.terms)))


class Mul(Expr):
    """coeff * prod(base_i ** exp_i); exps are non-zero Fractions."""

    __slots__ = ("coeff", "factors")

    def __init__(self, coeff, factors):
        self.coeff = coeff  # (Fraction re, Fraction im)
        self.factors = tuple(factors)  # sorted by base skey
        self._init_key(
            ("M", str(coeff[0]), str(coeff[1]),
             tuple((b.key, str(e)) for b, e in self.factors))
        )


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
I = Const(0, 1)
HALF = Const(Fraction(1, 2))

T, X1, X2, X3 = (Sym(n, "coord") for n in COORDS)
R, RT, PHI, THETA, RHO = (Sym(n, "atom") for n in ATOMS)

_POSITIVE_ATOMS = {"r", "rt"}


def aslit(v):
    """Coerce ints/Fractions/complex literals to Expr."""
    if isinstance(v, Expr):
        return v
    if isinstance(v, bool):
        raise TypeError("bool is not an expression")
    if isinstance(v, int):
        return Const(v)
    if isinstance(v, Fraction):
        return Const(v)
    if isinstance(v, float):
        return Const(Fraction(v).limit_denominator(10**12))
    if isinstance(v, complex):
        re = Fraction(v.real).limit_denominator(10**12)
        im = Fraction(v.imag).limit_denominator(10**12)
        return Const(re, im)
    raise TypeError(f"cannot coerce {type(v)} to Expr")


def param(name):
    return Sym(name, "param")


def formal(name):
    """Formal slot variable, used for opaque-function realizations."""
    return Sym(name, "formal")


def is_positive(e):
    if isinstance(e, Const):
        return e.im == 0 and e.re > 0
    if isinstance(e, Sym):
        return e.kind == "atom" and e.name in _POSITIVE_ATOMS
    if isinstance(e, Func):
        return e.fname == "exp"
    return False


# ---------------------------------------------------------------------------
# canonicalising constructors
# ---------------------------------------------------------------------------

def _split_coeff(e):
    """Return (coeff, rest) with rest canonical and coefficient-free."""
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Mul):
        if e.coeff != (_ONE, _ZERO):
            return e.coeff, _mul_from((_ONE, _ZERO), e.factors)
        return (_ONE, _ZERO), e
    return (_ONE, _ZERO), e


def _mul_from(coeff, factors):
    if coeff == (_ZERO, _ZERO):
        return ZERO
    if not factors:
        return Const(coeff[0], coeff[1])
    if coeff == (_ONE, _ZERO) and len(factors) == 1 and factors[0][1] == 1:
        return factors[0][0]
    return Mul(coeff, tuple(sorted(factors, key=lambda fe: fe[0].skey)))


def _pyth_pass(merged):
    """Merge c*R*sin(u)^2 + c*R*cos(u)^2 -> c*R in a term dict."""
    changed = True
    while changed:
        changed = False
        for rest, co in list(merged.items()):
            if co == (_ZERO, _ZERO) or not isinstance(rest, Mul):
                continue
            for base, ex in rest.factors:
                if ex == 2 and isinstance(base, Func) and base.fname == "sin":
                    partner_factors = tuple(
                        (Func("cos", base.arg) if (b is base) else b, x)
                        for b, x in rest.factors
                    )
                    partner = _mul_from((_ONE, _ZERO), partner_factors)
                    if merged.get(partner) == co:
                        reduced_factors = tuple(
                            (b, x) for b, x in rest.factors if b is not base
                        )
                        reduced = _mul_from((_ONE, _ZERO), reduced_factors)
                        del merged[rest]
                        del merged[partner]
                        rc, rr = _split_coeff(reduced)
                        co2 = _cmul(co, rc)
                        merged[rr] = _cadd(merged.get(rr, (_ZERO, _ZERO)), co2)
                        changed = True
                        break
            if changed:
                break
    return merged


def add(*es):
    merged = {}
    const = (_ZERO, _ZERO)
    stack = [aslit(e) for e in es]
    while stack:
        e = stack.pop()
        if isinstance(e, Add):
            stack.extend(e.terms)
            continue
        if isinstance(e, Const):
            const = _cadd(const, e.value)
            continue
        co, rest = _split_coeff(e)
        merged[rest] = _cadd(merged.get(rest, (_ZERO, _ZERO)), co)
    merged = _pyth_pass(merged)
    terms = []
    for rest, co in merged.items():
        if co == (_ZERO, _ZERO):
            continue
        if rest is ONE or (isinstance(rest, Const) and rest.is_one()):
            const = _cadd(const, co)
            continue
        if isinstance(rest, Mul):
            terms.append(_mul_from(_cmul(co, rest.coeff), rest.factors))
        elif co == (_ONE, _ZERO):
            terms.append(rest)
        else:
            terms.append(_mul_from(co, ((rest, _ONE),)))
    if const != (_ZERO, _ZERO):
        terms.append(Const(const[0], const[1]))
    terms.sort(key=lambda t: t.skey)
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def mul(*es):
    coeff = (_ONE, _ZERO)
    factors = {}  # base -> exponent Fraction
    adds = []
    stack = [aslit(e) for e in es]
    while stack:
        e = stack.pop()
        if isinstance(e, Const):
            if e.is_zero():
                return ZERO
            coeff = _cmul(coeff, e.value)
            continue
        if isinstance(e, Mul):
            coeff = _cmul(coeff, e.coeff)
            for b, x in e.factors:
                factors[b] = factors.get(b, _ZERO) + x
            continue
        if isinstance(e, Add):
            adds.append(e)
            continue
        factors[e] = factors.get(e, _ZERO) + 1
    # exp merging: prod exp(u_i)^k_i -> exp(sum k_i u_i)
    exp_arg = []
    clean = {}
    for b, x in factors.items():
        if x == 0:
            continue
        if isinstance(b, Func) and b.fname == "exp":
            exp_arg.append(mul(Const(x), b.arg))
        else:
            clean[b] = clean.get(b, _ZERO) + x
    if exp_arg:
        ea = add(*exp_arg)
        if not (isinstance(ea, Const) and ea.is_zero()):
            eb = func("exp", ea)
            if isinstance(eb, Func):
                clean[eb] = clean.get(eb, _ZERO) + 1
            else:  # folded to a constant or simpler form
                coeff_e, rest_e = _split_coeff(eb)
                coeff = _cmul(coeff, coeff_e)
                if rest_e is not ONE:
                    clean[rest_e] = clean.get(rest_e, _ZERO) + 1
    factors = [(b, x) for b, x in clean.items() if x != 0]
    base = _mul_from(coeff, factors)
    for a in adds:
        base = _distribute(base, a)
    return base


def _distribute(e, a):
    """Multiply e by an Add node without expanding: keep Add as a factor."""
    if isinstance(e, Const):
        if e.is_zero():
            return ZERO
        if e.is_one():
            return a
        # fold the constant into each term: keeps sums shallow
        return add(*[mul(e, t) for t in a.terms])
    co, rest = _split_coeff(e)
    if isinstance(rest, Mul):
        factors = dict(rest.factors)
    elif rest is ONE:
        factors = {}
    else:
        factors = {rest: _ONE}
    factors[a] = factors.get(a, _ZERO) + 1
    out = [(b, x) for b, x in factors.items() if x != 0]
    return _mul_from(co, out)


def powr(base, exponent):
    """base ** exponent with a rational exponent."""
    ex = exponent if isinstance(exponent, Fraction) else Fraction(exponent)
    base = aslit(base)
    if ex == 0:
        return ONE
    if ex == 1:
        return base
    if isinstance(base, Const):
        if ex.denominator == 1:
            v = _cpow_int(base.value, ex.numerator)
            return Const(v[0], v[1])
        if base.im == 0 and base.re > 0:
            # keep exact unless it is a perfect power
            num = base.re ** ex
            if isinstance(num, Fraction) or float(num).is_integer():
                try:
                    return Const(Fraction(num))
                except (TypeError, ValueError):
                    pass
        return _mul_from((_ONE, _ZERO), ((base, ex),))
    if isinstance(base, Func) and base.fname == "exp":
        return func("exp", mul(Const(ex), base.arg))
    if isinstance(base, Mul):
        if ex.denominator == 1 or all(is_positive(b) for b, _ in base.factors):
            out = [(b, x * ex) for b, x in base.factors]
            cf = base.coeff
            if cf == (_ONE, _ZERO):
                return _mul_from((_ONE, _ZERO), [(b, x) for b, x in out if x != 0])
            if ex.denominator == 1:
                c = _cpow_int(cf, ex.numerator)
                return _mul_from(c, [(b, x) for b, x in out if x != 0])
            if cf[1] == 0 and cf[0] > 0:
                piece = _mul_from((_ONE, _ZERO), [(Const(cf[0]), ex)])
                return mul(piece, _mul_from((_ONE, _ZERO), out))
        return _mul_from((_ONE, _ZERO), ((base, ex),))
    if isinstance(base, Sym) and base.name in _POSITIVE_ATOMS:
        return _mul_from((_ONE, _ZERO), ((base, ex),))
    return _mul_from((_ONE, _ZERO), ((base, ex),))


def div(a, b):
    a, b = aslit(a), aslit(b)
    if isinstance(b, Const):
        if b.is_zero():
            raise ZeroDivisionError("division by zero expression")
        v = _cinv(b.value)
        return mul(a, Const(v[0], v[1]))
    return mul(a, powr(b, Fraction(-1)))


def _negate_if_negative(u):
    """Return (sign, u') with sign in {1,-1} pulling a leading minus out."""
    if isinstance(u, Mul):
        c = u.coeff
        if c[0] < 0 or (c[0] == 0 and c[1] < 0):
            return -1, _mul_from(_cneg(c), u.factors)
    if isinstance(u, Const):
        if u.re < 0 or (u.re == 0 and u.im < 0):
            return -1, Const(-u.re, -u.im)
    if isinstance(u, Add):
        signs = [_negate_if_negative(t)[0] for t in u.terms]
        if all(s == -1 for s in signs):
            return -1, add(*[mul(MINUS_ONE, t) for t in u.terms])
    return 1, u


def func(fname, arg):
    arg = aslit(arg)
    if fname == "sqrt":
        return powr(arg, Fraction(1, 2))
    if fname == "exp":
        if isinstance(arg, Const) and arg.is_zero():
            return ONE
        if isinstance(arg, Func) and arg.fname == "ln":
            return arg.arg
        return Func("exp", arg)
    if fname == "ln":
        if isinstance(arg, Const) and arg.is_one():
            return ZERO
        if isinstance(arg, Func) and arg.fname == "exp":
            return arg.arg
        return Func("ln", arg)
    if fname in ("sin", "cos"):
        if isinstance(arg, Const) and arg.is_zero():
            return ZERO if fname == "sin" else ONE
        s, u = _negate_if_negative(arg)
        if fname == "sin":
            out = Func("sin", u)
            return mul(MINUS_ONE, out) if s < 0 else out
        return Func("cos", u)
    if fname == "arctan":
        if isinstance(arg, Const) and arg.is_zero():
            return ZERO
        s, u = _negate_if_negative(arg)
        out = Func("arctan", u)
        return mul(MINUS_ONE, out) if s < 0 else out
    raise ValueError(f"unknown function {fname!r}")


def opaque(name, args, d=None):
    return Opaque(name, tuple(aslit(a) for a in args), d)


def simplify(e):
    """Re-canonicalise; idempotent because constructors canonicalise."""
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Func):
        return func(e.fname, simplify(e.arg))
    if isinstance(e, Opaque):
        return Opaque(e.name, tuple(simplify(a) for a in e.args), e.d)
    if isinstance(e, Add):
        return add(*[simplify(t) for t in e.terms])
    if isinstance(e, Mul):
        parts = [Const(e.coeff[0], e.coeff[1])]
        parts += [powr(simplify(b), x) for b, x in e.factors]
        return mul(*parts)
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# calculus
# ---------------------------------------------------------------------------

# derivative of each geometric atom w.r.t. x1, x2, x3
def _atom_derivatives():
    r2 = powr(R, Fraction(-2))
    rt2 = powr(RT, Fraction(-2))
    return {
        "r": (mul(X1, powr(R, Fraction(-1))),
              mul(X2, powr(R, Fraction(-1))),
              mul(X3, powr(R, Fraction(-1)))),
        "rt": (mul(X1, powr(RT, Fraction(-1))),
               mul(X2, powr(RT, Fraction(-1))),
               ZERO),
        "phi": (mul(MINUS_ONE, X2, rt2), mul(X1, rt2), ZERO),
        "theta": (mul(X1, X3, r2, powr(RT, Fraction(-1))),
                  mul(X2, X3, r2, powr(RT, Fraction(-1))),
                  mul(MINUS_ONE, RT, r2)),
        "rho": (mul(X1, rt2), mul(X2, rt2), ZERO),
    }


ATOM_D = _atom_derivatives()

_FUNC_D = {
    "exp": lambda u: func("exp", u),
    "ln": lambda u: powr(u, Fraction(-1)),
    "sin": lambda u: func("cos", u),
    "cos": lambda u: mul(MINUS_ONE, func("sin", u)),
    "arctan": lambda u: powr(add(ONE, mul(u, u)), Fraction(-1)),
}


@lru_cache(maxsize=None)
def differentiate(e, v):
    """Partial derivative of e with respect to coordinate (or formal) v."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Sym):
        if e.name == v:
            return ONE
        if e.kind == "atom" and v in SPATIAL:
            return ATOM_D[e.name][SPATIAL.index(v)]
        return ZERO
    if isinstance(e, Func):
        du = differentiate(e.arg, v)
        if isinstance(du, Const) and du.is_zero():
            return ZERO
        return mul(_FUNC_D[e.fname](e.arg), du)
    if isinstance(e, Opaque):
        out = []
        for i, a in enumerate(e.args):
            da = differentiate(a, v)
            if isinstance(da, Const) and da.is_zero():
                continue
            d2 = list(e.d)
            d2[i] += 1
            out.append(mul(Opaque(e.name, e.args, tuple(d2)), da))
        return add(*out) if out else ZERO
    if isinstance(e, Add):
        return add(*[differentiate(t, v) for t in e.terms])
    if isinstance(e, Mul):
        parts = []
        factors = list(e.factors)
        for i, (b, x) in enumerate(factors):
            db = differentiate(b, v)
            if isinstance(db, Const) and db.is_zero():
                continue
            rest = [(bb, xx) for j, (bb, xx) in enumerate(factors) if j != i]
            term = _mul_from(e.coeff, rest)
            parts.append(mul(Const(x), powr(b, x - 1), db, term))
        return add(*parts) if parts else ZERO
    raise TypeError(type(e))


def diff_n(e, v, n):
    for _ in range(n):
        e = differentiate(e, v)
    return e


def diff_multi(e, m):
    """Apply the multi-index (kt,k1,k2,k3) of partial derivatives."""
    for v, k in zip(COORDS, m):
        e = diff_n(e, v, k)
    return e


def substitute(e, mapping):
    """Replace named leaves (coords, params, atoms, formals) by expressions."""
    def go(e):
        if isinstance(e, Const):
            return e
        if isinstance(e, Sym):
            return mapping.get(e.name, e)
        if isinstance(e, Func):
            return func(e.fname, go(e.arg))
        if isinstance(e, Opaque):
            return Opaque(e.name, tuple(go(a) for a in e.args), e.d)
        if isinstance(e, Add):
            return add(*[go(t) for t in e.terms])
        if isinstance(e, Mul):
            parts = [Const(e.coeff[0], e.coeff[1])]
            parts += [powr(go(b), x) for b, x in e.factors]
            return mul(*parts)
        raise TypeError(type(e))

    return go(e)


_ATOM_EXPANSIONS = None


def atom_expansions():
    """Coordinate form of each atom (theta uses the x3>0 branch)."""
    global _ATOM_EXPANSIONS
    if _ATOM_EXPANSIONS is None:
        rt_x = powr(add(mul(X1, X1), mul(X2, X2)), Fraction(1, 2))
        r_x = powr(add(mul(X1, X1), mul(X2, X2), mul(X3, X3)), Fraction(1, 2))
        _ATOM_EXPANSIONS = {
            "r": r_x,
            "rt": rt_x,
            "phi": func("arctan", div(X2, X1)),
            "theta": func("arctan", div(rt_x, X3)),
            "rho": func("ln", rt_x),
        }
    return _ATOM_EXPANSIONS


def expand_derived(e):
    return substitute(e, atom_expansions())


def reflect(e):
    """Spatial parity x -> -x.  r, rt, phi, rho are even; theta is rejected."""
    if contains_atom(e, "theta"):
        raise ValueError("cannot reflect an expression containing theta")
    return substitute(e, {"x1": mul(MINUS_ONE, X1),
                          "x2": mul(MINUS_ONE, X2),
                          "x3": mul(MINUS_ONE, X3)})


def conjugate(e):
    """Complex conjugation; parameters and opaque functions are real."""
    if isinstance(e, Const):
        return Const(e.re, -e.im)
    if isinstance(e, Sym):
        return e
    if isinstance(e, Func):
        return func(e.fname, conjugate(e.arg))
    if isinstance(e, Opaque):
        return Opaque(e.name, tuple(conjugate(a) for a in e.args), e.d)
    if isinstance(e, Add):
        return add(*[conjugate(t) for t in e.terms])
    if isinstance(e, Mul):
        parts = [Const(e.coeff[0], -e.coeff[1])]
        parts += [powr(conjugate(b), x) for b, x in e.factors]
        return mul(*parts)
    raise TypeError(type(e))


def _walk(e):
    yield e
    if isinstance(e, Func):
        yield from _walk(e.arg)
    elif isinstance(e, Opaque):
        for a in e.args:
            yield from _walk(a)
    elif isinstance(e, Add):
        for t in e.terms:
            yield from _walk(t)
    elif isinstance(e, Mul):
        for b, _ in e.factors:
            yield from _walk(b)


def contains_atom(e, name):
    return any(isinstance(n, Sym) and n.kind == "atom" and n.name == name
               for n in _walk(e))


def opaque_signature(e):
    """Map opaque name -> (arity, max derivative order) appearing in e."""
    sig = {}
    for n in _walk(e):
        if isinstance(n, Opaque):
            ar, od = sig.get(n.name, (len(n.args), 0))
            if ar != len(n.args):
                raise ValueError(f"inconsistent arity for opaque {n.name!r}")
            sig[n.name] = (ar, max(od, sum(n.d)))
    return sig


def free_params(e):
    return {n.name for n in _walk(e) if isinstance(n, Sym) and n.kind == "param"}


def is_time_independent(e):
    return all(not (isinstance(n, Sym) and n.name == "t") for n in _walk(e))
