"""Matrix-coefficient differential operators with optional parity factor.

A DiffOp is a finite sum of terms  coeff * dt^kt d1^k1 d2^k2 d3^k3 * P^b
where coeff is a PauliExpr, the derivative multi-index runs over
(t, x1, x2, x3), and b marks composition with the spatial parity operator
P: x -> -x.  Terms are kept in normal form: derivatives to the right of
coefficients, parity rightmost, like terms merged, zero coefficients
dropped.  The rewrite rules P^2 = 1, P d_a = -d_a P (a spatial) and
P c(x) = c(-x) P are applied during composition.
"""

from __future__ import annotations

from itertools import product
from math import comb

from . import expr as ex
from .pauli import PauliExpr
from .zerotest import DEFAULT_TOL, DEFAULT_TRIALS, ZeroVerdict, is_zero_all

_ZMONO = (0, 0, 0, 0)


class InternalConsistencyError(RuntimeError):
    """The two independent zero-test routes disagreed."""


def _merge(terms, key, coeff):
    if key in terms:
        terms[key] = terms[key] + coeff
    else:
        terms[key] = coeff


class DiffOp:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        cleaned = {}
        for key, coeff in (terms or {}).items():
            if not coeff.is_structural_zero():
                cleaned[key] = coeff
        self.terms = cleaned

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def identity(cls):
        return cls({(_ZMONO, False): PauliExpr.scalar(ex.ONE)})

    @classmethod
    def from_pauli(cls, p):
        return cls({(_ZMONO, False): p})

    @classmethod
    def from_scalar(cls, e):
        return cls.from_pauli(PauliExpr.scalar(e))

    @classmethod
    def partial(cls, var, n=1):
        m = [0, 0, 0, 0]
        m[ex.COORDS.index(var)] = n
        return cls({(tuple(m), False): PauliExpr.scalar(ex.ONE)})

    @classmethod
    def parity(cls):
        return cls({(_ZMONO, True): PauliExpr.scalar(ex.ONE)})

    # -- linear structure ---------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.from_scalar(ex.aslit(other))
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            _merge(out, key, coeff)
        return DiffOp(out)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.from_scalar(ex.aslit(other))
        return self + (-other)

    def __neg__(self):
        return DiffOp({k: -c for k, c in self.terms.items()})

    def scale(self, s):
        """Left multiplication by a scalar (or Pauli) coefficient."""
        if isinstance(s, PauliExpr):
            return DiffOp({k: s * c for k, c in self.terms.items()})
        s = ex.aslit(s)
        return DiffOp({k: c.scale(s) for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, DiffOp):
            return self.compose(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    # -- composition --------------------------------------------------------
    def compose(self, other):
        out = {}
        for (m1, b1), c1 in self.terms.items():
            for (m2, b2), c2 in other.terms.items():
                c2m = c2.map(ex.reflect) if b1 else c2
                sign = -1 if (b1 and (m2[1] + m2[2] + m2[3]) % 2) else 1
                refl = b1 != b2
                # Leibniz: d^{m1} (c2m d^{m2}) = sum_j C(m1,j) (d^j c2m) d^{m1-j+m2}
                ranges = [range(k + 1) for k in m1]
                for j in product(*ranges):
                    binom = 1
                    for a in range(4):
                        binom *= comb(m1[a], j[a])
                    dc = c2m.map(lambda e, jj=j: ex.diff_multi(e, jj))
                    if dc.is_structural_zero():
                        continue
                    coeff = (c1 * dc).scale(ex.Const(sign * binom))
                    mono = tuple(m1[a] - j[a] + m2[a] for a in range(4))
                    _merge(out, (mono, refl), coeff)
        return DiffOp(out)

    def commutator(self, other):
        return self.compose(other) - other.compose(self)

    def anticommutator(self, other):
        return self.compose(other) + other.compose(self)

    # -- structure ----------------------------------------------------------
    def order(self):
        return max((sum(m) for (m, _) in self.terms), default=0)

    def spatial_order(self):
        return max((m[1] + m[2] + m[3] for (m, _) in self.terms), default=0)

    def has_time_derivative(self):
        return any(m[0] for (m, _) in self.terms)

    def has_parity(self):
        return any(b for (_, b) in self.terms)

    def coefficients(self):
        """All scalar coefficients of the normal form."""
        out = []
        for coeff in self.terms.values():
            out.extend(coeff.c)
        return out

    def map_coefficients(self, f):
        return DiffOp({k: c.map(f) for k, c in self.terms.items()})

    def simplified(self):
        return self.map_coefficients(ex.simplify)

    # -- adjoint ------------------------------------------------------------
    def adjoint(self):
        """Formal adjoint under the L2 inner product (spatial terms only)."""
        if self.has_time_derivative():
            raise ValueError("formal adjoint is defined for spatial operators")
        out = DiffOp.zero()
        for (m, b), c in self.terms.items():
            # (c d^m P^b)^+  =  P^b (-d)^m c^+
            piece = DiffOp.from_pauli(c.conj_transpose())
            for a, var in enumerate(ex.COORDS):
                for _ in range(m[a]):
                    piece = DiffOp.partial(var).scale(ex.MINUS_ONE).compose(piece)
            if b:
                piece = DiffOp.parity().compose(piece)
            out = out + piece
        return out

    # -- action on spinors --------------------------------------------------
    def apply(self, spinor):
        """Apply to a symbolic 2-spinor (pair of ScalarExpr)."""
        up_out, dn_out = ex.ZERO, ex.ZERO
        for (m, b), c in self.terms.items():
            up, dn = spinor
            if b:
                up, dn = ex.reflect(up), ex.reflect(dn)
            up = ex.diff_multi(up, m)
            dn = ex.diff_multi(dn, m)
            c0, c1, c2, c3 = c.c
            up_out = ex.add(up_out, ex.mul(ex.add(c0, c3), up),
                            ex.mul(ex.add(c1, ex.mul(ex.Const(0, -1), c2)), dn))
            dn_out = ex.add(dn_out, ex.mul(ex.add(c1, ex.mul(ex.I, c2)), up),
                            ex.mul(ex.add(c0, ex.mul(ex.MINUS_ONE, c3)), dn))
        return (up_out, dn_out)

    def __repr__(self):
        from .printer import to_text

        if not self.terms:
            return "0"
        parts = []
        for (m, b), c in sorted(self.terms.items(),
                                key=lambda kv: (sum(kv[0][0]), kv[0])):
            ds = "".join(f"*{n}" + (f"^{k}" if k > 1 else "")
                         for n, k in zip(("dt", "d1", "d2", "d3"), m) if k)
            ps = "*Par" if b else ""
            parts.append(f"[{c!r}]{ds}{ps}")
        return " + ".join(parts)


def is_zero_op(op, trials=DEFAULT_TRIALS, tol=DEFAULT_TOL, seed=0,
               param_values=None, cross_check=True):
    """Zero test for an operator.

    Route A tests every normal-form coefficient; route B applies the
    operator to an opaque test spinor and tests the two components.  The
    routes must agree, otherwise InternalConsistencyError is raised.
    """
    coeffs = op.coefficients()
    va = is_zero_all(coeffs, trials=trials, tol=tol, seed=seed,
                     param_values=param_values)
    if not cross_check:
        return va
    theta_blocked = op.has_parity() and any(
        ex.contains_atom(c, "theta") for c in coeffs)
    if theta_blocked:
        return va
    spin_up = ex.opaque("PsiUpTest", (ex.T, ex.X1, ex.X2, ex.X3))
    spin_dn = ex.opaque("PsiDnTest", (ex.T, ex.X1, ex.X2, ex.X3))
    up, dn = op.apply((spin_up, spin_dn))
    vb = is_zero_all([up, dn], trials=max(16, trials // 2), tol=tol,
                     seed=seed + 1, param_values=param_values)
    if va.zero != vb.zero:
        raise InternalConsistencyError(
            f"coefficient route says zero={va.zero}, "
            f"spinor route says zero={vb.zero}")
    return va


def op_equal(a, b, **kw):
    return is_zero_op(a - b, **kw)
