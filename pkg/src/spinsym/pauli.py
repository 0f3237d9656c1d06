"""2x2 matrix expressions on the Pauli basis.

A PauliExpr is c0*s0 + c1*s1 + c2*s2 + c3*s3 with ScalarExpr coefficients.
Products use s_a s_b = delta_ab s0 + i eps_abc s_c; matrices are never
stored as explicit 2x2 arrays on the symbolic side.  ``to_matrix`` provides
the numeric 2x2 oracle used by the tests.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .evaluate import EvalContext, eval_value

_EPS = {(1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1,
        (3, 2, 1): -1, (1, 3, 2): -1, (2, 1, 3): -1}

SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class PauliExpr:
    __slots__ = ("c",)

    def __init__(self, c0=ex.ZERO, c1=ex.ZERO, c2=ex.ZERO, c3=ex.ZERO):
        self.c = (ex.aslit(c0), ex.aslit(c1), ex.aslit(c2), ex.aslit(c3))

    @classmethod
    def scalar(cls, e):
        return cls(ex.aslit(e))

    @classmethod
    def sigma(cls, a):
        c = [ex.ZERO] * 4
        c[a] = ex.ONE
        return cls(*c)

    @classmethod
    def vector(cls, v1, v2, v3):
        return cls(ex.ZERO, v1, v2, v3)

    def __add__(self, other):
        other = _as_pauli(other)
        return PauliExpr(*[ex.add(a, b) for a, b in zip(self.c, other.c)])

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_pauli(other)
        return PauliExpr(*[ex.add(a, ex.mul(ex.MINUS_ONE, b))
                           for a, b in zip(self.c, other.c)])

    def __neg__(self):
        return PauliExpr(*[ex.mul(ex.MINUS_ONE, a) for a in self.c])

    def scale(self, s):
        s = ex.aslit(s)
        return PauliExpr(*[ex.mul(s, a) for a in self.c])

    def __mul__(self, other):
        """Pauli product; other may be a scalar expression."""
        if not isinstance(other, PauliExpr):
            return self.scale(other)
        a0, a1, a2, a3 = self.c
        b0, b1, b2, b3 = other.c
        av, bv = (a1, a2, a3), (b1, b2, b3)
        out0 = ex.add(ex.mul(a0, b0),
                      *[ex.mul(av[i], bv[i]) for i in range(3)])
        out = [out0, ex.ZERO, ex.ZERO, ex.ZERO]
        for k in range(1, 4):
            parts = [ex.mul(a0, other.c[k]), ex.mul(self.c[k], b0)]
            for (i, j, kk), s in _EPS.items():
                if kk == k:
                    parts.append(ex.mul(ex.Const(0, s), av[i - 1], bv[j - 1]))
            out[k] = ex.add(*parts)
        return PauliExpr(*out)

    __rmul__ = __mul__

    def commutator(self, other):
        return self * other - other * self

    def anticommutator(self, other):
        return self * other + other * self

    def conj_transpose(self):
        # sigma matrices are hermitian, so dagger conjugates coefficients
        return PauliExpr(*[ex.conjugate(a) for a in self.c])

    def map(self, f):
        return PauliExpr(*[f(a) for a in self.c])

    def is_structural_zero(self):
        return all(isinstance(a, ex.Const) and a.is_zero() for a in self.c)

    def to_matrix(self, env, realizations=None):
        """Numeric 2x2 matrix of the expression at a point."""
        ctx = EvalContext(dict(env), realizations or {})
        m = np.zeros((2, 2), dtype=complex)
        for a, coeff in enumerate(self.c):
            m += eval_value(coeff, ctx) * SIGMA[a]
        return m

    def __repr__(self):
        from .printer import to_text

        names = ("s0", "s1", "s2", "s3")
        parts = [f"({to_text(a)})*{n}" for a, n in zip(self.c, names)
                 if not (isinstance(a, ex.Const) and a.is_zero())]
        return " + ".join(parts) if parts else "0"


def _as_pauli(v):
    return v if isinstance(v, PauliExpr) else PauliExpr.scalar(v)


def commutator(a, b):
    return _as_pauli(a).commutator(_as_pauli(b))


def anticommutator(a, b):
    return _as_pauli(a).anticommutator(_as_pauli(b))


def hermiticity_defect(p):
    """Coefficient differences between p and its conjugate transpose."""
    q = p.conj_transpose()
    return [ex.add(a, ex.mul(ex.MINUS_ONE, b)) for a, b in zip(p.c, q.c)]
