"""Symmetry verification: commutator residuals and determining equations.

A first-order symmetry candidate is stored in the normal form

    Q = xi0 dt + (1/2)(xi^a d_a + d_a xi^a) + i (eta0 + sigma_a eta^a)

with alpha = -d(xi0)/dt (the operator equation [Q, L] = alpha L with
L = i dt - H forces this).  Verification runs two independent routes:

  * residual route: [Q, L] - alpha L is normal-ordered and zero-tested;
  * determining route: the coefficient system obtained by expanding the
    commutator is evaluated equation by equation.

The determining equations used here were re-derived from the operator
algebra; where the published forms disagree (a sign inside the
field-transport cross product, and a spurious 1/2 on the matrix gradient)
the derived versions are used and the published variants are retained
behind convention flags for comparison.  The two routes are cross-checked
on every verification.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from . import expr as ex
from .diffop import DiffOp, InternalConsistencyError, is_zero_op
from .model import (PotentialConfig, build_hamiltonian, eps, field_set,
                    grad, laplacian)
from .pauli import PauliExpr
from .zerotest import DEFAULT_TOL, DEFAULT_TRIALS, is_zero_all

_SP3 = ex.SPATIAL


@dataclass
class SymmetryCandidate:
    xi0: ex.Expr
    xi: tuple
    eta0: ex.Expr
    eta: tuple
    name: str = ""

    def __post_init__(self):
        self.xi0 = ex.aslit(self.xi0)
        self.xi = tuple(ex.aslit(v) for v in self.xi)
        self.eta0 = ex.aslit(self.eta0)
        self.eta = tuple(ex.aslit(v) for v in self.eta)

    @property
    def alpha(self):
        return ex.mul(ex.MINUS_ONE, ex.differentiate(self.xi0, "t"))

    def operator(self):
        op = DiffOp.partial("t").scale(self.xi0)
        div = ex.ZERO
        for a, v in enumerate(_SP3):
            op = op + DiffOp.partial(v).scale(self.xi[a])
            div = ex.add(div, ex.differentiate(self.xi[a], v))
        zero_order = PauliExpr(
            ex.add(ex.mul(ex.HALF, div), ex.mul(ex.I, self.eta0)),
            *[ex.mul(ex.I, self.eta[a]) for a in range(3)])
        return op + DiffOp.from_pauli(zero_order)

    @classmethod
    def from_operator(cls, op, name=""):
        """Extract the normal-form data; raises for non-ansatz operators."""
        allowed = {(0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0),
                   (0, 0, 1, 0), (0, 0, 0, 1)}
        xi0 = ex.ZERO
        xi = [ex.ZERO, ex.ZERO, ex.ZERO]
        zero_order = PauliExpr()
        for (m, refl), coeff in op.terms.items():
            if refl or m not in allowed:
                raise ValueError("operator is outside the first-order ansatz")
            if m == (0, 0, 0, 0):
                zero_order = zero_order + coeff
                continue
            if not all(isinstance(c, ex.Const) and c.is_zero()
                       for c in coeff.c[1:]):
                raise ValueError("derivative coefficients must be scalar")
            if m[0]:
                xi0 = coeff.c[0]
            else:
                xi[m.index(1) - 1] = coeff.c[0]
        div = ex.add(*[ex.differentiate(xi[a], _SP3[a]) for a in range(3)])
        eta0 = ex.mul(ex.Const(0, -1),
                      ex.add(zero_order.c[0], ex.mul(ex.Const(-1, 0),
                                                     ex.mul(ex.HALF, div))))
        eta = tuple(ex.mul(ex.Const(0, -1), zero_order.c[a]) for a in (1, 2, 3))
        return cls(xi0, tuple(xi), eta0, eta, name=name)


def symmetry_residual(candidate, H, alpha=None):
    """[Q, L] - alpha L  with L = i dt - H, in normal form."""
    if isinstance(candidate, SymmetryCandidate):
        op = candidate.operator()
        alpha = candidate.alpha if alpha is None else ex.aslit(alpha)
    else:
        op = candidate
        alpha = ex.ZERO if alpha is None else ex.aslit(alpha)
    L = DiffOp.partial("t").scale(ex.I) - H
    return op.commutator(L) - L.scale(alpha)


# ---------------------------------------------------------------------------
# determining systems
# ---------------------------------------------------------------------------

def _dt(e):
    return ex.differentiate(e, "t")


def _dx(e, a):
    return ex.differentiate(e, _SP3[a - 1])


def determining_sp(cand, cfg, convention="derived"):
    """Named coefficient equations for the Pauli-coupled Hamiltonian.

    convention="printed" flips the cross-product term of the field
    transport equation to the published orientation.
    """
    fs = field_set(cfg, "sp")
    A, B = fs.A, fs.B
    xi, eta, e_ = cand.xi, cand.eta, cfg.e
    alpha, eta0 = cand.alpha, cand.eta0
    div = ex.add(*[_dx(cand.xi[a - 1], a) for a in (1, 2, 3)])
    eqs = {}
    eqs["time_projection"] = [_dx(cand.xi0, a) for a in (1, 2, 3)]
    eqs["strain"] = []
    for a in (1, 2, 3):
        for b in range(a, 4):
            term = ex.add(_dx(xi[b - 1], a), _dx(xi[a - 1], b))
            if a == b:
                term = ex.add(term, ex.mul(ex.Const(Fraction(-2, 3)), div))
            eqs["strain"].append(term)
    eqs["trace"] = [ex.add(ex.mul(ex.Const(2), div), ex.mul(ex.Const(3), alpha))]
    half = ex.HALF if convention == "printed_half" else ex.ONE
    eqs["velocity"] = []
    for a in (1, 2, 3):
        rhs = [ex.mul(A[b - 1], _dx(xi[a - 1], b)) for b in (1, 2, 3)]
        rhs += [ex.mul(ex.MINUS_ONE, xi[b - 1], _dx(A[a - 1], b))
                for b in (1, 2, 3)]
        rhs.append(ex.mul(alpha, A[a - 1]))
        eqs["velocity"].append(
            ex.add(_dt(xi[a - 1]), ex.mul(half, _dx(eta0, a)),
                   ex.mul(ex.MINUS_ONE, e_, ex.add(*rhs))))
    eqs["matrix_constancy"] = [ex.mul(half, _dx(eta[c - 1], a))
                               for c in (1, 2, 3) for a in (1, 2, 3)]
    eqs["scalar_transport"] = [ex.add(
        *[ex.mul(xi[a - 1], _dx(cfg.A0, a)) for a in (1, 2, 3)],
        *[ex.mul(ex.MINUS_ONE, e_, _dt(xi[a - 1]), A[a - 1]) for a in (1, 2, 3)],
        ex.mul(ex.MINUS_ONE, alpha, cfg.A0),
        ex.mul(ex.MINUS_ONE, _dt(eta0)))]
    sign = 1 if convention != "printed" else -1
    eqs["field_transport"] = []
    for b in (1, 2, 3):
        parts = [ex.mul(xi[a - 1], _dx(B[b - 1], a)) for a in (1, 2, 3)]
        parts.append(ex.mul(ex.MINUS_ONE, alpha, B[b - 1]))
        for c in (1, 2, 3):
            for d in (1, 2, 3):
                s = eps(b, c, d)
                if s:
                    parts.append(ex.mul(ex.Const(2 * s * sign),
                                        B[c - 1], eta[d - 1]))
        eqs["field_transport"].append(
            ex.add(ex.mul(cfg.g, ex.add(*parts)),
                   ex.mul(ex.MINUS_ONE, _dt(eta[b - 1]))))
    return eqs


def determining_qrse(cand, cfg, variant="qrse-h3", convention="derived"):
    """Determining system with spin-orbit and Darwin couplings active."""
    fs = field_set(cfg, variant)
    A = fs.A
    Beff = fs.Beff
    W = cfg.A0 if variant in ("h3", "qrse-h3") else cfg.effective_potential()
    Wd = grad(W)
    Whess = [[_dx(Wd[k - 1], d) for d in (1, 2, 3)] for k in (1, 2, 3)]
    xi, eta, eta0, alpha = cand.xi, cand.eta, cand.eta0, cand.alpha
    e_, nu = cfg.e, cfg.nu
    base_conv = "printed_half" if convention == "printed_half" else "derived"
    eqs = determining_sp(cand, cfg, convention=base_conv)
    del eqs["matrix_constancy"]
    del eqs["field_transport"]
    del eqs["scalar_transport"]
    half = ex.HALF if convention == "printed_half" else ex.ONE
    # gradient of the matrix part, sourced by the spin-orbit coupling
    eqs["spin_gradient"] = []
    for c in (1, 2, 3):
        for a in (1, 2, 3):
            rhs = []
            for b in (1, 2, 3):
                for k in (1, 2, 3):
                    s = eps(c, b, k)
                    if s:
                        rhs.append(ex.mul(ex.Const(-s), Wd[b - 1],
                                          _dx(xi[a - 1], k)))
            for b in (1, 2, 3):
                s = eps(c, b, a)
                if s:
                    rhs.append(ex.mul(ex.Const(s), ex.add(
                        *[ex.mul(xi[k - 1], Whess[b - 1][k - 1])
                          for k in (1, 2, 3)])))
                    rhs.append(ex.mul(ex.Const(-s), alpha, Wd[b - 1]))
            if True:
                extra = [ex.mul(ex.Const(2 if a == c else 0),
                                eta[k - 1], Wd[k - 1]) for k in (1, 2, 3)]
                rhs.extend(x for x in extra if not (
                    isinstance(x, ex.Const) and x.is_zero()))
                rhs.append(ex.mul(ex.Const(-2), eta[a - 1], Wd[c - 1]))
            eqs["spin_gradient"].append(
                ex.add(ex.mul(half, _dx(eta[c - 1], a)),
                       ex.mul(ex.MINUS_ONE, nu, ex.add(*rhs))))
    # field transport with spin-orbit corrections
    eqs["field_transport"] = []
    for b in (1, 2, 3):
        parts = [ex.mul(xi[a - 1], _dx(Beff[b - 1], a)) for a in (1, 2, 3)]
        parts.append(ex.mul(ex.MINUS_ONE, alpha, Beff[b - 1]))
        for c in (1, 2, 3):
            for d in (1, 2, 3):
                s = eps(b, c, d)
                if s:
                    parts.append(ex.mul(ex.Const(2 * s), Beff[c - 1], eta[d - 1]))
        extra = [ex.mul(cfg.g, ex.add(*parts)),
                 ex.mul(ex.MINUS_ONE, _dt(eta[b - 1])),
                 ex.mul(ex.Const(0, Fraction(1, 2)), laplacian(eta[b - 1])),
                 *[ex.mul(e_, A[a - 1], _dx(eta[b - 1], a)) for a in (1, 2, 3)]]
        for c in (1, 2, 3):
            for d in (1, 2, 3):
                s = eps(b, c, d)
                if s:
                    extra.append(ex.mul(ex.Const(-s), nu, Wd[c - 1],
                                        _dx(eta0, d)))
        inner = []
        for d in (1, 2, 3):
            inner.append(ex.mul(Wd[d - 1], _dx(eta[d - 1], b)))
            inner.append(ex.mul(ex.MINUS_ONE, Wd[b - 1], _dx(eta[d - 1], d)))
        extra.append(ex.mul(ex.Const(0, -1), nu, ex.add(*inner)))
        eqs["field_transport"].append(ex.add(*extra))
    # scalar transport with Darwin and spin-orbit corrections
    dar = ex.mul(cfg.mu, laplacian(W) if variant in ("h3a", "qrse-h3a")
                 else laplacian(cfg.A0))
    V0 = ex.add(cfg.A0, dar)
    sc = [ex.mul(xi[a - 1], _dx(V0, a)) for a in (1, 2, 3)]
    sc += [ex.mul(ex.MINUS_ONE, e_, _dt(xi[a - 1]), A[a - 1]) for a in (1, 2, 3)]
    sc.append(ex.mul(ex.MINUS_ONE, alpha, V0))
    sc.append(ex.mul(ex.MINUS_ONE, _dt(eta0)))
    for a in (1, 2, 3):
        for c in (1, 2, 3):
            for d in (1, 2, 3):
                s = eps(a, c, d)
                if s:
                    sc.append(ex.mul(ex.Const(-s), nu,
                                     _dx(eta[c - 1], a), Wd[d - 1]))
    eqs["scalar_transport"] = [ex.add(*sc)]
    return eqs


@dataclass
class VerificationReport:
    candidate: str
    variant: str
    verdict: str                      # "symmetry" | "non-symmetry"
    residual_zero: bool
    determining: dict = dc_field(default_factory=dict)
    routes_agree: bool | None = None
    witness: dict | None = None
    residual_order: int = 0
    seconds: float | None = None

    @property
    def is_symmetry(self):
        return self.verdict == "symmetry"

    def to_dict(self, with_timing=False):
        out = {
            "candidate": self.candidate,
            "variant": self.variant,
            "verdict": self.verdict,
            "residual_zero": self.residual_zero,
            "determining": dict(self.determining),
            "routes_agree": self.routes_agree,
            "residual_order": self.residual_order,
            "witness": _round_witness(self.witness),
        }
        out["seconds"] = self.seconds if with_timing else None
        return out


def _round_witness(w):
    if w is None:
        return None
    out = {}
    for k, v in w.items():
        if isinstance(v, dict):
            out[k] = {kk: _fmt_num(vv) for kk, vv in v.items()}
        else:
            out[k] = _fmt_num(v)
    return out


def _fmt_num(v):
    if isinstance(v, complex):
        return [round(v.real, 12), round(v.imag, 12)]
    if isinstance(v, float):
        return round(v, 12)
    return v


def verify_candidate(cand, cfg, variant="sp", trials=DEFAULT_TRIALS,
                     tol=DEFAULT_TOL, seed=0, param_values=None,
                     with_determining=True, convention="derived"):
    """Full verification of one candidate against one configuration."""
    t0 = time.perf_counter()
    H = build_hamiltonian(cfg, variant)
    is_cand = isinstance(cand, SymmetryCandidate)
    residual = symmetry_residual(cand, H)
    rv = is_zero_op(residual, trials=trials, tol=tol, seed=seed,
                    param_values=param_values)
    det_report = {}
    agree = None
    if with_determining and is_cand:
        if variant == "sp":
            eqs = determining_sp(cand, cfg, convention=convention)
        else:
            eqs = determining_qrse(cand, cfg, variant, convention=convention)
        flat, names = [], []
        for name, group in eqs.items():
            for i, e in enumerate(group):
                flat.append(e)
                names.append((name, i))
        batch = is_zero_all(flat, trials=trials, tol=tol, seed=seed + 17,
                            param_values=param_values)
        if batch.zero:
            det_report = {name: True for name, _ in names}
            det_ok = True
        else:
            det_report = {}
            for (name, i), e in zip(names, flat):
                v = is_zero_all([e], trials=trials, tol=tol, seed=seed + 17,
                                param_values=param_values)
                det_report[f"{name}[{i}]"] = v.zero
            det_ok = all(det_report.values())
        agree = (det_ok == rv.zero)
        if not agree and convention == "derived":
            raise InternalConsistencyError(
                f"determining-system verdict {det_ok} disagrees with "
                f"residual verdict {rv.zero} for {cand.name or 'candidate'}")
    name = getattr(cand, "name", "") or "candidate"
    return VerificationReport(
        candidate=name,
        variant=variant,
        verdict="symmetry" if rv.zero else "non-symmetry",
        residual_zero=rv.zero,
        determining=det_report,
        routes_agree=agree,
        witness=rv.witness,
        residual_order=residual.order(),
        seconds=time.perf_counter() - t0,
    )
