"""Physical model building: potentials, field strengths, Hamiltonians.

The vector potential comes from two generating functions.  Two gauge
conventions appear in the classification tables and both are supported:

  mode "a3":     A = (d2 G, -d1 G, F)            (third component free)
  mode "gauge":  A = (d1 F + d2 G, d2 F - d1 G, 0)  (third component gauged away)

In mode "gauge" the F column acts as a gauge generator: an x3-independent F
changes A without changing the magnetic field.

Hamiltonians (in rescaled units, p_a = -i d_a, pi_a = p_a - e A^a):

  SP:       H = pi^2/2 + A0 + g sigma.B
  QRSE h3:  H = pi^2/2 + A0 + g sigma.B
                + (nu/2) eps_abc sigma_a (E^b p^c + p^c E^b) + mu lap(A0),
            with E = grad A0
  QRSE h3a: the same with E replaced by Etilde = grad(Atilde) and p by pi
            inside the spin-orbit term, and the Darwin term mu div(Etilde)

where Atilde defaults to A0 - q*S (S is the extra scalar potential).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from . import expr as ex
from .diffop import DiffOp
from .pauli import PauliExpr

_EPS3 = {(1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1,
         (3, 2, 1): -1, (1, 3, 2): -1, (2, 1, 3): -1}


def eps(a, b, c):
    return _EPS3.get((a, b, c), 0)


def grad(e):
    return tuple(ex.differentiate(e, v) for v in ex.SPATIAL)


def divergence(v):
    return ex.add(*[ex.differentiate(v[i], ex.SPATIAL[i]) for i in range(3)])


def curl(v):
    out = []
    for a in range(1, 4):
        parts = []
        for b in range(1, 4):
            for c in range(1, 4):
                s = eps(a, b, c)
                if s:
                    parts.append(ex.mul(ex.Const(s),
                                        ex.differentiate(v[c - 1], ex.SPATIAL[b - 1])))
        out.append(ex.add(*parts))
    return tuple(out)


def laplacian(e):
    return ex.add(*[ex.diff_n(e, v, 2) for v in ex.SPATIAL])


@dataclass
class PotentialConfig:
    """Generating functions, scalar potentials and coupling constants."""

    F: ex.Expr = ex.ZERO
    G: ex.Expr = ex.ZERO
    A0: ex.Expr = ex.ZERO
    S: ex.Expr = ex.ZERO
    Atilde: ex.Expr | None = None   # explicit effective potential, else A0 - q*S
    Avec: tuple | None = None       # explicit vector potential (gauge-dressed rows)
    mode: str = "a3"
    e: ex.Expr = dc_field(default_factory=lambda: ex.param("e"))
    g: ex.Expr = dc_field(default_factory=lambda: ex.param("g"))
    nu: ex.Expr = dc_field(default_factory=lambda: ex.param("nu"))
    mu: ex.Expr = dc_field(default_factory=lambda: ex.param("mu"))
    q: ex.Expr = dc_field(default_factory=lambda: ex.param("q"))

    def __post_init__(self):
        for name in ("F", "G", "A0", "S", "e", "g", "nu", "mu", "q"):
            setattr(self, name, ex.aslit(getattr(self, name)))
        if self.Atilde is not None:
            self.Atilde = ex.aslit(self.Atilde)
        if self.Avec is not None:
            self.Avec = tuple(ex.aslit(a) for a in self.Avec)
        if self.mode not in ("a3", "gauge"):
            raise ValueError(f"unknown potential mode {self.mode!r}")

    def effective_potential(self):
        if self.Atilde is not None:
            return self.Atilde
        return ex.add(self.A0, ex.mul(ex.MINUS_ONE, self.q, self.S))

    def time_independence_defects(self):
        """d/dt of every input; all must vanish."""
        out = [ex.differentiate(self.F, "t"), ex.differentiate(self.G, "t"),
               ex.differentiate(self.A0, "t"),
               ex.differentiate(self.effective_potential(), "t")]
        return out


@dataclass
class FieldSet:
    A: tuple
    B: tuple          # magnetic field
    E: tuple          # grad A0
    Etilde: tuple     # grad Atilde
    Btilde: tuple     # B - 2 nu (A x Etilde) convention
    Beff: tuple       # matrix field actually multiplying g sigma in H (per variant)


def vector_potential(cfg):
    """Vector potential of the configuration in its gauge mode."""
    if cfg.Avec is not None:
        return cfg.Avec
    d1G, d2G = ex.differentiate(cfg.G, "x1"), ex.differentiate(cfg.G, "x2")
    if cfg.mode == "a3":
        return (d2G, ex.mul(ex.MINUS_ONE, d1G), cfg.F)
    d1F, d2F = ex.differentiate(cfg.F, "x1"), ex.differentiate(cfg.F, "x2")
    return (ex.add(d1F, d2G), ex.add(d2F, ex.mul(ex.MINUS_ONE, d1G)), ex.ZERO)


def magnetic_field(cfg):
    return curl(vector_potential(cfg))


def magnetic_field_closed_form(cfg):
    """Closed form for mode a3: (d2 F + d1 d3 G, d2 d3 G - d1 F, -(d1^2+d2^2) G)."""
    if cfg.mode != "a3":
        raise ValueError("closed form applies to mode a3")
    F, G = cfg.F, cfg.G
    return (
        ex.add(ex.differentiate(F, "x2"),
               ex.differentiate(ex.differentiate(G, "x1"), "x3")),
        ex.add(ex.differentiate(ex.differentiate(G, "x2"), "x3"),
               ex.mul(ex.MINUS_ONE, ex.differentiate(F, "x1"))),
        ex.mul(ex.MINUS_ONE, ex.add(ex.diff_n(G, "x1", 2), ex.diff_n(G, "x2", 2))),
    )


def field_set(cfg, variant="sp"):
    A = vector_potential(cfg)
    B = curl(A)
    E = grad(cfg.A0)
    Et = grad(cfg.effective_potential())
    # documented convention: Btilde^a = B^a - 2 nu eps_abc A^b Etilde_c
    Btilde = []
    for a in range(1, 4):
        parts = [B[a - 1]]
        for b in range(1, 4):
            for c in range(1, 4):
                s = eps(a, b, c)
                if s:
                    parts.append(ex.mul(ex.Const(-2 * s), cfg.nu,
                                        A[b - 1], Et[c - 1]))
        Btilde.append(ex.add(*parts))
    # matrix field of the built Hamiltonian: the pi-coupled spin-orbit term of
    # variant h3a shifts the Pauli term by -(nu e / g) eps_abc Etilde^b A^c
    if variant == "qrse-h3a":
        Beff = []
        for a in range(1, 4):
            parts = [B[a - 1]]
            for b in range(1, 4):
                for c in range(1, 4):
                    s = eps(a, b, c)
                    if s:
                        parts.append(ex.mul(ex.Const(-s), cfg.nu, cfg.e,
                                            ex.powr(cfg.g, -1),
                                            Et[b - 1], A[c - 1]))
            Beff.append(ex.add(*parts))
        Beff = tuple(Beff)
    else:
        Beff = B
    return FieldSet(A, B, E, Et, tuple(Btilde), Beff)


def momentum(a):
    """p_a = -i d/dx_a."""
    return DiffOp.partial(ex.SPATIAL[a - 1]).scale(ex.Const(0, -1))


def kinetic_momentum(cfg, a, A=None):
    A = A if A is not None else vector_potential(cfg)
    return momentum(a) - DiffOp.from_scalar(ex.mul(cfg.e, A[a - 1]))


def build_sp_hamiltonian(cfg):
    """H = pi^2/2 + A0 + g sigma.B  (assembled by operator composition)."""
    A = vector_potential(cfg)
    B = curl(A)
    H = DiffOp.zero()
    for a in (1, 2, 3):
        pia = kinetic_momentum(cfg, a, A)
        H = H + pia.compose(pia).scale(ex.HALF)
    H = H + DiffOp.from_scalar(cfg.A0)
    H = H + DiffOp.from_pauli(
        PauliExpr.vector(*[ex.mul(cfg.g, B[a]) for a in range(3)]))
    return H


def _spin_orbit(cfg, E, momenta):
    """(nu/2) eps_abc sigma_a (E^b m^c + m^c E^b) with m the given momenta."""
    out = DiffOp.zero()
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            for c in (1, 2, 3):
                s = eps(a, b, c)
                if not s:
                    continue
                Eb = DiffOp.from_scalar(E[b - 1])
                mc = momenta[c - 1]
                sym = Eb.compose(mc) + mc.compose(Eb)
                coeff = PauliExpr.sigma(a).scale(
                    ex.mul(ex.HALF, cfg.nu, ex.Const(s)))
                out = out + DiffOp.from_pauli(coeff).compose(sym)
    return out


def build_qrse_hamiltonian(cfg, variant="qrse-h3"):
    """Quasirelativistic Hamiltonian with spin-orbit and Darwin terms."""
    H = build_sp_hamiltonian(cfg)
    if variant in ("h3", "qrse-h3"):
        E = grad(cfg.A0)
        momenta = [momentum(a) for a in (1, 2, 3)]
        H = H + _spin_orbit(cfg, E, momenta)
        H = H + DiffOp.from_scalar(ex.mul(cfg.mu, laplacian(cfg.A0)))
        return H
    if variant in ("h3a", "qrse-h3a"):
        At = cfg.effective_potential()
        Et = grad(At)
        A = vector_potential(cfg)
        momenta = [kinetic_momentum(cfg, a, A) for a in (1, 2, 3)]
        H = H + _spin_orbit(cfg, Et, momenta)
        H = H + DiffOp.from_scalar(ex.mul(cfg.mu, divergence(Et)))
        return H
    raise ValueError(f"unknown variant {variant!r}")


def build_hamiltonian(cfg, variant="sp"):
    if variant == "sp":
        return build_sp_hamiltonian(cfg)
    return build_qrse_hamiltonian(cfg, variant)


def gauge_transform(H, phase):
    """Conjugate: exp(-i phase) H exp(i phase), computed operator-algebraically."""
    if not ex.is_time_independent(phase):
        raise ValueError("gauge phase must be time independent")
    u_plus = DiffOp.from_scalar(ex.func("exp", ex.mul(ex.I, phase)))
    u_minus = DiffOp.from_scalar(ex.func("exp", ex.mul(ex.Const(0, -1), phase)))
    return u_minus.compose(H).compose(u_plus)


def hermiticity_defect(H):
    return H - H.adjoint()
