"""Hamiltonian construction, gauge transforms, and the symmetry verifier."""

from fractions import Fraction

import pytest

from spinsym import expr as ex
from spinsym.catalog import make_generator, parse_operator
from spinsym.diffop import DiffOp, is_zero_op
from spinsym.model import (PotentialConfig, build_hamiltonian,
                           build_sp_hamiltonian, gauge_transform,
                           hermiticity_defect, magnetic_field,
                           magnetic_field_closed_form, vector_potential,
                           divergence, grad)
from spinsym.parser import ParseContext, parse
from spinsym.verify import (SymmetryCandidate, determining_sp,
                            symmetry_residual, verify_candidate)
from spinsym.zerotest import is_zero, is_zero_all

OPQ = {"F": 2, "G": 2, "R": 2}


def cfg_from(Ftext, Gtext, A0text, ctx=None, **kw):
    ctx = ctx or ParseContext(opaques=OPQ)
    return PotentialConfig(F=parse(Ftext, ctx), G=parse(Gtext, ctx),
                           A0=parse(A0text, ctx), **kw)


class TestFields:
    def test_zero_config(self):
        cfg = PotentialConfig()
        assert vector_potential(cfg) == (ex.ZERO, ex.ZERO, ex.ZERO)

    def test_polynomial_example(self):
        cfg = cfg_from("alpha*x1*x2", "alpha*x1^2", "0")
        A = [ex.simplify(a) for a in vector_potential(cfg)]
        assert A[0] == ex.ZERO
        assert is_zero(ex.add(A[1], ex.mul(ex.Const(2), ex.param("alpha"),
                                           ex.X1)), trials=16).zero
        assert A[2] == parse("alpha*x1*x2")

    def test_symmetric_gauge_constant_field(self):
        cfg = cfg_from("0", "-(x1^2+x2^2)/4", "0")
        A = vector_potential(cfg)
        assert is_zero_all([ex.add(A[0], ex.mul(ex.HALF, ex.X2)),
                            ex.add(A[1], ex.mul(ex.Const(Fraction(-1, 2)), ex.X1)),
                            A[2]], trials=16).zero
        B = magnetic_field(cfg)
        assert is_zero_all([B[0], B[1], ex.add(B[2], ex.MINUS_ONE)],
                           trials=16).zero

    def test_transverse_field_example(self):
        cfg = cfg_from("x2", "0", "0")
        B = magnetic_field(cfg)
        assert is_zero_all([ex.add(B[0], ex.MINUS_ONE), B[1], B[2]],
                           trials=16).zero

    def test_closed_form_matches_curl(self):
        cfg = cfg_from("F(x1,x2)*x3", "G(rt,x3)", "0",
                       ctx=ParseContext(opaques={"F": 2, "G": 2}))
        B1 = magnetic_field(cfg)
        B2 = magnetic_field_closed_form(cfg)
        assert is_zero_all([ex.add(a, ex.mul(ex.MINUS_ONE, b))
                            for a, b in zip(B1, B2)], trials=16).zero

    def test_sign_convention_question(self):
        # closed form equals the curl; the flipped transverse-sign variant
        # does not.  This pins which published formula the artifact uses.
        cfg = cfg_from("F(x1,x2)", "G(x1,x2)", "0",
                       ctx=ParseContext(opaques={"F": 2, "G": 2}))
        B = magnetic_field(cfg)
        flipped = (ex.mul(ex.MINUS_ONE, ex.differentiate(cfg.F, "x2")),
                   ex.differentiate(cfg.F, "x1"), B[2])
        agree = is_zero_all([ex.add(a, ex.mul(ex.MINUS_ONE, b))
                             for a, b in zip(B, flipped)], trials=16)
        assert not agree.zero

    def test_divergence_free(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "0")
        assert is_zero(divergence(magnetic_field(cfg)), trials=24).zero

    def test_time_independence_guard(self):
        cfg = cfg_from("0", "0", "R(x1,x2)")
        assert all(isinstance(d, ex.Const) and d.is_zero()
                   for d in cfg.time_independence_defects())


class TestHamiltonians:
    def test_free_is_half_laplacian(self):
        H = build_sp_hamiltonian(PotentialConfig(e=0, g=0, nu=0, mu=0, q=0))
        expect = sum((DiffOp.partial(v, 2) for v in ex.SPATIAL),
                     DiffOp.zero()).scale(ex.Const(Fraction(-1, 2)))
        assert not (H - expect).terms

    def test_hermiticity(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3)", e=1)
        for variant in ("sp", "qrse-h3", "qrse-h3a"):
            H = build_hamiltonian(cfg, variant)
            assert is_zero_op(hermiticity_defect(H), trials=20,
                              cross_check=False).zero, variant

    def test_qrse_reduces_to_sp(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3)", e=1, nu=0, mu=0)
        Hsp = build_hamiltonian(cfg, "sp")
        for variant in ("qrse-h3", "qrse-h3a"):
            assert not (build_hamiltonian(cfg, variant) - Hsp).terms

    def test_pauli_term_of_constant_field(self):
        cfg = cfg_from("0", "-(x1^2+x2^2)/4", "0", e=1)
        H = build_hamiltonian(cfg, "sp")
        coeff = H.terms.get(((0, 0, 0, 0), False))
        assert coeff is not None
        assert is_zero(ex.add(coeff.c[3], ex.mul(ex.MINUS_ONE, ex.param("g"))),
                       trials=16).zero

    def test_darwin_term(self):
        cfg = cfg_from("0", "0", "R(rt,x3)", e=1, nu=0)
        H3 = build_hamiltonian(cfg, "qrse-h3")
        Hsp = build_hamiltonian(cfg, "sp")
        diff = H3 - Hsp
        lap = ex.add(*[ex.diff_n(cfg.A0, v, 2) for v in ex.SPATIAL])
        expect = DiffOp.from_scalar(ex.mul(ex.param("mu"), lap))
        assert is_zero_op(diff - expect, trials=16, cross_check=False).zero


class TestGauge:
    def test_constant_phase_identity(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3)", e=1)
        H = build_hamiltonian(cfg, "sp")
        assert not (gauge_transform(H, ex.param("c1")) - H).terms

    def test_linear_phase_shifts_a3(self):
        # conjugation by exp(-i phi) ... exp(i phi) with phi = e*k*x3 shifts
        # A3 by -k (the conjugation oracle fixes the sign)
        cfg = cfg_from("F(x1,x2)", "G(x1,x2)", "0", e=1)
        H = build_hamiltonian(cfg, "sp")
        k = ex.param("c2")
        Hp = gauge_transform(H, ex.mul(k, ex.X3))
        cfg2 = PotentialConfig(
            Avec=tuple(ex.add(a, ex.mul(ex.MINUS_ONE, k) if v == "x3" else ex.ZERO)
                       for a, v in zip(vector_potential(cfg), ex.SPATIAL)),
            A0=cfg.A0, e=1, nu=0, mu=0, q=0)
        H2 = build_hamiltonian(cfg2, "sp")
        assert is_zero_op(Hp - H2, trials=20, cross_check=False).zero

    def test_general_rebuild_equivalence(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3)", e=1)
        phase = parse("c3*x1*x2")
        H = build_hamiltonian(cfg, "sp")
        Hp = gauge_transform(H, phase)
        shifted = tuple(ex.add(a, ex.mul(ex.MINUS_ONE, ex.differentiate(phase, v)))
                        for a, v in zip(vector_potential(cfg), ex.SPATIAL))
        H2 = build_hamiltonian(PotentialConfig(Avec=shifted, A0=cfg.A0, e=1,
                                               nu=0, mu=0, q=0), "sp")
        assert is_zero_op(Hp - H2, trials=20, cross_check=False).zero

    def test_pauli_term_shift_under_spin_orbit(self):
        # crossed constant fields: a linear phase cancels the Pauli term
        c = ex.param("c1")
        e1 = ex.param("c2")
        cfg = PotentialConfig(F=ex.ZERO,
                              G=ex.mul(ex.Const(Fraction(-1, 4)), c,
                                       ex.add(ex.mul(ex.X1, ex.X1),
                                              ex.mul(ex.X2, ex.X2))),
                              A0=ex.mul(e1, ex.X1), e=1)
        H = build_hamiltonian(cfg, "qrse-h3")
        # phase = -(c g / (nu e1)) x2 cancels g sigma3 c
        phase = ex.mul(ex.MINUS_ONE, c, ex.param("g"),
                       ex.powr(ex.param("nu"), -1), ex.powr(e1, -1), ex.X2)
        Hp = gauge_transform(H, phase)
        zero_coeff = Hp.terms.get(((0, 0, 0, 0), False))
        assert zero_coeff is not None
        assert is_zero_all(list(zero_coeff.c[1:]), trials=24).zero

    def test_time_dependent_phase_rejected(self):
        H = build_hamiltonian(PotentialConfig(), "sp")
        with pytest.raises(ValueError):
            gauge_transform(H, ex.T)


class TestVerifier:
    def test_free_particle_sanity(self):
        free = PotentialConfig(e=0, g=0, nu=0, mu=0, q=0)
        for name in ("P1", "P2", "P3", "G1", "G2", "G3", "L1", "L2", "L3",
                     "D", "Aconf"):
            op = make_generator(name)
            cand = SymmetryCandidate.from_operator(op, name)
            rep = verify_candidate(cand, free, "sp", trials=16)
            assert rep.is_symmetry, name
            assert rep.routes_agree

    def test_alpha_is_derived(self):
        D = SymmetryCandidate.from_operator(make_generator("D"), "D")
        assert D.alpha == ex.Const(0, -2)
        A = SymmetryCandidate.from_operator(make_generator("Aconf"), "A")
        assert is_zero(ex.add(A.alpha, ex.differentiate(A.xi0, "t")),
                       trials=16).zero

    def test_row2_rotation(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3) + kappa*phi", e=1)
        cand = SymmetryCandidate.from_operator(
            parse_operator("J3 + kappa*t"), "J3+kt")
        rep = verify_candidate(cand, cfg, "sp", trials=24)
        assert rep.is_symmetry and rep.routes_agree

    def test_perturbed_spin_weight_fails_transport(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3) + kappa*phi", e=1)
        good = SymmetryCandidate.from_operator(
            parse_operator("J3 + kappa*t"), "good")
        bad = SymmetryCandidate(good.xi0, good.xi, good.eta0,
                                (ex.ZERO, ex.ZERO, ex.Const(0, -1)), "bad")
        eqs = determining_sp(bad, cfg)
        ok = {name: is_zero_all(group, trials=20).zero
              for name, group in eqs.items()}
        assert not ok["field_transport"]
        assert ok["velocity"]

    def test_published_transport_orientation_fails(self):
        # the derived cross-product orientation admits the rotating matrix
        # symmetry; the printed orientation does not
        cfg = cfg_from("0", "-(x1^2+x2^2)/4", "0", e=1)
        co = ex.func("cos", ex.mul(ex.Const(2), ex.param("g"), ex.T))
        si = ex.func("sin", ex.mul(ex.Const(2), ex.param("g"), ex.T))
        mi = ex.Const(0, -1)
        cand = SymmetryCandidate(0, (0, 0, 0), 0,
                                 (ex.mul(mi, co), ex.mul(mi, si),
                                  ex.mul(mi, ex.param("c4"))), "Q")
        derived = determining_sp(cand, cfg, convention="derived")
        printed = determining_sp(cand, cfg, convention="printed")
        assert is_zero_all(derived["field_transport"], trials=20).zero
        assert not is_zero_all(printed["field_transport"], trials=20).zero

    def test_half_gradient_convention_fails(self):
        # the matrix integral of motion of the log potential separates the
        # two published gradient normalizations: the full-gradient system
        # accepts it, the halved variant does not
        from spinsym.verify import determining_qrse
        mi = ex.Const(0, -1)
        A0 = ex.mul(ex.HALF, ex.powr(ex.param("nu"), -1), ex.func("ln", ex.R))
        cfg = PotentialConfig(A0=A0, e=1, q=0)
        qhat = SymmetryCandidate(
            0, (0, 0, 0), 0,
            tuple(ex.mul(mi, x, ex.powr(ex.R, -1))
                  for x in (ex.X1, ex.X2, ex.X3)), "Qhat")
        full = determining_qrse(qhat, cfg, "qrse-h3", convention="derived")
        half = determining_qrse(qhat, cfg, "qrse-h3", convention="printed_half")
        assert is_zero_all([e for g in full.values() for e in g],
                           trials=20).zero
        assert not is_zero_all(half["spin_gradient"], trials=20).zero

    def test_negative_control_random_perturbation(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3)", e=1)
        base = SymmetryCandidate.from_operator(parse_operator("J3"), "J3")
        pert = SymmetryCandidate(
            base.xi0, base.xi,
            ex.add(base.eta0, ex.mul(ex.Const(Fraction(1, 50)), ex.X1)),
            base.eta, "J3+eps")
        rep = verify_candidate(pert, cfg, "sp", trials=24)
        assert not rep.is_symmetry
        assert rep.witness is not None

    def test_route_equivalence_on_qrse(self):
        cfg = cfg_from("F(rt,x3)", "G(rt,x3)", "R(rt,x3) + kappa*phi", e=1)
        cand = SymmetryCandidate.from_operator(
            parse_operator("J3 + kappa*t"), "J3+kt")
        for variant in ("qrse-h3", "qrse-h3a"):
            rep = verify_candidate(cand, cfg, variant, trials=24)
            assert rep.is_symmetry and rep.routes_agree, variant

    def test_incompatible_dilatation_under_spin_orbit(self):
        # dilatation-type rows lose their symmetry once the spin-orbit
        # coupling is on; the residual route and the determining route agree
        ctx = ParseContext(opaques={"Ft": 1, "G": 1, "R": 1})
        cfg = PotentialConfig(F=parse("Ft(phi)/rt", ctx),
                              G=parse("G(phi)", ctx),
                              A0=parse("R(phi)/rt^2", ctx), e=1)
        cand = SymmetryCandidate.from_operator(make_generator("D"), "D")
        rep = verify_candidate(cand, cfg, "qrse-h3", trials=24)
        assert not rep.is_symmetry
        assert rep.routes_agree

    def test_candidate_operator_roundtrip(self):
        for name in ("J3", "D", "Aconf", "B3p", "G2"):
            op = make_generator(name)
            cand = SymmetryCandidate.from_operator(op, name)
            assert not (cand.operator() - op).terms, name

    def test_non_ansatz_rejected(self):
        with pytest.raises(ValueError):
            SymmetryCandidate.from_operator(make_generator("Qtilde"))
