"""Acceptance suite.

Each criterion prints one pass/fail line (run with -s to see them inline;
the summary also lands in the captured output on failure).  Criteria:

 1. Full classification under the Pauli-coupled Hamiltonian at 64 trials,
    tol 1e-9, fixed seed, within 5 minutes; orbital-only replacements of
    the total angular momentum fail wherever the magnetic coupling is
    active.
 2. Constant-field rotating matrix symmetry and its frequency perturbation.
 3. Spin-orbit positive/negative matrix across the quasirelativistic
    variants, including the documented deviations from the published
    summary claims.
 4. The superintegrable log-potential system, symbolically.
 5. Route equivalence: determining-system verdicts equal residual verdicts
    across the catalog.
 6. Numeric conservation cross-checks on a 48^3 grid.
 7. Grid/symbolic oracle agreement at second order.
 8. Byte-identical reports under a fixed seed.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from spinsym import expr as ex
from spinsym.catalog import (VARIANTS, load_catalog, make_generator,
                             parse_operator, verify_all, verify_entry,
                             verify_superintegrable)
from spinsym.diffop import DiffOp, is_zero_op
from spinsym.model import PotentialConfig, build_hamiltonian
from spinsym.numlab import (GridSpec, conservation_drift, convergence_order,
                            discretize_apply, eval_grid, gaussian_packet)
from spinsym.parser import ParseContext, parse
from spinsym.report import report_to_json
from spinsym.verify import SymmetryCandidate, verify_candidate

SEED = 7
ACCEPT_TRIALS = 64
QRSE_TRIALS = 48


def _line(num, ok, detail):
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def entries():
    return load_catalog()


@pytest.fixture(scope="module")
def sweep(entries):
    """One full verification sweep per variant, shared by criteria 1/3/5."""
    out = {}
    out["sp"] = verify_all("sp", entries=entries, trials=ACCEPT_TRIALS,
                           seed=SEED)
    for variant in ("qrse-h3", "qrse-h3a"):
        out[variant] = verify_all(variant, entries=entries,
                                  trials=QRSE_TRIALS, seed=SEED)
    return out


# rows whose magnetic field is zero, constant, or purely axial: there the
# matrix part decouples and the orbital generators work on their own
_L_EXEMPT = {"T1R4", "T1R5", "T1R8", "T1R13", "T1R14", "T2R6",
             "T3R2", "T3R6", "T3R7", "T3R15"}


class TestCriterion1:
    def test_sp_classification(self, entries, sweep):
        summary = sweep["sp"]
        ok = summary["all_matched"]
        budget_ok = summary["seconds"] <= 300.0
        # every row certifies at least one symmetry, and the only expected
        # failures at the Pauli level are the documented conditional rows
        expected_fail = set()
        per_row_pass = {}
        for row in summary["rows"]:
            if row["printed_variant"]:
                continue
            npass = 0
            for g in row["generators"]:
                if g["expected"] == "fail":
                    expected_fail.add(f"{row['entry']}:{g['generator']}")
                elif g["observed"] == "pass":
                    npass += 1
            per_row_pass[row["entry"]] = npass
        documented = {"T2R7:Aconf", "T2R8:Aconf", "T3R3:G2", "T3R8:G2",
                      "T4R12:Qhat", "T4R13:Qhat"}
        _line(1, ok and budget_ok,
              f"52 rows, {summary['generator_count']} generator checks "
              f"matched={summary['matched_count']} in "
              f"{summary['seconds']:.0f}s")
        assert ok, "catalog verdicts deviate from the verified matrix"
        assert budget_ok, f"runtime {summary['seconds']:.0f}s exceeds 5 min"
        assert all(n >= 1 for n in per_row_pass.values())
        assert expected_fail == documented

    def test_orbital_replacement_fails_where_coupling_active(self, entries):
        failures_checked = 0
        wrong = []
        for e in entries:
            if e.key in _L_EXEMPT or e.table == 4:
                continue
            ctx = e.parse_context()
            cfg = e.config()
            for spec in e.generators:
                if "J" not in spec.op_text or spec.expected["sp"] != "pass":
                    continue
                text = spec.op_text
                for a in "123":
                    text = text.replace(f"J{a}", f"L{a}")
                op = parse_operator(text, ctx)
                cand = SymmetryCandidate.from_operator(op, spec.name + "->L")
                rep = verify_candidate(cand, cfg, "sp", trials=24, seed=SEED,
                                       with_determining=False)
                failures_checked += 1
                if rep.is_symmetry:
                    wrong.append((e.key, spec.name))
        _line(1, not wrong,
              f"orbital-only replacements fail on {failures_checked} "
              f"coupled generators (exceptions: axial/constant-field rows)")
        assert failures_checked >= 8
        assert not wrong, wrong


class TestCriterion2:
    def test_rotating_matrix_symmetry(self):
        cfg = PotentialConfig(
            F=ex.ZERO,
            G=parse("-(x1^2+x2^2)/4"), A0=ex.ZERO, e=1, nu=0, mu=0, q=0)
        g = ex.param("g")
        mi = ex.Const(0, -1)
        co = ex.func("cos", ex.mul(ex.Const(2), g, ex.T))
        si = ex.func("sin", ex.mul(ex.Const(2), g, ex.T))
        Q = SymmetryCandidate(0, (0, 0, 0), 0,
                              (ex.mul(mi, co), ex.mul(mi, si),
                               ex.mul(mi, ex.param("c4"))), "Q")
        Qt = SymmetryCandidate(0, (0, 0, 0), 0, (0, 0, mi), "Qt")
        rq = verify_candidate(Q, cfg, "sp", trials=ACCEPT_TRIALS, seed=SEED)
        rqt = verify_candidate(Qt, cfg, "sp", trials=ACCEPT_TRIALS, seed=SEED)
        co2 = ex.func("cos", ex.mul(ex.Const(Fraction(201, 100)), g, ex.T))
        si2 = ex.func("sin", ex.mul(ex.Const(Fraction(201, 100)), g, ex.T))
        Qp = SymmetryCandidate(0, (0, 0, 0), 0,
                               (ex.mul(mi, co2), ex.mul(mi, si2),
                                ex.mul(mi, ex.param("c4"))), "Qpert")
        rp = verify_candidate(Qp, cfg, "sp", trials=ACCEPT_TRIALS, seed=SEED,
                              with_determining=False)
        ok = (rq.is_symmetry and rqt.is_symmetry and not rp.is_symmetry
              and rp.witness is not None)
        _line(2, ok, "rotating matrix symmetry passes; frequency 2.01g "
                     "fails with witness")
        assert rq.is_symmetry and rq.routes_agree
        assert rqt.is_symmetry
        assert not rp.is_symmetry
        assert rp.witness is not None


class TestCriterion3:
    def test_qrse_positive_negative_matrix(self, sweep):
        ok_h3 = sweep["qrse-h3"]["all_matched"]
        ok_h3a = sweep["qrse-h3a"]["all_matched"]

        # positive side: the translation/rotation/helical families of the
        # linear-in-t table survive the charged spin-orbit variant
        survivors = {"T1R1:P3", "T1R2:J3+kt", "T1R3:J3+P3+kt", "T1R4:P3",
                     "T1R4:J3+kt", "T1R5:P3", "T1R5:J3+kt", "T1R6:P3",
                     "T1R7:P1", "T1R7:P2", "T1R8:J3", "T1R8:P3", "T1R9:P1",
                     "T1R9:P2", "T1R10:J3", "T1R12:J3+P3+kt", "T1R13:J3",
                     "T1R14:P1+ax2"}
        got = {}
        for row in sweep["qrse-h3"]["rows"]:
            if row["printed_variant"]:
                continue
            for g in row["generators"]:
                got[f"{row['entry']}:{g['generator']}"] = g["observed"]
        missing = {k for k in survivors if got.get(k) != "pass"}

        # negative side: every dilatation/conformal/exponential generator of
        # tables 2 and 3 is incompatible with the charged spin-orbit variant
        incompat = []
        for row in sweep["qrse-h3"]["rows"]:
            if row["printed_variant"] or not (row["entry"].startswith("T2") or
                                              row["entry"].startswith("T3")):
                continue
            for g in row["generators"]:
                name = g["generator"]
                if any(name.startswith(p) for p in
                       ("D", "Aconf", "A+", "B1", "B2", "B3")):
                    incompat.append((f"{row['entry']}:{name}",
                                     g["observed"]))
        bad_neg = [k for k, v in incompat if v != "fail"]

        # documented deviations from the published blanket claims
        h3_deviation_rows = {"T1R5:G3", "T1R6:G3", "T1R8:G3", "T1R9:G2",
                             "T1R10:J1-mono", "T1R10:J2-mono",
                             "T1R11:P1+ax2", "T1R11:P2-ax1",
                             "T1R12:P1+ax2", "T1R12:P2-ax1",
                             "T1R13:P1+ax2", "T1R13:P2-ax1",
                             "T1R13:Q", "T1R13:Qt"}
        observed_t1_fails = {k for k, v in got.items()
                             if k.startswith("T1") and v == "fail"}

        ok = (ok_h3 and ok_h3a and not missing and not bad_neg
              and observed_t1_fails == h3_deviation_rows)
        _line(3, ok,
              f"h3 matrix matched={ok_h3}, h3a matched={ok_h3a}, "
              f"{len(incompat)} dilatation/exponential generators "
              f"incompatible with spin-orbit, "
              f"{len(h3_deviation_rows)} documented deviations")
        assert ok_h3 and ok_h3a
        assert not missing, missing
        assert not bad_neg, bad_neg
        assert observed_t1_fails == h3_deviation_rows, (
            observed_t1_fails ^ h3_deviation_rows)

    def test_h3a_trivial_column_rows_keep_everything(self, sweep):
        for row in sweep["qrse-h3a"]["rows"]:
            if row["printed_variant"]:
                continue
            if row["entry"] in ("T1R14", "T3R15", "T3R16", "T3R17", "T4R7",
                                "T4R8", "T4R9", "T4R10", "T4R11"):
                assert all(g["observed"] == "pass"
                           for g in row["generators"]), row["entry"]


class TestCriterion4:
    def test_superintegrable_suite(self):
        res = verify_superintegrable(nu=1, g=1, vecpot="zero",
                                     trials=QRSE_TRIALS, seed=SEED)
        slow = {k: v["seconds"] for k, v in res["checks"].items()
                if v["seconds"] > 10.0}
        expected = {"[Qhat,H]", "[J1,H]", "[J2,H]", "[J3,H]", "[Qtilde,H]",
                    "[Qpar,H]", "{Qhat,Qtilde}=0", "Qhat^2=1",
                    "Qtilde^2=J^2+1/4", "[Qpar,Qhat]=0"}
        res_axis = verify_superintegrable(nu=Fraction(1, 2), g=1,
                                          vecpot="axis", trials=QRSE_TRIALS,
                                          seed=SEED)
        ok = (res["all_expected"] and res_axis["all_expected"] and not slow)
        _line(4, ok, "log-potential superalgebra verified; axis vector "
                     "potential keeps only the matrix invariant and J3")
        assert expected <= set(res["checks"])
        assert res["all_expected"], res["checks"]
        assert not slow, f"checks over 10s: {slow}"
        assert res_axis["checks"]["[Qhat,H]"]["zero"]
        assert res_axis["checks"]["[J3,H]"]["zero"]
        assert not res_axis["checks"]["[J1,H]"]["zero"]
        assert not res_axis["checks"]["[J2,H]"]["zero"]


class TestCriterion5:
    def test_route_equivalence(self, sweep):
        disagreements = []
        checked = 0
        for variant, summary in sweep.items():
            for row in summary["rows"]:
                for g in row["generators"]:
                    agree = g["report"].routes_agree
                    if agree is None:
                        continue
                    checked += 1
                    if not agree:
                        disagreements.append(
                            (row["entry"], g["generator"], variant))
        _line(5, not disagreements,
              f"determining-system and residual verdicts agree on "
              f"{checked} candidate checks, zero discrepancies")
        assert checked > 300
        assert not disagreements, disagreements


class TestCriterion6:
    @pytest.fixture(scope="class")
    def grid(self):
        return GridSpec(n=48, extent=8.0, stencil_order=4)

    def test_j3_conservation(self, grid):
        ctx = ParseContext()
        cfg = PotentialConfig(
            F=parse("3/10*exp(-(rt^2+x3^2)/8)", ctx),
            G=parse("1/2*exp(-(rt^2+x3^2)/10)", ctx),
            A0=parse("1/5*exp(-(rt^2+(x3-1)^2)/9)", ctx),
            e=1, g=Fraction(1, 2), nu=0, mu=0, q=0)
        H = build_hamiltonian(cfg, "sp")
        st = gaussian_packet(grid, width=1.6, spin=(1.0, 0.0))
        t0 = time.time()
        rep = conservation_drift(make_generator("J3"), st, H, dt=0.005,
                                 steps=200, sample_every=20)
        t_good = time.time() - t0
        rep_broken = conservation_drift(make_generator("L3"), st, H,
                                        dt=0.005, steps=200, sample_every=20)
        ratio = rep_broken["drift"] / max(rep["drift"], 1e-30)
        ok = (rep["drift"] <= 1e-4 and ratio >= 10 and t_good <= 300)
        _line(6, ok, f"J3 drift {rep['drift']:.2e} (<=1e-4), broken control "
                     f"{ratio:.0f}x larger, run {t_good:.0f}s")
        assert rep["drift"] <= 1e-4
        assert not rep["boundary_contact"]
        assert ratio >= 10
        assert t_good <= 300

    def test_qhat_conservation(self, grid):
        s = 1 / math.sqrt(2)
        st = gaussian_packet(grid, center=(3.2, 0.0, 1.0), width=1.0,
                             k=(0.0, 0.3, 0.0), spin=(s, s))
        A0 = ex.mul(ex.HALF, ex.func("ln", ex.R))
        H = build_hamiltonian(
            PotentialConfig(A0=A0, e=1, g=1, nu=1, mu=Fraction(1, 4), q=0),
            "qrse-h3")
        t0 = time.time()
        rep = conservation_drift(make_generator("Qhat"), st, H, dt=0.0025,
                                 steps=200, sample_every=20)
        t_good = time.time() - t0
        Hb = build_hamiltonian(
            PotentialConfig(A0=ex.func("ln", ex.R), e=1, g=1, nu=1,
                            mu=Fraction(1, 4), q=0), "qrse-h3")
        rep_broken = conservation_drift(make_generator("Qhat"), st, Hb,
                                        dt=0.0025, steps=200,
                                        sample_every=20)
        ratio = rep_broken["drift"] / max(rep["drift"], 1e-30)
        ok = (rep["drift"] <= 1e-4 and ratio >= 10 and t_good <= 300)
        _line(6, ok, f"Qhat drift {rep['drift']:.2e} (<=1e-4), broken "
                     f"control {ratio:.0f}x larger, run {t_good:.0f}s")
        assert rep["drift"] <= 1e-4
        assert ratio >= 10
        assert t_good <= 300


class TestCriterion7:
    def test_convergence_order_on_three_fields(self):
        ctx = ParseContext()
        op = (build_hamiltonian(PotentialConfig(e=0, g=0, nu=0, mu=0, q=0),
                                "sp") +
              DiffOp.from_scalar(parse("x1*x2/10", ctx)))
        fields = [
            parse("exp(-(x1^2+x2^2+x3^2)/4)", ctx),
            parse("x1*exp(-(x1^2+x2^2+x3^2)/3)", ctx),
            parse("sin(x2)*exp(-((x1-1)^2+x2^2+x3^2)/3)", ctx),
        ]
        orders = []
        for psi in fields:
            up, dn = op.apply((psi, ex.ZERO))

            def build(spec, psi=psi):
                from spinsym.numlab import GridState
                arr = np.stack([eval_grid(psi, spec),
                                np.zeros((spec.n,) * 3, dtype=complex)])
                return GridState(spec, arr)

            def exact(spec, up=up, dn=dn):
                return np.stack([eval_grid(up, spec), eval_grid(dn, spec)])

            res = convergence_order(op, build, exact, [32, 48, 64],
                                    stencil_order=2)
            orders.append(res["orders"][-1])
        ok = all(o >= 1.9 for o in orders)
        _line(7, ok, "observed orders " +
              ", ".join(f"{o:.2f}" for o in orders) + " (>= 1.9)")
        assert ok, orders


class TestCriterion8:
    def test_byte_identical_reports(self, entries):
        r1 = verify_all("sp", entries=entries, trials=16, seed=SEED,
                        include_printed=False)
        r2 = verify_all("sp", entries=entries, trials=16, seed=SEED,
                        include_printed=False)
        b1, b2 = report_to_json(r1), report_to_json(r2)
        ok = b1 == b2
        _line(8, ok, f"two identically seeded runs produce identical "
                     f"{len(b1)}-byte reports")
        assert ok
