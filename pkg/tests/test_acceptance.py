"""Acceptance criteria 1-10 at the stated tolerances.

Identities run on the N = 8 window, spectra and integrals on N = 12.  Each
test records a verdict that is printed in the terminal summary.
"""
import time

import numpy as np
import pytest

from nctorus.algebra import TorusElement
from nctorus.config import DEFAULT_THETA as THETA
from nctorus.connections import (
    Connection,
    OneForm,
    compatibility_scan,
    compatible_dirac,
    hermitian_check,
    horizontal_part,
    is_strong_connection,
    lifted_dirac,
    sample_connection,
    twisted_dirac,
    twisted_dirac_fibre,
)
from nctorus.dirac import (
    FluctuationA,
    build_dirac,
    build_fluctuated,
    decompose,
    fibre_block,
    interior,
    parity_residuals,
    spectral_triple_report,
)
from nctorus.hopf import canonical_map, hopf_galois_witness, injectivity_check
from nctorus.representation import SpinStructure, TruncatedWindow, commutator, delta_operator, represent
from nctorus.spectral import fibre_length_check, spectrum_relation_check

W8 = TruncatedWindow(8, SpinStructure(), THETA)
W12 = TruncatedWindow(12, SpinStructure(), THETA)
ONE = TorusElement.one(THETA)
ZERO = TorusElement.zero(THETA)


def herm(j, c=0.5):
    return (TorusElement.generator(THETA, j) + TorusElement.generator(THETA, j, -1)) * c


def connections(n, start=0):
    return [sample_connection(THETA, seed, degree=1 + seed % 2) for seed in range(start, start + n)]


def interior_res(T, w=W8):
    sub = interior(w, T.margin)
    assert not sub.empty
    return sub.residual(T)


@pytest.fixture(scope="module")
def flat8():
    return decompose(build_dirac(W8))


def test_criterion_01_axiom_suite(criterion):
    t0 = time.perf_counter()
    flat = spectral_triple_report(W8)
    elapsed = time.perf_counter() - t0
    fluct = spectral_triple_report(W8, FluctuationA(herm(1), herm(2, 0.25), ZERO), seed=1)
    rows = flat.rows + fluct.rows
    worst = max(r.residual for r in rows)
    ok = flat.all_passed and fluct.all_passed and worst < 1e-12 and elapsed < 60
    criterion(1, ok, f"{len(rows)} axiom residuals, max {worst:.2e}; A=0 suite {elapsed:.1f}s")
    assert ok, [r.check for r in flat.failures() + fluct.failures()]


def test_criterion_02_decomposition(criterion):
    worst_parity = 0.0
    z_base = 0.0
    for A in (None, FluctuationA(herm(1), herm(2, 0.25), ZERO)):
        d = decompose(build_dirac(W8) if A is None else build_fluctuated(A, W8))
        worst_parity = max(worst_parity, max(parity_residuals(d).values()))
        z_base = max(z_base, d.Z.max_abs())
    d = decompose(build_fluctuated(FluctuationA(ZERO, ZERO, herm(1, 1.0)), W8))
    witness = max(interior(W8, 2).residual(commutator(d.Z, represent(TorusElement.generator(THETA, j), W8)))
                  for j in (1, 2))
    ok = worst_parity < 1e-14 and z_base == 0.0 and d.Z.max_abs() > 0.1 and witness > 0.1
    criterion(2, ok, f"reassembly/parity {worst_parity:.1e}; Z=0 for A3=0; [Z, U] witness {witness:.3f} for A3!=0")
    assert ok


def test_criterion_03_fibre_spectrum_relation(criterion):
    worst = 0.0
    d = decompose(build_dirac(W12))
    for ell in (1.0, 2.0):
        for k in range(6):
            worst = max(worst, spectrum_relation_check(d, None, k, ell))
    ok = worst < 1e-9
    criterion(3, ok, f"k=0..5, ell in {{1,2}} on N=12: max mismatch {worst:.2e}")
    assert ok


def test_criterion_04_connection_classification(criterion):
    strong = [is_strong_connection(c.omega, degree=3) for c in connections(10)]
    controls = {
        "sigma1 U3": OneForm(TorusElement.monomial(THETA, 0, 0, 1), ZERO, ONE),
        "sigma2 U1 U3^-1": OneForm(ZERO, TorusElement.monomial(THETA, 1, 0, -1), ONE),
        "c3 = 2": OneForm(herm(1), ZERO, ONE * 2),
        "c3 = 1 + U1": OneForm(ZERO, ZERO, ONE + TorusElement.generator(THETA, 1)),
    }
    verdicts = {name: is_strong_connection(om, degree=2) for name, om in controls.items()}
    n_strong = sum(r.is_strong_connection for r in strong)
    n_rejected = sum(not (r.invariant and r.vertical) for r in verdicts.values())
    ok = n_strong == 10 and n_rejected == len(controls)
    criterion(4, ok, f"{n_strong}/10 sampled connections strong; {n_rejected}/{len(controls)} controls rejected")
    assert ok


def test_criterion_05_two_path_twisted_dirac(criterion, flat8):
    worst = 0.0
    for conn in connections(5, start=20):
        Dw = twisted_dirac(conn, flat8)
        pos = W8.fibre_interior_positions(conn.omega.degree())
        for k in range(-W8.N, W8.N + 1):
            diff = twisted_dirac_fibre(conn, flat8, k) - fibre_block(Dw, k)
            worst = max(worst, float(np.abs(diff[:, pos]).max()))
    ok = worst < 1e-12
    criterion(5, ok, f"5 connections, all fibres of N=8: max entry difference {worst:.2e}")
    assert ok


def test_criterion_06_compatibility_scan(criterion, flat8):
    scan = compatibility_scan(W8)
    worst = 0.0
    for conn in connections(5, start=40):
        diff = horizontal_part(compatible_dirac(conn, W8), flat8.gamma) - twisted_dirac(conn, flat8)
        worst = max(worst, interior_res(diff))
    ok = len(scan.rows) == 50 and scan.unique_zero_at_origin and worst < 1e-12
    nonzero = min(row[3] for row in scan.rows if (row[1], row[2]) != (0.0, 0.0))
    criterion(6, ok, f"scan zero only at origin (next smallest {nonzero:.2f}); horizontal part mismatch {worst:.2e}")
    assert ok


def test_criterion_07_squared_lift(criterion, flat8):
    worst = 0.0
    d3 = delta_operator(3, W8)
    for conn in connections(5, start=60):
        Dw = twisted_dirac(conn, flat8)
        lift = lifted_dirac(conn, flat8)
        worst = max(worst, interior_res(lift @ lift - (Dw @ Dw + d3 @ d3)))
    ok = worst < 1e-10
    criterion(7, ok, f"5 connections: max interior residual {worst:.2e}")
    assert ok


@pytest.fixture(scope="module")
def integrals():
    flat = fibre_length_check(None, THETA, N=12)
    fluct = [
        fibre_length_check(A, THETA, N=12, reference=flat.left)
        for A in (FluctuationA(herm(1), herm(2, 0.25), ZERO), FluctuationA(herm(2, 0.8), herm(1, -0.3), ZERO))
    ]
    return flat, fluct


def test_criterion_08_noncommutative_integrals(criterion, integrals):
    flat, fluct = integrals
    runs = [flat] + fluct
    ortho = max(v for r in runs for k, v in r.orthogonality.items() if not k.startswith("control"))
    control = min(r.orthogonality["control: sigma1 sigma1"] for r in runs)
    oracle_err = max(max(r.left["1"].oracle_relative_error(), r.right["1"].oracle_relative_error()) for r in runs)
    agree = all(est.estimators_agree for r in runs for est in (r.left["1"], r.right["1"]))
    # within the combined uncertainty, with the same rounding floor as the trace-zero check
    indep = all(abs(r.left[b].value - flat.left[b].value) <= r.left[b].uncertainty + flat.left[b].uncertainty + 1e-12
                for r in fluct for b in r.left)
    zeros = max(abs(r.left[b].value) + abs(r.right[b].value) for r in runs for b in r.left if b != "1")
    rows_ok = all(run.report.all_passed for run in runs)
    ok = rows_ok and ortho < 1e-12 and control > 1.0 and oracle_err < 0.05 and agree and indep and zeros < 1e-12
    criterion(8, ok, f"ortho {ortho:.1e} (control {control:.1f}); oracle err {oracle_err:.2%}; "
                     f"A-independent {indep}; trace-zero {zeros:.1e}; "
                     f"ratio {flat.ratio:.4f} +- {flat.ratio_uncertainty:.4f} (oracle {flat.oracle_ratio:.4f})")
    assert ok, [r.check for run in runs for r in run.report.failures()]


def test_criterion_09_hopf_galois(criterion):
    worst = 0.0
    for n in range(-5, 6):
        img = canonical_map(*hopf_galois_witness(n, THETA))
        assert img.keys() == {n}
        worst = max(worst, (img[n] - ONE).max_abs())
    inj = injectivity_check(THETA, degree=3)
    ok = worst < 1e-12 and inj["injective"]
    criterion(9, ok, f"witness |n|<=5 exact; rank {inj['basis_rank']}/{inj['basis_size']} on degree-3 truncation, "
                     f"spanning-set rank {inj['image_rank']}/{inj['reduced_dimension']}")
    assert ok


def test_criterion_10_hermitian_connection(criterion):
    samples = [
        (TorusElement.monomial(THETA, 1, 0, 1), TorusElement.monomial(THETA, 0, 1, 1)),
        (TorusElement.monomial(THETA, 0, 0, -1), TorusElement.monomial(THETA, -1, 1, -1, 0.5 - 1j)),
        (TorusElement.monomial(THETA, 1, 1, 2), TorusElement.monomial(THETA, 0, -1, 2)),
    ]
    selfadj = [hermitian_check(c, W8, samples) for c in connections(3, start=80)]
    control = hermitian_check(Connection(TorusElement.monomial(THETA, 1, 0, 0, 1j), ZERO), W8, samples)
    worst = max(r.residual for r in selfadj)
    ok = worst < 1e-12 and control.closed_form_mismatch < 1e-12 and control.residual > 0.1
    criterion(10, ok, f"selfadjoint residual {worst:.1e}; control residual {control.residual:.2f} "
                      f"matches closed form to {control.closed_form_mismatch:.1e}")
    assert ok
