import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nctorus.algebra import ThetaMatrix, TorusElement
from nctorus.connections import Connection, OneForm
from nctorus.dirac import FluctuationA, NotInvariantError, build_dirac, build_fluctuated, decompose, grading
from nctorus.representation import SpinStructure, TruncatedWindow, represent
from nctorus.spectral import (
    NotHermitianError,
    cutoff_tail_integral,
    fibre_spectrum,
    log_richardson,
    nc_integral,
    orthogonality_check,
    orthogonality_control,
    sigma_richardson,
    smooth_cutoff,
    spectrum,
    spectrum_relation_check,
    weighted_spectrum,
    weyl_counts,
    zeta_fit,
)

from oracles import SPHERE_AREA, dirac_fibre_spectrum

THETA = ThetaMatrix(0.6180339887498949, 0.41421356237309515, 0.7320508075688772)
W = TruncatedWindow(6, SpinStructure(), THETA)
SMALL_CUTOFFS = (2.5, 3.5, 4.5, 5.5)
ONE = TorusElement.one(THETA)
ZERO = TorusElement.zero(THETA)


def herm(j):
    return (TorusElement.generator(THETA, j) + TorusElement.generator(THETA, j, -1)) * 0.5


# eigensolves ------------------------------------------------------------------------------


def test_fibre_spectrum_rejects_non_hermitian():
    T = build_dirac(W) + represent(TorusElement.monomial(THETA, 1, 0, 0, 1j), W)
    with pytest.raises(NotHermitianError):
        fibre_spectrum(T, 0)


def test_spectrum_report_counts_and_zero_modes():
    rep = spectrum(build_dirac(W), "D", fibres=[0, 2])
    assert all(len(v) == W.fibre_dim for v in rep.fibres.values())
    assert np.sum(np.abs(rep.fibres[0]) < 1e-12) == 2
    assert np.allclose(rep.fibres[2], dirac_fibre_spectrum(6, 2))
    assert rep.solver_residual < 1e-9
    doc = rep.to_json()
    assert doc["schema"] == "nctorus.spectral-report/1" and list(doc["fibres"]) == ["0", "2"]


def test_half_integer_fibre_count():
    w = TruncatedWindow(3, SpinStructure(0.5, 0.5), THETA)
    rep = spectrum(build_dirac(w), "D", fibres=[0])
    assert len(rep.fibres[0]) == 2 * 8 * 8


@pytest.mark.parametrize("k,ell", [(0, 1.0), (3, 1.0), (2, 2.0)])
def test_spectrum_relation_unfluctuated(k, ell):
    assert spectrum_relation_check(decompose(build_dirac(W)), None, k, ell) < 1e-9


def test_spectrum_relation_fluctuated_and_twisted():
    A = FluctuationA(herm(1), herm(2) * 0.5, ZERO)
    d = decompose(build_fluctuated(A, W))
    assert spectrum_relation_check(d, None, 2) < 1e-9
    conn = Connection(herm(2) * 0.3, herm(1) * -0.7)
    d0 = decompose(build_dirac(W))
    for k in (1, 3):
        assert spectrum_relation_check(d0, conn, k) < 1e-9


def test_weyl_growth():
    counts = weyl_counts(build_dirac(W), [1.5, 2.0, 2.5, 3.0])
    assert [c for _, c, _ in counts] == sorted(c for _, c, _ in counts)
    for L, n, ball in counts[1:]:
        assert 0.6 < n / ball < 1.6


# cut-off and extrapolation ---------------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3))
def test_smooth_cutoff_is_monotone_step(s, t):
    fs, ft = float(smooth_cutoff(s)), float(smooth_cutoff(t))
    assert 0 <= fs <= 1
    if s <= 0.5:
        assert fs == 1
    if s >= 1:
        assert fs == 0
    if s <= t:
        assert fs >= ft


def test_tail_integral_limits():
    # the step at t = 1 would give 1 / sigma; the smooth step lies between 2^sigma/sigma and 1/sigma
    for sigma in (0.5, 0.25):
        val = cutoff_tail_integral(sigma)
        assert 1 / sigma < val < 2**sigma / sigma


def test_extrapolators_on_synthetic_data():
    L = np.array([5.0, 7.0, 9.0, 11.0])
    R, C = 3.7, -1.2
    assert np.allclose(log_richardson(L, R * np.log(L) + C), R)
    sig = np.array([0.5, 0.25, 0.125])
    table = sigma_richardson(R + 0.3 * sig - 0.8 * sig**2)
    assert abs(table[-1][0] - R) < 1e-12
    Z, Rf = zeta_fit(L, 2.0 - 1.5 * cutoff_tail_integral(0.25) * L**-0.25, 0.25)
    assert abs(Z - 2.0) < 1e-12 and abs(Rf - 1.5) < 1e-12


# integrals ------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def base_integrals():
    bs = {"1": ONE, "U1": TorusElement.generator(THETA, 1), "h2": herm(2)}
    return nc_integral(bs, "D0", N=12)


def test_base_integral_matches_oracle(base_integrals):
    est = base_integrals["1"]
    assert est.oracle == pytest.approx(2 * SPHERE_AREA[2], rel=1e-6)
    assert est.oracle_relative_error() < 0.05
    assert est.estimators_agree
    assert est.partial_sums == sorted(est.partial_sums)
    diffs = np.abs(np.diff(est.iterates))
    assert np.all(diffs[1:] <= diffs[:-1])


def test_trace_zero_integrands_vanish(base_integrals):
    for name in ("U1", "h2"):
        est = base_integrals[name]
        assert est.exact_zero and abs(est.value) < 1e-12


def test_estimate_serialization(base_integrals):
    est = base_integrals["1"]
    assert est.to_json()["schema"] == "nctorus.integral-estimate/1"
    lines = est.to_csv().splitlines()
    assert lines[0] == "cutoff,partial_sum,extrapolant,uncertainty" and len(lines) == 5


def test_power_must_match_operator():
    with pytest.raises(ValueError):
        nc_integral(ONE, "D", 2, N=4, cutoffs=(1.5, 2, 3, 4))
    with pytest.raises(ValueError):
        nc_integral(ONE, "Dz", N=4)
    with pytest.raises(ValueError):
        nc_integral(ONE, "D0", N=4, cutoffs=(2, 3, 4))


def test_orthogonality_examples():
    A = FluctuationA(herm(1), herm(2) * 0.5, ZERO)
    kw = dict(theta=THETA, N=6, cutoffs=SMALL_CUTOFFS)
    assert orthogonality_check(A, OneForm(ONE, ZERO, ZERO), **kw) < 1e-12
    assert orthogonality_check(A, OneForm(ZERO, herm(2), ZERO), **kw) < 1e-12
    assert orthogonality_control(A, THETA, N=6, cutoffs=SMALL_CUTOFFS) > 1.0


def test_orthogonality_preconditions():
    with pytest.raises(ValueError):
        orthogonality_check(None, OneForm(ZERO, ZERO, ONE), theta=THETA, N=4)
    with pytest.raises(NotInvariantError):
        orthogonality_check(None, OneForm(TorusElement.generator(THETA, 3), ZERO, ZERO), theta=THETA, N=4)
    with pytest.raises(ValueError):
        orthogonality_check(FluctuationA(ZERO, ZERO, herm(1)), OneForm(ONE, ZERO, ZERO), theta=THETA, N=4)


def test_twisted_relation_needs_unit_length():
    with pytest.raises(ValueError, match="ell = 1"):
        spectrum_relation_check(decompose(build_dirac(W)), Connection.trivial(THETA), 1, 2.0)


def test_graded_solve_gives_exact_zero_for_odd_observables():
    A = FluctuationA(herm(2) * 1.6, herm(1) * -0.6, ZERO)
    rho = OneForm(herm(1), ONE, ZERO)
    assert orthogonality_check(A, rho, theta=THETA, N=6, cutoffs=SMALL_CUTOFFS) == 0.0
    # the plain solve carries the same spectrum
    T = build_fluctuated(A, W)
    plain = np.sort(np.abs(np.concatenate([fibre_spectrum(T, k) for k in range(-6, 7)])))
    graded = np.sort(weighted_spectrum(T, range(-6, 7), {}, grading(W)).eigenvalues)
    assert np.abs(plain - graded).max() < 1e-9
