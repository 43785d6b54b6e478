"""Dirac operators on the truncated torus and their bundle decomposition."""
from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .algebra import (
    ThetaMatrix,
    TorusElement,
    derive,
    monomials,
    random_element,
    star,
)
from .reports import AxiomReport, CheckResult
from .representation import (
    InteriorSubspace,
    MatrixOperator,
    TruncatedWindow,
    anticommutator,
    commutator,
    conjugate_by_J,
    delta_operator,
    hermiticity_residual,
    identity,
    pauli,
    real_structure_matrix,
    represent,
    sigma_times,
    spin_kron,
    spinor_constant,
)

ALGEBRA_TOL = 1e-12
EIGEN_TOL = 1e-9


class FluctuationError(ValueError):
    """Gauge potential is not selfadjoint or not U(1)-invariant."""


class NotInvariantError(ValueError):
    """Operator does not commute with the U(1) generator."""


@dataclass(frozen=True)
class FluctuationA:
    """Selfadjoint, U(1)-invariant gauge potential ``(A1, A2, A3)``."""

    A1: TorusElement
    A2: TorusElement
    A3: TorusElement

    def __post_init__(self):
        for name in ("A1", "A2", "A3"):
            a = getattr(self, name)
            if not a.in_base():
                raise FluctuationError(f"{name} has support outside the invariant subalgebra")
            if (star(a) - a).max_abs() > ALGEBRA_TOL:
                raise FluctuationError(f"{name} is not selfadjoint")

    @classmethod
    def zero(cls, theta: ThetaMatrix) -> "FluctuationA":
        z = TorusElement.zero(theta)
        return cls(z, z, z)

    @property
    def components(self) -> tuple[TorusElement, TorusElement, TorusElement]:
        return (self.A1, self.A2, self.A3)

    @property
    def theta(self) -> ThetaMatrix:
        return self.A1.theta

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.components)

    def degree(self) -> int:
        return max(a.degree() for a in self.components)

    def to_json(self) -> dict:
        return {"A1": self.A1.to_json(), "A2": self.A2.to_json(), "A3": self.A3.to_json()}


def _zero_op(w: TruncatedWindow) -> MatrixOperator:
    return MatrixOperator(w, sp.csr_matrix((w.dim, w.dim), dtype=complex))


def build_dirac(w: TruncatedWindow) -> MatrixOperator:
    """``D = sum_j sigma^j delta_j``."""
    D = _zero_op(w)
    for j in (1, 2, 3):
        D = D + spin_kron(w, sp.diags(w.site_coords[:, j - 1].astype(complex)), pauli(j))
    return D.as_hermitian()


def build_fluctuated(A: FluctuationA, w: TruncatedWindow) -> MatrixOperator:
    """``D_A = D + sigma^i A_i + J (sigma^i A_i) J^-1``."""
    D = build_dirac(w)
    for j, a in enumerate(A.components, start=1):
        if a.is_zero():
            continue
        term = sigma_times(j, a, w)
        D = D + term + conjugate_by_J(term)
    return D


def grading(w: TruncatedWindow) -> MatrixOperator:
    """``Gamma = sigma^3 (x) id``."""
    return spinor_constant(w, pauli(3)).as_hermitian()


@dataclass(frozen=True)
class DiracBundleDecomposition:
    """``D = D_h + D_v + Z`` with ``D_h = 1/2 Gamma [Gamma, D]`` and ``D_v = Gamma delta / ell``."""

    D_full: MatrixOperator
    D_h: MatrixOperator
    D_v: MatrixOperator
    Z: MatrixOperator
    gamma: MatrixOperator
    ell: float = 1.0

    @property
    def window(self) -> TruncatedWindow:
        return self.D_full.window


def u1_residual(T: MatrixOperator) -> float:
    return commutator(T, delta_operator(3, T.window)).max_abs()


def decompose(Dop: MatrixOperator, gamma: MatrixOperator | None = None, ell: float = 1.0):
    """Split a U(1)-invariant Dirac operator into horizontal, vertical and zero-order parts."""
    w = Dop.window
    if ell <= 0:
        raise ValueError("fibre length must be positive")
    if gamma is None:
        gamma = grading(w)
    if hermiticity_residual(Dop.matrix) >= ALGEBRA_TOL:
        raise ValueError("Dirac operator is not hermitian")
    res = u1_residual(Dop)
    if res >= ALGEBRA_TOL:
        raise NotInvariantError(f"[D, delta] has residual {res:.3e}")
    D_h = (Dop - gamma @ Dop @ gamma) * 0.5
    D_v = (gamma @ delta_operator(3, w)) * (1.0 / ell)
    Z = Dop - D_h - D_v
    return DiracBundleDecomposition(Dop, D_h, D_v, Z, gamma, ell)


def fibre_block(T: MatrixOperator, k: int) -> np.ndarray:
    """Dense block of a fibre-diagonal operator on ``delta_3 = k``."""
    if not T.is_fibre_diagonal():
        raise NotInvariantError("operator mixes fibres")
    return T.block(k, k)


def j_block(w: TruncatedWindow, k: int) -> np.ndarray:
    """Matrix ``M_k`` of the antilinear ``j_k : H_k -> H_{-k}``, ``j_k v = M_k conj(v)``."""
    M = real_structure_matrix(w)
    r = w.fibre_indices(-k)
    c = w.fibre_indices(k)
    return M[r[0] : r[-1] + 1, c[0] : c[-1] + 1].toarray()


@dataclass(frozen=True)
class BaseTriple:
    k: int
    D_k: np.ndarray
    gamma_k: np.ndarray
    j_k: np.ndarray
    D_minus_k: np.ndarray

    def relation_residuals(self) -> dict[str, float]:
        g, D, j, Dm = self.gamma_k, self.D_k, self.j_k, self.D_minus_k
        return {
            "gamma_k D_k = -D_k gamma_k": float(np.abs(g @ D + D @ g).max()),
            "j_k D_k = D_-k j_k": float(np.abs(j @ D.conj() - Dm @ j).max()),
            "j_k gamma_k = -gamma_-k j_k": float(np.abs(j @ g.conj() + g @ j).max()),
        }


def base_triple(decomp: DiracBundleDecomposition, k: int = 0) -> BaseTriple:
    return BaseTriple(
        k=k,
        D_k=fibre_block(decomp.D_h, k),
        gamma_k=fibre_block(decomp.gamma, k),
        j_k=j_block(decomp.window, k),
        D_minus_k=fibre_block(decomp.D_h, -k),
    )


# sampling ------------------------------------------------------------------


def sample_elements(theta: ThetaMatrix, *, base_only: bool = False, seed: int = 0,
                    monomial_degree: int = 2, n_random: int = 20, random_degree: int = 3):
    """All monomials up to ``monomial_degree`` plus seeded random elements."""
    rng = random.Random(seed)
    out = list(monomials(theta, monomial_degree, base_only=base_only))
    out += [random_element(theta, random_degree, rng, base_only=base_only) for _ in range(n_random)]
    return out


def _interior_max(w: TruncatedWindow, items) -> tuple[float, bool]:
    """Max interior residual over ``(operator, margin)`` pairs; flag if all interiors were empty."""
    worst = 0.0
    any_checked = False
    for op, margin in items:
        sub = interior(w, margin)
        if sub.empty:
            continue
        any_checked = True
        worst = max(worst, sub.residual(op))
    return worst, not any_checked


@lru_cache(maxsize=64)
def interior(w: TruncatedWindow, margin: int) -> InteriorSubspace:
    return InteriorSubspace(w, margin)


def projectability_report(Dop: MatrixOperator, gamma: MatrixOperator | None = None, *,
                          ell: float = 1.0, seed: int = 0, n_random: int = 20) -> AxiomReport:
    """Residuals of calculus projectability and of the conditions on ``Z``."""
    w = Dop.window
    decomp = decompose(Dop, gamma, ell)
    report = AxiomReport("projectability", metadata={"window": w.to_json(), "ell": ell})
    report.extend(_projectability_rows(decomp, seed=seed, n_random=n_random))
    report.metadata["Z_max_entry"] = decomp.Z.max_abs()
    return report


def _projectability_rows(decomp: DiracBundleDecomposition, *, seed: int, n_random: int):
    w = decomp.window
    theta = w.theta
    base = sample_elements(theta, base_only=True, seed=seed, n_random=n_random)
    alg = sample_elements(theta, seed=seed + 1, n_random=n_random)
    zm = decomp.Z.margin
    items = ((commutator(decomp.D_h, pb) - commutator(decomp.D_full, pb), b.degree() + zm)
             for b, pb in ((b, represent(b, w)) for b in base))
    res, skip = _interior_max(w, items)
    rows = [CheckResult.evaluate("calculus projectability", "[D_h, b] = [D, b]", res, ALGEBRA_TOL, skipped=skip)]
    items = ((commutator(decomp.Z, conjugate_by_J(represent(star(a), w))), a.degree() + zm) for a in alg)
    res, skip = _interior_max(w, items)
    rows.append(CheckResult.evaluate("Z commutes with commutant", "[Z, J a* J^-1] = 0", res, ALGEBRA_TOL, skipped=skip))
    rows.append(CheckResult.evaluate("Z commutes with Gamma", "[Z, Gamma] = 0",
                                     commutator(decomp.Z, decomp.gamma).max_abs(), ALGEBRA_TOL))
    return rows


def spectral_triple_report(w: TruncatedWindow, A: FluctuationA | None = None, *, seed: int = 0,
                           n_random: int = 20, ell: float = 1.0) -> AxiomReport:
    """Full residual suite for the (possibly fluctuated) real spectral triple on the window."""
    theta = w.theta
    if A is None:
        A = FluctuationA.zero(theta)
    D = build_fluctuated(A, w)
    G = grading(w)
    d3 = delta_operator(3, w)
    M = real_structure_matrix(w)
    one = identity(w)
    report = AxiomReport("spectral triple axioms", metadata={
        "window": w.to_json(), "fluctuation": A.to_json(), "seed": seed, "ell": ell})
    add = report.add

    add(CheckResult.evaluate("J^2 = -1", "J^2 = -1", abs(M @ M.conj() + sp.identity(w.dim)).max(), ALGEBRA_TOL))
    add(CheckResult.evaluate("DJ = JD", "DJ = JD", (conjugate_by_J(D) - D).max_abs(), ALGEBRA_TOL))
    add(CheckResult.evaluate("Gamma J = -J Gamma", "Gamma J = -J Gamma", (conjugate_by_J(G) + G).max_abs(), ALGEBRA_TOL))
    add(CheckResult.evaluate("J delta = -delta J", "J delta = -delta J", (conjugate_by_J(d3) + d3).max_abs(), ALGEBRA_TOL))
    add(CheckResult.evaluate("D delta = delta D", "D delta = delta D", u1_residual(D), ALGEBRA_TOL))
    add(CheckResult.evaluate("Gamma^2 = 1", "Gamma^2 = id", (G @ G - one).max_abs(), ALGEBRA_TOL))
    add(CheckResult.evaluate("Gamma selfadjoint", "Gamma* = Gamma", hermiticity_residual(G.matrix), ALGEBRA_TOL))
    add(CheckResult.evaluate("Gamma delta = delta Gamma", "Gamma delta = delta Gamma", commutator(G, d3).max_abs(), ALGEBRA_TOL))
    add(CheckResult.evaluate("D selfadjoint", "D* = D", hermiticity_residual(D.matrix), ALGEBRA_TOL))

    alg = sample_elements(theta, seed=seed, n_random=n_random)
    right = sample_elements(theta, seed=seed + 7, monomial_degree=1, n_random=max(1, n_random // 4))
    reps = [(a, represent(a, w)) for a in alg]
    rights = [(b, conjugate_by_J(represent(star(b), w))) for b in right]

    res, skip = _interior_max(w, ((commutator(G, pa), a.degree()) for a, pa in reps))
    add(CheckResult.evaluate("Gamma commutes with algebra", "[Gamma, a] = 0", res, ALGEBRA_TOL, skipped=skip))

    res, skip = _interior_max(w, ((commutator(d3, pa) - represent(derive(a, 3), w), a.degree()) for a, pa in reps))
    add(CheckResult.evaluate("equivariance", "[delta, pi(a)] = pi(delta(a))", res, ALGEBRA_TOL, skipped=skip))

    pairs = [(a, pa, b, rb) for a, pa in reps for b, rb in rights]
    res, skip = _interior_max(w, ((commutator(pa, rb), a.degree() + b.degree()) for a, pa, b, rb in pairs))
    add(CheckResult.evaluate("order zero", "[pi(a), J pi(b*) J^-1] = 0", res, ALGEBRA_TOL, skipped=skip))
    dreps = {id(pa): commutator(D, pa) for _, pa in reps}
    res, skip = _interior_max(w, ((commutator(dreps[id(pa)], rb), a.degree() + b.degree() + A.degree())
                                  for a, pa, b, rb in pairs))
    add(CheckResult.evaluate("order one", "[[D, pi(a)], J pi(b*) J^-1] = 0", res, ALGEBRA_TOL, skipped=skip))

    decomp = decompose(D, G, ell)
    report.extend(_projectability_rows(decomp, seed=seed, n_random=n_random))
    report.metadata["Z_max_entry"] = decomp.Z.max_abs()
    return report


def parity_residuals(decomp: DiracBundleDecomposition) -> dict[str, float]:
    """``Gamma D_h Gamma = -D_h``, ``Gamma D_v Gamma = D_v``, ``Gamma Z Gamma = Z`` and reassembly."""
    G = decomp.gamma
    return {
        "reassembly": (decomp.D_h + decomp.D_v + decomp.Z - decomp.D_full).max_abs(),
        "D_h odd": anticommutator(G, decomp.D_h).max_abs(),
        "D_v even": commutator(G, decomp.D_v).max_abs(),
        "Z even": commutator(G, decomp.Z).max_abs(),
    }
