"""One-forms, strong connections and the Dirac operators built from them.

A one-form ``sum_i p_i [D, q_i]`` of the canonical Dirac operator equals
``sum_j sigma^j pi(c_j)`` with ``c_j = sum_i p_i delta_j(q_i)``.  The Pauli
matrices are linearly independent over the (faithfully represented) algebra,
so the triple ``(c1, c2, c3)`` is a presentation-independent normal form and
it is the only form in which one-forms are stored here.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .algebra import (
    ThetaMatrix,
    TorusElement,
    derive,
    homogeneous_degree,
    monomials,
    multiply,
    star,
)
from .dirac import (
    ALGEBRA_TOL,
    DiracBundleDecomposition,
    FluctuationA,
    build_dirac,
    decompose,
    fibre_block,
    interior,
)
from .reports import rows_to_csv
from .representation import (
    MatrixOperator,
    TruncatedWindow,
    conjugate_by_J,
    delta_operator,
    pauli,
    represent,
    right_multiplication,
    sigma_times,
    spinor_constant,
)

Pair = tuple[TorusElement, TorusElement]


@dataclass(frozen=True)
class OneForm:
    """``omega = sigma^1 c1 + sigma^2 c2 + sigma^3 c3``."""

    c1: TorusElement
    c2: TorusElement
    c3: TorusElement

    @classmethod
    def zero(cls, theta: ThetaMatrix) -> "OneForm":
        z = TorusElement.zero(theta)
        return cls(z, z, z)

    @property
    def components(self) -> tuple[TorusElement, TorusElement, TorusElement]:
        return (self.c1, self.c2, self.c3)

    @property
    def theta(self) -> ThetaMatrix:
        return self.c1.theta

    def star(self) -> "OneForm":
        """Operator adjoint; the Pauli matrices are hermitian and commute with the algebra."""
        return OneForm(*(star(c) for c in self.components))

    def is_selfadjoint(self, atol: float = ALGEBRA_TOL) -> bool:
        return all((star(c) - c).max_abs() <= atol for c in self.components)

    def is_zero(self, atol: float = 0.0) -> bool:
        return all(c.max_abs() <= atol for c in self.components)

    def max_abs(self) -> float:
        return max(c.max_abs() for c in self.components)

    def degree(self) -> int:
        return max(c.degree() for c in self.components)

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm(*(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm(*(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar) -> "OneForm":
        return OneForm(*(c * scalar for c in self.components))

    __rmul__ = __mul__

    def left(self, a: TorusElement) -> "OneForm":
        """``a omega``."""
        return OneForm(*(multiply(a, c) for c in self.components))

    def right(self, a: TorusElement) -> "OneForm":
        """``omega a``."""
        return OneForm(*(multiply(c, a) for c in self.components))

    def matrix(self, w: TruncatedWindow) -> MatrixOperator:
        out = None
        for j, c in enumerate(self.components, start=1):
            term = sigma_times(j, c, w)
            out = term if out is None else out + term
        return out

    def to_json(self) -> dict:
        return {"c1": self.c1.to_json(), "c2": self.c2.to_json(), "c3": self.c3.to_json()}


class InvalidConnectionError(ValueError):
    """One-form is not a U(1) connection (wrong vertical part or not invariant)."""


@dataclass(frozen=True)
class Connection:
    """``omega = sigma^3 + sigma^1 omega1 + sigma^2 omega2`` with ``omega1, omega2`` invariant."""

    omega1: TorusElement
    omega2: TorusElement

    def __post_init__(self):
        for name in ("omega1", "omega2"):
            if not getattr(self, name).in_base():
                raise InvalidConnectionError(f"{name} is not U(1)-invariant")

    @classmethod
    def trivial(cls, theta: ThetaMatrix) -> "Connection":
        z = TorusElement.zero(theta)
        return cls(z, z)

    @classmethod
    def from_oneform(cls, omega: OneForm, atol: float = ALGEBRA_TOL) -> "Connection":
        if (omega.c3 - TorusElement.one(omega.theta)).max_abs() > atol:
            raise InvalidConnectionError("vertical component is not 1")
        return cls(omega.c1, omega.c2)

    @property
    def theta(self) -> ThetaMatrix:
        return self.omega1.theta

    @property
    def omega(self) -> OneForm:
        return OneForm(self.omega1, self.omega2, TorusElement.one(self.theta))

    def is_selfadjoint(self) -> bool:
        return self.omega.is_selfadjoint()

    def to_json(self) -> dict:
        return {"omega1": self.omega1.to_json(), "omega2": self.omega2.to_json()}

    @classmethod
    def from_json(cls, data, theta: ThetaMatrix | None = None) -> "Connection":
        return cls(TorusElement.from_json(data["omega1"], theta), TorusElement.from_json(data["omega2"], theta))


def _as_oneform(omega) -> OneForm:
    return omega.omega if isinstance(omega, Connection) else omega


# canonical forms ---------------------------------------------------------------


def canonicalize(pairs: Iterable[Pair]) -> OneForm:
    """Normal form of ``sum_i p_i [D, q_i]``."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("canonicalize needs at least one pair to fix theta")
    theta = pairs[0][0].theta
    cs = [TorusElement.zero(theta) for _ in range(3)]
    for p, q in pairs:
        for j in range(3):
            cs[j] = cs[j] + multiply(p, derive(q, j + 1))
    return OneForm(*cs)


def canonicalize_fluctuated(pairs: Iterable[Pair], A: FluctuationA) -> OneForm:
    """Normal form of ``sum_i p_i [D_A, q_i]``.

    ``[D_A, q] = sum_j sigma^j (delta_j(q) + [A_j, q])``; the ``J``-conjugated
    part of the fluctuation lies in the commutant and drops out.
    """
    pairs = list(pairs)
    theta = pairs[0][0].theta
    cs = [TorusElement.zero(theta) for _ in range(3)]
    for p, q in pairs:
        for j, a in enumerate(A.components):
            inner = derive(q, j + 1) + multiply(a, q) - multiply(q, a)
            cs[j] = cs[j] + multiply(p, inner)
    return OneForm(*cs)


def vertical_part(pairs: Iterable[Pair]) -> TorusElement:
    """``sum_i p_i delta(q_i)``."""
    pairs = list(pairs)
    out = TorusElement.zero(pairs[0][0].theta)
    for p, q in pairs:
        out = out + multiply(p, derive(q, 3))
    return out


def calculus_compatibility_check(pairs: Sequence[Pair], A: FluctuationA | None = None,
                                 atol: float = 1e-10) -> bool:
    """Does ``sum p_i [D_A, q_i] = 0`` imply ``sum p_i delta(q_i) = 0`` for these pairs?"""
    if not pairs:
        return True
    form = canonicalize(pairs) if A is None else canonicalize_fluctuated(pairs, A)
    if not form.is_zero(atol):
        return True
    return vertical_part(pairs).max_abs() <= atol


# kernel relations --------------------------------------------------------------


def _coefficient_matrix(columns: list[list[TorusElement]]) -> np.ndarray:
    """Stack the coefficient vectors of per-column element lists into a dense matrix."""
    keys = sorted({(s, key) for col in columns for s, el in enumerate(col) for key in el.coeffs})
    row = {k: i for i, k in enumerate(keys)}
    mat = np.zeros((len(keys), len(columns)), dtype=complex)
    for j, col in enumerate(columns):
        for s, el in enumerate(col):
            for key, v in el.coeffs.items():
                mat[row[(s, key)], j] += v
    return mat


def _kernel_combinations(pairs: list[Pair], slots, rcond: float = 1e-10) -> np.ndarray:
    """Null space of the linear map sending pair weights to the slot elements."""
    mat = _coefficient_matrix([slots(p, q) for p, q in pairs])
    if mat.shape[0] == 0:
        return np.eye(len(pairs), dtype=complex)
    return sla.null_space(mat, rcond=rcond)


def find_compatibility_counterexample(A: FluctuationA, degree: int = 1, atol: float = 1e-8):
    """Search ``sum_i p_i [D_A, q_i] = 0`` with ``sum_i p_i delta(q_i) != 0``.

    Unknowns are the weights of all monomial pairs with degree ``<= degree``;
    the kernel of the one-form map is computed per total fibre degree (the
    invariant fluctuation preserves it).  Returns the weighted pairs of the
    kernel element with the largest vertical part, or ``None``.
    """
    theta = A.theta
    mons = list(monomials(theta, degree))
    groups: dict[int, list[Pair]] = {}
    for p, q in itertools.product(mons, mons):
        groups.setdefault(p.support()[0][2] + q.support()[0][2], []).append((p, q))

    def slots(p, q):
        return list(canonicalize_fluctuated([(p, q)], A).components)

    best = None
    for total in sorted(groups):
        pairs = groups[total]
        null = _kernel_combinations(pairs, slots)
        if null.shape[1] == 0:
            continue
        vert = _coefficient_matrix([[vertical_part([pq])] for pq in pairs])
        if vert.shape[0] == 0:
            continue
        image = vert @ null
        norms = np.linalg.norm(image, axis=0)
        j = int(np.argmax(norms))
        if norms[j] > atol and (best is None or norms[j] > best[0]):
            x = null[:, j]
            weighted = [(p * x[i], q) for i, (p, q) in enumerate(pairs) if abs(x[i]) > 1e-14]
            best = (norms[j], weighted)
    return None if best is None else best[1]


# strong connections -------------------------------------------------------------


@dataclass(frozen=True)
class StrongnessReport:
    invariant: bool
    vertical: bool
    strong: bool
    max_strong_residual: float
    checked_monomials: int

    @property
    def is_strong_connection(self) -> bool:
        return self.invariant and self.vertical and self.strong


def is_strong_connection(omega, degree: int = 3, atol: float = 1e-10) -> StrongnessReport:
    """Check invariance, the vertical field condition and strongness up to ``degree``.

    Strongness asks that ``[D, a] - delta(a) omega`` lies in the span of
    ``b [D, b'] a''`` with ``b, b'`` base monomials of degree ``<= 1`` and
    ``a''`` monomials of degree ``<= degree + deg(omega) + 2``.  Every such
    generator is supported on a single monomial, so membership splits into
    independent small least-squares problems, one per monomial of the residual.
    """
    omega = _as_oneform(omega)
    theta = omega.theta
    invariant = all(c.in_base() for c in omega.components)
    vertical = (omega.c3 - TorusElement.one(theta)).max_abs() <= atol
    a_bound = degree + omega.degree() + 2
    base = list(monomials(theta, 1, base_only=True))
    shapes = []
    for b in base:
        for bp in base:
            form = canonicalize([(b, bp)])
            if not form.is_zero():
                shapes.append((b.support()[0], bp.support()[0], form))

    worst = 0.0
    count = 0
    for a in monomials(theta, degree):
        count += 1
        k = homogeneous_degree(a)
        residual = canonicalize([(TorusElement.one(theta), a)]) - omega.left(a) * k
        support = sorted({key for c in residual.components for key in c.coeffs})
        for mu in support:
            r = np.array([c.coefficient(*mu) for c in residual.components])
            cols = []
            for beta, betap, form in shapes:
                alpha = tuple(m - x - y for m, x, y in zip(mu, beta, betap))
                if max(abs(i) for i in alpha) > a_bound:
                    continue
                gen = form.right(TorusElement.monomial(theta, *alpha))
                cols.append([c.coefficient(*mu) for c in gen.components])
            if cols:
                G = np.array(cols, dtype=complex).T
                x, *_ = np.linalg.lstsq(G, r, rcond=None)
                miss = float(np.linalg.norm(G @ x - r))
            else:
                miss = float(np.linalg.norm(r))
            worst = max(worst, miss)
    return StrongnessReport(invariant, bool(vertical), worst <= atol, worst, count)


# D-connections ---------------------------------------------------------------------


def nabla(a: TorusElement, omega) -> OneForm:
    """``nabla_omega(a) = [D, a] - k a omega`` for ``a`` homogeneous of degree ``k``."""
    omega = _as_oneform(omega)
    if a.is_zero():
        return OneForm.zero(a.theta)
    k = homogeneous_degree(a)
    return canonicalize([(TorusElement.one(a.theta), a)]) - omega.left(a) * k


def right_form(eta: OneForm, w: TruncatedWindow) -> MatrixOperator:
    """Right action of a one-form, ``h eta := -J eta^* J^-1 h``."""
    return -conjugate_by_J(eta.star().matrix(w))


@dataclass(frozen=True)
class HermitianReport:
    residual: float
    closed_form_mismatch: float
    commutant_residual: float
    hermitian: bool


def _fibre_interior_columns(w: TruncatedWindow, margin: int, count: int | None, seed: int) -> np.ndarray:
    cols = w.fibre_indices(0)[w.fibre_interior_positions(margin)]
    if count is not None and count < len(cols):
        rng = np.random.default_rng(seed)
        cols = np.sort(rng.choice(cols, size=count, replace=False))
    return cols


def mherm_terms(omega, a1: TorusElement, a2: TorusElement, w: TruncatedWindow, h: np.ndarray):
    """Residual of the hermiticity identity on the vectors ``h`` (columns) and its closed form.

    Returns ``(residual, closed_form)`` as arrays of the same shape as ``h``.
    """
    omega = _as_oneform(omega)
    D = build_dirac(w)
    k = homogeneous_degree(a1)
    if homogeneous_degree(a2) != k:
        raise ValueError("a1 and a2 must have the same degree")
    R1s = right_multiplication(star(a1), w)
    R2 = right_multiplication(a2, w)
    Rn2 = right_form(nabla(a2, omega), w)
    Rn1 = right_form(nabla(a1, omega), w)
    R2h = R2 @ h
    # h [D, x] = D(h x) - (D h) x fixes the sign of the last two terms
    residual = (
        R1s @ (Rn2 @ h)
        - Rn1.adjoint() @ R2h
        - D @ (R1s @ R2h)
        + R1s @ (R2 @ (D @ h))
    )
    eta = (omega.star() - omega).left(a2).right(star(a1)) * k
    closed = right_form(eta, w) @ h
    return residual, closed


def hermitian_check(omega, w: TruncatedWindow, samples: Sequence[tuple[TorusElement, TorusElement]],
                    n_vectors: int = 24, seed: int = 0, atol: float = ALGEBRA_TOL) -> HermitianReport:
    """Evaluate the hermiticity identity of ``nabla_omega`` on sampled ``(a1, a2)`` and ``h in H_0``."""
    omega = _as_oneform(omega)
    worst = mismatch = commutant = 0.0
    for a1, a2 in samples:
        margin = a1.degree() + a2.degree() + omega.degree() + 1
        cols = _fibre_interior_columns(w, margin, n_vectors, seed)
        if len(cols) == 0:
            continue
        h = np.zeros((w.dim, len(cols)), dtype=complex)
        h[cols, np.arange(len(cols))] = 1.0
        res, closed = mherm_terms(omega, a1, a2, w, h)
        worst = max(worst, float(np.abs(res).max()))
        mismatch = max(mismatch, float(np.abs(res - closed).max()))
        # m1^dagger o m2 acts as J (a1 a2^*) J^-1, which must lie in J B J^-1
        prod = multiply(a1, star(a2))
        if not prod.in_base():
            commutant = max(commutant, prod.max_abs())
        lhs = right_multiplication(star(a1), w) @ (right_multiplication(a2, w) @ h)
        rhs = conjugate_by_J(represent(prod, w)) @ h
        commutant = max(commutant, float(np.abs(lhs - rhs).max()))
    return HermitianReport(worst, mismatch, commutant, worst < atol and commutant < atol)


# twisted Dirac operators --------------------------------------------------------


def twisted_dirac(omega, decomp: DiracBundleDecomposition) -> MatrixOperator:
    """``D_omega = D + J omega^* J^-1 delta - Z``."""
    omega = _as_oneform(omega)
    w = decomp.window
    if not omega.is_selfadjoint():
        warnings.warn("connection is not selfadjoint; hermiticity of D_omega not claimed", stacklevel=2)
    twist = conjugate_by_J(omega.star().matrix(w)) @ delta_operator(3, w)
    return decomp.D_full + twist - decomp.Z


def twisted_dirac_fibre(omega, decomp: DiracBundleDecomposition, k: int) -> np.ndarray:
    """Block of ``D_omega`` on ``H_k`` built as the twist of ``D_0`` by ``nabla_omega``.

    ``H_k`` is reached from ``H_0`` through the right action of ``m = U3^k``;
    on vectors ``h m`` the operator acts as ``(D_0 h) m + h nabla(m)``.
    """
    omega = _as_oneform(omega)
    w = decomp.window
    theta = w.theta
    m = TorusElement.monomial(theta, 0, 0, k)
    Rm = right_multiplication(m, w).block(k, 0)
    Rnab = right_form(nabla(m, omega), w).block(k, 0)
    D0 = fibre_block(decomp.D_h, 0)
    return np.linalg.solve(Rm.T, (Rm @ D0 + Rnab).T).T


def lifted_dirac(omega, decomp: DiracBundleDecomposition) -> MatrixOperator:
    """``calD_omega = Gamma delta / ell + D_omega``."""
    return decomp.D_v + twisted_dirac(omega, decomp)


def compatible_dirac(conn: Connection, w: TruncatedWindow) -> MatrixOperator:
    """``D_(omega) = D - (sigma^2 J omega2 J^-1 + sigma^1 J omega1 J^-1) delta_3``."""
    D = build_dirac(w)
    s1 = spinor_constant(w, pauli(1))
    s2 = spinor_constant(w, pauli(2))
    corr = s2 @ conjugate_by_J(represent(conn.omega2, w)) + s1 @ conjugate_by_J(represent(conn.omega1, w))
    return D - corr @ delta_operator(3, w)


def horizontal_part(T: MatrixOperator, gamma: MatrixOperator) -> MatrixOperator:
    return (T - gamma @ T @ gamma) * 0.5


# compatibility scan --------------------------------------------------------------


@dataclass
class ScanReport:
    rows: list[tuple[str, float, float, float]] = field(default_factory=list)
    tolerance: float = ALGEBRA_TOL

    def zeros(self) -> list[tuple[str, float, float, float]]:
        return [r for r in self.rows if r[3] < self.tolerance]

    @property
    def minimizer(self) -> tuple[str, float, float, float]:
        return min(self.rows, key=lambda r: r[3])

    @property
    def unique_zero_at_origin(self) -> bool:
        zeros = self.zeros()
        return bool(zeros) and all(r[1] == 0 and r[2] == 0 for r in zeros)

    def to_csv(self) -> str:
        return rows_to_csv(["generator", "omega1_coeff", "omega2_coeff", "residual"], self.rows)


def hermitian_generator(theta: ThetaMatrix, j: int) -> TorusElement:
    """``(U_j + U_j^-1)/2``."""
    return (TorusElement.generator(theta, j) + TorusElement.generator(theta, j, -1)) * 0.5


def scan_residual(conn: Connection, decomp: DiracBundleDecomposition) -> float:
    """Frobenius norm of ``(D_omega - D_h)`` on interior columns."""
    w = decomp.window
    diff = twisted_dirac(conn, decomp) - decomp.D_h
    sub = interior(w, diff.margin)
    if sub.empty:
        return float("nan")
    mat = diff.matrix.tocsc()[:, sub.columns]
    return float(np.sqrt((abs(mat).power(2)).sum()))


def compatibility_scan(w: TruncatedWindow, values: Sequence[float] = (-1.0, -0.5, 0.0, 0.5, 1.0),
                       generators: Sequence[int] = (1, 2)) -> ScanReport:
    """Residual ``||D_omega - D_h||`` over a grid of selfadjoint connections.

    ``omega1 = alpha g``, ``omega2 = beta g`` with ``g = (U_j + U_j^-1)/2`` for
    each generator index ``j``.
    """
    decomp = decompose(build_dirac(w))
    report = ScanReport()
    for j in generators:
        g = hermitian_generator(w.theta, j)
        for alpha in values:
            for beta in values:
                conn = Connection(g * alpha, g * beta)
                report.rows.append((f"U{j}", float(alpha), float(beta), scan_residual(conn, decomp)))
    return report


# aggregated checks ---------------------------------------------------------------


def sample_connection(theta: ThetaMatrix, seed: int = 0, degree: int = 1) -> Connection:
    """Seeded selfadjoint connection with invariant coefficients of degree ``<= degree``."""
    import random

    from .algebra import random_element, selfadjoint_part

    rng = random.Random(seed)
    parts = [selfadjoint_part(random_element(theta, degree, rng, base_only=True)) for _ in range(2)]
    return Connection(*parts)


def leibniz_residual(omega, theta: ThetaMatrix, degree: int = 1) -> float:
    """``max |nabla(b a) - ([D, b] a + b nabla(a))|`` over monomials ``b`` in B and ``a`` in A."""
    worst = 0.0
    one = TorusElement.one(theta)
    for b in monomials(theta, degree, base_only=True):
        db = canonicalize([(one, b)])
        for a in monomials(theta, degree):
            lhs = nabla(multiply(b, a), omega)
            rhs = db.right(a) + nabla(a, omega).left(b)
            worst = max(worst, (lhs - rhs).max_abs())
    return worst


def _interior_res(T: MatrixOperator, margin: int | None = None) -> tuple[float, bool]:
    sub = interior(T.window, T.margin if margin is None else margin)
    return (0.0, True) if sub.empty else (sub.residual(T), False)


def connection_report(w: TruncatedWindow, conn: Connection, *, seed: int = 0):
    """Identities of the connection, its D-connection and the three Dirac operators built from it."""
    from .reports import AxiomReport, CheckResult
    from .representation import hermiticity_residual

    theta = w.theta
    omega = conn.omega
    rep = AxiomReport("connection", metadata={"omega": conn.to_json(), "window": w.to_json()})
    decomp = decompose(build_dirac(w))
    s = is_strong_connection(omega, degree=2)
    rep.add(CheckResult.evaluate("strong connection", "[D, a] - delta(a) omega in Omega_D(B) A",
                                 s.max_strong_residual, 1e-10))
    rep.add(CheckResult.evaluate("Leibniz rule", "nabla(b a) = [D, b] a + b nabla(a)",
                                 leibniz_residual(omega, theta), ALGEBRA_TOL))

    samples = []
    for k in (1, -1):
        samples.append((TorusElement.monomial(theta, 1, 0, k), TorusElement.monomial(theta, 0, 1, k)))
        samples.append((TorusElement.monomial(theta, 0, 0, k), TorusElement.monomial(theta, -1, 1, k)))
    margin = 2 + omega.degree() + 1
    if w.fibre_interior_positions(margin).size == 0 or w.N < 1:
        rep.add(CheckResult.evaluate("hermitian D-connection", "h nabla(m2) m1^+ - h m2 nabla(m1)^+ = ...",
                                     0.0, ALGEBRA_TOL, skipped=True))
    else:
        h = hermitian_check(conn, w, samples, seed=seed)
        rep.add(CheckResult.evaluate("hermitian D-connection", "h nabla(m2) m1^+ - h m2 nabla(m1)^+ = ...",
                                     h.residual, ALGEBRA_TOL))
        rep.add(CheckResult.evaluate("module maps in commutant", "m1^+ m2 in J B J^-1",
                                     h.commutant_residual, ALGEBRA_TOL))

    Dw = twisted_dirac(conn, decomp)
    res, skip = _interior_res(Dw - Dw.adjoint())
    rep.add(CheckResult.evaluate("D_omega selfadjoint", "D_omega* = D_omega", res, ALGEBRA_TOL, skipped=skip))

    pos = w.fibre_interior_positions(omega.degree())
    worst = 0.0
    for k in range(-min(2, w.N), min(2, w.N) + 1):
        if pos.size == 0:
            break
        diff = twisted_dirac_fibre(conn, decomp, k) - fibre_block(Dw, k)
        worst = max(worst, float(np.abs(diff[:, pos]).max()))
    rep.add(CheckResult.evaluate("two-path twisted Dirac", "D_omega = D + J omega* J^-1 delta - Z per fibre",
                                 worst, ALGEBRA_TOL, skipped=pos.size == 0))

    lift = lifted_dirac(conn, decomp)
    d3 = delta_operator(3, w)
    res, skip = _interior_res(lift @ lift - (Dw @ Dw + d3 @ d3))
    rep.add(CheckResult.evaluate("squared lift", "calD^2 = D_omega^2 + delta^2", res, 1e-10, skipped=skip))

    res, skip = _interior_res(horizontal_part(compatible_dirac(conn, w), decomp.gamma) - Dw)
    rep.add(CheckResult.evaluate("compatible Dirac", "horizontal part of D_(omega) = D_omega", res, ALGEBRA_TOL,
                                 skipped=skip))

    worst, skipped_all = 0.0, True
    for b in monomials(theta, 1, base_only=True):
        pb = represent(b, w)
        r, skip = _interior_res((Dw @ pb - pb @ Dw) - (decomp.D_h @ pb - pb @ decomp.D_h))
        worst, skipped_all = max(worst, r), skipped_all and skip
    rep.add(CheckResult.evaluate("bounded commutators", "[D_omega, b] = [D_h, b]", worst, ALGEBRA_TOL,
                                 skipped=skipped_all))
    rep.metadata["D_omega_hermiticity_full_window"] = hermiticity_residual(Dw.matrix)
    return rep
