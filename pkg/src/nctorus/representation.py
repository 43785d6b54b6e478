"""Truncated Hilbert-space realization of the torus algebra.

The Hilbert space is spanned by ``e_{k,l,m} (x) C^2``.  A window keeps the
indices with ``|k| <= N + eps1``, ``|l| <= N + eps2``, ``|m| <= N``, where
``eps1, eps2`` are the spin-structure offsets (0 or 1/2).  Basis vectors are
enumerated with ``m`` outermost, then ``k``, then ``l``, then the spinor
component, so every fibre ``m = const`` is a contiguous block.

Operators that shift indices lose the entries that leave the window.  An
operator identity that holds exactly in infinite volume therefore holds
exactly on the columns whose indices stay at distance ``>= margin`` from the
window boundary, where ``margin`` bounds the total index shift involved.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .algebra import TWO_PI, ThetaMatrix, ThetaMismatchError, TorusElement

ENUMERATION_ORDER = "m,k,l,spinor/v1"
PAULI_CONVENTION = "sigma1=[[0,1],[1,0]] sigma2=[[0,-i],[i,0]] sigma3=[[1,0],[0,-1]]"

_PAULI = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}

# i sigma^2, the spinor part of the real structure
_I_SIGMA2 = 1j * _PAULI[2]


def pauli(j: int) -> np.ndarray:
    """Pauli matrix ``sigma^j`` (``j = 0`` gives the identity)."""
    if j not in _PAULI:
        raise ValueError(f"no Pauli matrix with index {j}")
    return _PAULI[j].copy()


@dataclass(frozen=True)
class SpinStructure:
    """Offsets applied to the ``k`` and ``l`` indices; the fibre index stays integral."""

    eps1: Fraction = Fraction(0)
    eps2: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("eps1", "eps2"):
            raw = getattr(self, name)
            value = Fraction(raw).limit_denominator(2)
            if value not in (0, Fraction(1, 2)) or abs(float(raw) - float(value)) > 1e-12:
                raise ValueError(f"{name} must be 0 or 1/2, got {raw}")
            object.__setattr__(self, name, value)

    @property
    def offsets(self) -> tuple[float, float, float]:
        return (float(self.eps1), float(self.eps2), 0.0)

    @classmethod
    def parse(cls, text: str) -> "SpinStructure":
        """Parse ``"0,0"``, ``"0.5,0"``, ``"1/2,1/2"`` and similar."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 2:
            raise ValueError(f"spin structure needs two offsets, got {text!r}")
        return cls(Fraction(parts[0]), Fraction(parts[1]))

    def to_json(self) -> list[float]:
        return [float(self.eps1), float(self.eps2)]


@dataclass(frozen=True)
class TruncatedWindow:
    """Finite index box for ``e_{k,l,m} (x) C^2`` together with the twist matrix."""

    N: int
    spin: SpinStructure = field(default_factory=SpinStructure)
    theta: ThetaMatrix = field(default_factory=ThetaMatrix)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"window cutoff must be a positive integer, got {self.N}")

    def radius(self, axis: int) -> float:
        return self.N + self.spin.offsets[axis - 1]

    def axis_values(self, axis: int) -> np.ndarray:
        """Sorted index values along ``axis`` (symmetric under reflection)."""
        eps = self.spin.offsets[axis - 1]
        if eps == 0:
            return np.arange(-self.N, self.N + 1, dtype=float)
        return np.arange(-self.N, self.N + 1 + 1, dtype=float) - 0.5

    @cached_property
    def shape(self) -> tuple[int, int, int]:
        """Number of values along ``(k, l, m)``."""
        return tuple(len(self.axis_values(a)) for a in (1, 2, 3))

    @property
    def n_sites(self) -> int:
        nk, nl, nm = self.shape
        return nk * nl * nm

    @property
    def dim(self) -> int:
        return 2 * self.n_sites

    @property
    def fibre_dim(self) -> int:
        nk, nl, _ = self.shape
        return 2 * nk * nl

    @cached_property
    def site_coords(self) -> np.ndarray:
        """``(n_sites, 3)`` array of ``(k, l, m)`` values in enumeration order."""
        kv, lv, mv = (self.axis_values(a) for a in (1, 2, 3))
        m, k, l = np.meshgrid(mv, kv, lv, indexing="ij")
        return np.stack([k.ravel(), l.ravel(), m.ravel()], axis=1)

    @cached_property
    def site_grid(self) -> np.ndarray:
        """``(n_sites, 3)`` integer positions ``(ik, il, im)`` inside the box."""
        nk, nl, nm = self.shape
        im, ik, il = np.meshgrid(np.arange(nm), np.arange(nk), np.arange(nl), indexing="ij")
        return np.stack([ik.ravel(), il.ravel(), im.ravel()], axis=1)

    def site_number(self, ik, il, im):
        nk, nl, _ = self.shape
        return (np.asarray(im) * nk + np.asarray(ik)) * nl + np.asarray(il)

    def index_of(self, k: float, l: float, m: float, spinor: int = 0) -> int:
        """Matrix coordinate of ``e_{k,l,m} (x) f_spinor``."""
        pos = []
        for axis, value in zip((1, 2, 3), (k, l, m)):
            vals = self.axis_values(axis)
            hit = np.nonzero(np.isclose(vals, value))[0]
            if len(hit) == 0:
                raise IndexError(f"index {value} on axis {axis} is outside the window")
            pos.append(int(hit[0]))
        return int(2 * self.site_number(*pos) + spinor)

    def basis_vector(self, k, l, m, spinor: int = 0) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index_of(k, l, m, spinor)] = 1.0
        return v

    def interior_sites(self, margin: int) -> np.ndarray:
        """Boolean mask of sites at distance ``>= margin`` from the boundary."""
        c = self.site_coords
        mask = np.ones(self.n_sites, dtype=bool)
        for axis in (1, 2, 3):
            mask &= np.abs(c[:, axis - 1]) <= self.radius(axis) - margin + 1e-9
        return mask

    def interior_indices(self, margin: int) -> np.ndarray:
        sites = np.nonzero(self.interior_sites(margin))[0]
        return np.sort(np.concatenate([2 * sites, 2 * sites + 1]))

    def fibre_indices(self, m: int) -> np.ndarray:
        """Matrix coordinates of the fibre ``delta_3 = m`` (a contiguous range)."""
        if abs(m) > self.N:
            raise IndexError(f"fibre {m} outside window of cutoff {self.N}")
        start = (m + self.N) * self.fibre_dim
        return np.arange(start, start + self.fibre_dim)

    def fibre_interior_positions(self, margin: int) -> np.ndarray:
        """Positions inside a fibre block whose ``(k, l)`` lie in the interior."""
        c = self.site_coords[: self.fibre_dim // 2]
        mask = np.ones(len(c), dtype=bool)
        for axis in (1, 2):
            mask &= np.abs(c[:, axis - 1]) <= self.radius(axis) - margin + 1e-9
        sites = np.nonzero(mask)[0]
        return np.sort(np.concatenate([2 * sites, 2 * sites + 1]))

    def to_json(self) -> dict:
        return {"N": self.N, "spin": self.spin.to_json(), "theta": self.theta.to_json()}


@dataclass(frozen=True)
class InteriorSubspace:
    """Span of the basis vectors at distance ``>= margin`` from the window boundary."""

    window: TruncatedWindow
    margin: int

    @cached_property
    def columns(self) -> np.ndarray:
        return self.window.interior_indices(self.margin)

    @property
    def empty(self) -> bool:
        return len(self.columns) == 0

    def residual(self, T) -> float:
        """Largest entry modulus of ``T`` restricted to interior columns."""
        mat = T.matrix if isinstance(T, MatrixOperator) else T
        if self.empty:
            return 0.0
        sub = sp.csc_matrix(mat)[:, self.columns]
        return float(abs(sub).max()) if sub.nnz else 0.0


@dataclass(frozen=True, eq=False)
class MatrixOperator:
    """Complex matrix on a truncated spinor space.

    ``margin`` bounds how far (in index distance) the operator can move a
    basis vector; it drives which columns may be trusted after truncation.
    """

    window: TruncatedWindow
    matrix: sp.csr_matrix
    margin: int = 0
    hermitian: bool = False

    def __post_init__(self):
        mat = sp.csr_matrix(self.matrix, dtype=complex)
        if mat.shape != (self.window.dim, self.window.dim):
            raise ValueError(f"matrix shape {mat.shape} does not match window dim {self.window.dim}")
        mat.eliminate_zeros()
        object.__setattr__(self, "matrix", mat)
        if self.hermitian:
            res = hermiticity_residual(mat)
            if res >= 1e-12:
                raise ValueError(f"operator flagged hermitian but residual is {res:.3e}")

    def _wrap(self, mat, margin):
        return MatrixOperator(self.window, mat, margin)

    def _same_window(self, other: "MatrixOperator"):
        if other.window != self.window:
            raise ValueError("operators live on different windows")

    def __add__(self, other):
        self._same_window(other)
        return self._wrap(self.matrix + other.matrix, max(self.margin, other.margin))

    def __sub__(self, other):
        self._same_window(other)
        return self._wrap(self.matrix - other.matrix, max(self.margin, other.margin))

    def __neg__(self):
        return self._wrap(-self.matrix, self.margin)

    def __mul__(self, scalar):
        return self._wrap(self.matrix * scalar, self.margin)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, MatrixOperator):
            self._same_window(other)
            return self._wrap(self.matrix @ other.matrix, self.margin + other.margin)
        return self.matrix @ other

    def adjoint(self) -> "MatrixOperator":
        return self._wrap(self.matrix.conj().T.tocsr(), self.margin)

    def as_hermitian(self) -> "MatrixOperator":
        """Same operator with the hermitian flag set (verified)."""
        return MatrixOperator(self.window, self.matrix, self.margin, hermitian=True)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def norm(self) -> float:
        return float(sp.linalg.norm(self.matrix)) if self.matrix.nnz else 0.0

    def max_abs(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def is_fibre_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        fd = self.window.fibre_dim
        return bool(np.all(coo.row // fd == coo.col // fd))

    def block(self, rows_fibre: int, cols_fibre: int) -> np.ndarray:
        r = self.window.fibre_indices(rows_fibre)
        c = self.window.fibre_indices(cols_fibre)
        return self.matrix[r[0] : r[-1] + 1, c[0] : c[-1] + 1].toarray()


def hermiticity_residual(mat) -> float:
    diff = mat - mat.conj().T
    diff = sp.csr_matrix(diff)
    return float(abs(diff).max()) if diff.nnz else 0.0


def commutator(a: MatrixOperator, b: MatrixOperator) -> MatrixOperator:
    return a @ b - b @ a


def anticommutator(a: MatrixOperator, b: MatrixOperator) -> MatrixOperator:
    return a @ b + b @ a


def spin_kron(window: TruncatedWindow, lattice: sp.spmatrix, spin: np.ndarray, margin: int = 0):
    """``lattice (x) spin`` as an operator on the window."""
    mat = sp.kron(sp.csr_matrix(lattice), sp.csr_matrix(spin), format="csr")
    return MatrixOperator(window, mat, margin)


def identity(window: TruncatedWindow) -> MatrixOperator:
    return MatrixOperator(window, sp.identity(window.dim, dtype=complex, format="csr"))


def spinor_constant(window: TruncatedWindow, spin: np.ndarray) -> MatrixOperator:
    """``id (x) spin`` for a constant 2x2 matrix."""
    return spin_kron(window, sp.identity(window.n_sites, dtype=complex), spin)


@lru_cache(maxsize=256)
def _lattice_monomial(window: TruncatedWindow, c: tuple[int, int, int]) -> sp.csr_matrix:
    """Lattice matrix of the unit monomial ``U^c`` (no spinor factor)."""
    theta = window.theta
    grid = window.site_grid
    coords = window.site_coords
    target = grid + np.asarray(c)
    ok = np.all((target >= 0) & (target < np.asarray(window.shape)), axis=1)
    src = np.nonzero(ok)[0]
    dst = window.site_number(target[ok, 0], target[ok, 1], target[ok, 2])
    x1, x2 = coords[ok, 0], coords[ok, 1]
    arg = (
        np.fmod(theta.theta21 * c[1] * x1, 1.0)
        + np.fmod(theta.theta31 * c[2] * x1, 1.0)
        + np.fmod(theta.theta32 * c[2] * x2, 1.0)
    )
    phase = np.exp(1j * TWO_PI * np.fmod(arg, 1.0))
    n = window.n_sites
    return sp.csr_matrix((phase, (dst, src)), shape=(n, n))


def lattice_matrix(a: TorusElement, w: TruncatedWindow) -> sp.csr_matrix:
    """Matrix of ``pi(a)`` on the scalar lattice (no spinor factor)."""
    if a.theta != w.theta:
        raise ThetaMismatchError(f"element theta {a.theta} differs from window theta {w.theta}")
    out = sp.csr_matrix((w.n_sites, w.n_sites), dtype=complex)
    for key, value in a.coeffs.items():
        out = out + value * _lattice_monomial(w, key)
    return out


def represent(a: TorusElement, w: TruncatedWindow) -> MatrixOperator:
    """``pi(a) (x) id_2`` truncated to the window."""
    return spin_kron(w, lattice_matrix(a, w), _PAULI[0], margin=a.degree())


def sigma_times(j: int, a: TorusElement, w: TruncatedWindow) -> MatrixOperator:
    """``sigma^j pi(a)``."""
    return spin_kron(w, lattice_matrix(a, w), _PAULI[j], margin=a.degree())


def delta_operator(j: int, w: TruncatedWindow) -> MatrixOperator:
    """Diagonal operator of the ``j``-th index (spin offsets included)."""
    if j not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {j}")
    vals = w.site_coords[:, j - 1]
    return MatrixOperator(w, sp.kron(sp.diags(vals.astype(complex)), sp.identity(2), format="csr"), hermitian=True)


@lru_cache(maxsize=32)
def real_structure_matrix(w: TruncatedWindow) -> sp.csr_matrix:
    """Unitary ``M`` with ``J v = M conj(v)``.

    ``J = i sigma^2 o J0`` where ``J0`` is the Tomita map of the trace state:
    ``J0 e_x = exp(2 pi i q(x)) e_{-x}`` with
    ``q(x) = theta21 x1 x2 + theta31 x1 x3 + theta32 x2 x3``.  The quadratic
    phase is what makes ``J pi(b^*) J^-1`` the right multiplication by ``b``.
    """
    for axis in (1, 2, 3):
        vals = w.axis_values(axis)
        if not np.allclose(vals, -vals[::-1]):
            raise ValueError(f"window axis {axis} is not reflection symmetric")
    grid = w.site_grid
    refl = np.asarray(w.shape) - 1 - grid
    dst = w.site_number(refl[:, 0], refl[:, 1], refl[:, 2])
    c = w.site_coords
    th = w.theta
    arg = (
        np.fmod(th.theta21 * c[:, 0] * c[:, 1], 1.0)
        + np.fmod(th.theta31 * c[:, 0] * c[:, 2], 1.0)
        + np.fmod(th.theta32 * c[:, 1] * c[:, 2], 1.0)
    )
    phase = np.exp(1j * TWO_PI * np.fmod(arg, 1.0))
    n = w.n_sites
    m0 = sp.csr_matrix((phase, (dst, np.arange(n))), shape=(n, n))
    return sp.kron(m0, sp.csr_matrix(_I_SIGMA2), format="csr")


def apply_J(v: np.ndarray, w: TruncatedWindow) -> np.ndarray:
    """Antilinear real structure applied to a vector (or to the columns of an array)."""
    return real_structure_matrix(w) @ np.conj(v)


def conjugate_by_J(T: MatrixOperator) -> MatrixOperator:
    """The linear operator ``J T J^-1``."""
    M = real_structure_matrix(T.window)
    mat = M @ T.matrix.conj() @ M.conj().T
    return MatrixOperator(T.window, mat, T.margin)


def right_multiplication(a: TorusElement, w: TruncatedWindow) -> MatrixOperator:
    """Right action ``h -> h a := J pi(a^*) J^-1 h``."""
    from .algebra import star

    return conjugate_by_J(represent(star(a), w))


def export_operator(T: MatrixOperator, prefix: str | Path, label: str = "") -> tuple[Path, Path]:
    """Write ``prefix.bin`` (column-major complex128) and ``prefix.json`` (header)."""
    prefix = Path(prefix)
    data = np.asfortranarray(T.dense().astype(np.complex128))
    bin_path = prefix.with_suffix(".bin")
    json_path = prefix.with_suffix(".json")
    bin_path.write_bytes(data.tobytes(order="F"))
    header = {
        "schema": "nctorus.matrix/1",
        "label": label,
        "window": T.window.to_json(),
        "dim": T.window.dim,
        "dtype": "complex128",
        "order": "column-major",
        "enumeration": ENUMERATION_ORDER,
        "pauli": PAULI_CONVENTION,
        "flags": {"hermitian": bool(hermiticity_residual(T.matrix) < 1e-12), "fibre_diagonal": T.is_fibre_diagonal()},
        "margin": T.margin,
    }
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True))
    return bin_path, json_path


def load_operator(prefix: str | Path) -> tuple[dict, np.ndarray]:
    prefix = Path(prefix)
    header = json.loads(prefix.with_suffix(".json").read_text())
    n = header["dim"]
    data = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype=np.complex128)
    return header, data.reshape((n, n), order="F")
