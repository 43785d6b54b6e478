"""Finitely supported elements of the noncommutative 3-torus.

Elements are noncommutative Laurent polynomials in three unitaries
``U1, U2, U3`` subject to ``U_j U_k = exp(2 pi i theta_jk) U_k U_j``.  They are
stored in the normal order ``U1^k U2^l U3^m`` as a mapping
``(k, l, m) -> coefficient``.
"""
from __future__ import annotations

import cmath
import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

Index = tuple[int, int, int]

TWO_PI = 2.0 * math.pi


class ThetaMismatchError(ValueError):
    """Raised when elements over different twist matrices are combined."""


def unit_phase(x: float) -> complex:
    """Return ``exp(2 pi i x)`` with the argument reduced modulo 1."""
    r = math.fmod(x, 1.0)
    if r == 0.0:
        return 1.0 + 0.0j
    return cmath.exp(1j * TWO_PI * r)


@dataclass(frozen=True)
class ThetaMatrix:
    """Antisymmetric twist matrix, stored through its three lower entries."""

    theta21: float = 0.0
    theta31: float = 0.0
    theta32: float = 0.0

    def entry(self, j: int, k: int) -> float:
        """Return ``theta_jk`` for axes ``j, k`` in ``1..3``."""
        if j == k:
            return 0.0
        lower = {(2, 1): self.theta21, (3, 1): self.theta31, (3, 2): self.theta32}
        if (j, k) in lower:
            return lower[(j, k)]
        return -lower[(k, j)]

    def matrix(self) -> np.ndarray:
        return np.array([[self.entry(j, k) for k in (1, 2, 3)] for j in (1, 2, 3)])

    def product_phase_arg(self, a: Iterable[float], b: Iterable[float]) -> float:
        """Phase argument (in turns) picked up when normal ordering ``U^a U^b``.

        ``U^a U^b = exp(2 pi i x) U^(a+b)`` with
        ``x = theta21 a2 b1 + theta31 a3 b1 + theta32 a3 b2``.  The same bilinear
        form gives the phases of the Hilbert-space representation, so it is
        also evaluated at half-integer arguments.
        """
        a1, a2, a3 = a
        b1, b2, b3 = b
        return (
            math.fmod(self.theta21 * a2 * b1, 1.0)
            + math.fmod(self.theta31 * a3 * b1, 1.0)
            + math.fmod(self.theta32 * a3 * b2, 1.0)
        )

    def quadratic_arg(self, x: Iterable[float]) -> float:
        """``theta21 x1 x2 + theta31 x1 x3 + theta32 x2 x3`` reduced mod 1.

        This is the phase of ``(U^x)^* = exp(2 pi i q(x)) U^(-x)``.
        """
        x1, x2, x3 = x
        return (
            math.fmod(self.theta21 * x1 * x2, 1.0)
            + math.fmod(self.theta31 * x1 * x3, 1.0)
            + math.fmod(self.theta32 * x2 * x3, 1.0)
        )

    def to_json(self) -> dict:
        return {"t21": self.theta21, "t31": self.theta31, "t32": self.theta32}

    @classmethod
    def from_json(cls, data: Mapping) -> "ThetaMatrix":
        return cls(float(data["t21"]), float(data["t31"]), float(data["t32"]))


def _clean(coeffs: Mapping[Index, complex]) -> dict[Index, complex]:
    out = {}
    for key, value in coeffs.items():
        value = complex(value)
        if value != 0:
            out[tuple(int(i) for i in key)] = value
    return out


@dataclass(frozen=True, eq=False)
class TorusElement:
    """A finitely supported element ``sum alpha_klm U1^k U2^l U3^m``."""

    theta: ThetaMatrix
    coeffs: Mapping[Index, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _clean(self.coeffs))

    # construction -----------------------------------------------------------

    @classmethod
    def zero(cls, theta: ThetaMatrix) -> "TorusElement":
        return cls(theta, {})

    @classmethod
    def one(cls, theta: ThetaMatrix) -> "TorusElement":
        return cls(theta, {(0, 0, 0): 1.0})

    @classmethod
    def monomial(cls, theta: ThetaMatrix, k: int, l: int, m: int, coeff: complex = 1.0):
        return cls(theta, {(k, l, m): coeff})

    @classmethod
    def generator(cls, theta: ThetaMatrix, j: int, power: int = 1) -> "TorusElement":
        idx = [0, 0, 0]
        idx[j - 1] = power
        return cls(theta, {tuple(idx): 1.0})

    # inspection -------------------------------------------------------------

    def support(self) -> list[Index]:
        return sorted(self.coeffs)

    def degree(self) -> int:
        """Largest ``max(|k|, |l|, |m|)`` over the support (0 for the zero element)."""
        return max((max(abs(i) for i in key) for key in self.coeffs), default=0)

    def coefficient(self, k: int, l: int, m: int) -> complex:
        return self.coeffs.get((k, l, m), 0j)

    def is_zero(self, atol: float = 0.0) -> bool:
        return all(abs(c) <= atol for c in self.coeffs.values())

    def in_base(self) -> bool:
        """True iff the element lies in the invariant subalgebra generated by U1, U2."""
        return all(key[2] == 0 for key in self.coeffs)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def allclose(self, other: "TorusElement", atol: float = 1e-12) -> bool:
        _check_theta(self, other)
        return (self - other).max_abs() <= atol

    def chop(self, atol: float = 1e-14) -> "TorusElement":
        return TorusElement(self.theta, {k: v for k, v in self.coeffs.items() if abs(v) > atol})

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other, self.theta)
        _check_theta(self, other)
        out = dict(self.coeffs)
        for key, value in other.coeffs.items():
            out[key] = out.get(key, 0j) + value
        return TorusElement(self.theta, out)

    __radd__ = __add__

    def __neg__(self):
        return TorusElement(self.theta, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-_coerce(other, self.theta))

    def __rsub__(self, other):
        return _coerce(other, self.theta) - self

    def __mul__(self, other):
        if isinstance(other, TorusElement):
            return multiply(self, other)
        return TorusElement(self.theta, {k: v * other for k, v in self.coeffs.items()})

    def __rmul__(self, other):
        if isinstance(other, TorusElement):
            return multiply(other, self)
        return TorusElement(self.theta, {k: other * v for k, v in self.coeffs.items()})

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are only defined for monomials; use star")
        out = TorusElement.one(self.theta)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, TorusElement):
            return NotImplemented
        return self.theta == other.theta and dict(self.coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash((self.theta, tuple(sorted(self.coeffs.items(), key=lambda kv: kv[0]))))

    def __repr__(self):
        if not self.coeffs:
            return "TorusElement(0)"
        terms = " + ".join(f"({v:.6g})U^{k}" for k, v in sorted(self.coeffs.items()))
        return f"TorusElement({terms})"

    def star(self) -> "TorusElement":
        return star(self)

    # serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "theta": self.theta.to_json(),
            "coeffs": [
                {"k": k, "l": l, "m": m, "re": v.real, "im": v.imag}
                for (k, l, m), v in sorted(self.coeffs.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping, theta: ThetaMatrix | None = None) -> "TorusElement":
        """Parse the JSON form.  ``theta`` is used when the document omits it."""
        if not isinstance(data, Mapping):
            raise ValueError("torus element must be a JSON object")
        if "theta" in data:
            th = ThetaMatrix.from_json(data["theta"])
            if theta is not None and th != theta:
                raise ThetaMismatchError(f"element theta {th} differs from {theta}")
        elif theta is not None:
            th = theta
        else:
            raise ValueError("torus element lacks 'theta'")
        coeffs: dict[Index, complex] = {}
        for i, entry in enumerate(data.get("coeffs", [])):
            try:
                key = (int(entry["k"]), int(entry["l"]), int(entry["m"]))
                value = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"coeffs[{i}]: malformed entry {entry!r}") from exc
            coeffs[key] = coeffs.get(key, 0j) + value
        return cls(th, coeffs)


@dataclass(frozen=True)
class GradedComponent:
    """Homogeneous part of an element: every index has third entry ``degree``."""

    degree: int
    element: TorusElement

    def __post_init__(self):
        if any(key[2] != self.degree for key in self.element.coeffs):
            raise ValueError(f"component is not homogeneous of degree {self.degree}")


def _coerce(x, theta: ThetaMatrix) -> TorusElement:
    if isinstance(x, TorusElement):
        return x
    return TorusElement(theta, {(0, 0, 0): complex(x)})


def _check_theta(a: TorusElement, b: TorusElement) -> None:
    if a.theta != b.theta:
        raise ThetaMismatchError(f"cannot combine elements over {a.theta} and {b.theta}")


def multiply(a: TorusElement, b: TorusElement) -> TorusElement:
    """Normal-ordered product ``a b``."""
    _check_theta(a, b)
    theta = a.theta
    out: dict[Index, complex] = {}
    for ka, va in a.coeffs.items():
        for kb, vb in b.coeffs.items():
            key = (ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2])
            out[key] = out.get(key, 0j) + va * vb * unit_phase(theta.product_phase_arg(ka, kb))
    return TorusElement(theta, out)


def star(a: TorusElement) -> TorusElement:
    """Antilinear anti-multiplicative involution with ``U_j^* = U_j^{-1}``."""
    theta = a.theta
    out: dict[Index, complex] = {}
    for (k, l, m), v in a.coeffs.items():
        # (U1^k U2^l U3^m)^* = U3^-m U2^-l U1^-k, brought back to normal order
        word = multiply(
            multiply(TorusElement.monomial(theta, 0, 0, -m), TorusElement.monomial(theta, 0, -l, 0)),
            TorusElement.monomial(theta, -k, 0, 0),
        )
        for key, w in word.coeffs.items():
            out[key] = out.get(key, 0j) + v.conjugate() * w
    return TorusElement(theta, out)


def trace(a: TorusElement) -> complex:
    """Canonical trace: the coefficient of the unit monomial."""
    return a.coefficient(0, 0, 0)


def derive(a: TorusElement, j: int) -> TorusElement:
    """The derivation ``delta_j``: multiplies the coefficient at ``(k, l, m)`` by index ``j``."""
    if j not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {j}")
    return TorusElement(a.theta, {key: key[j - 1] * v for key, v in a.coeffs.items()})


def grade_decompose(a: TorusElement) -> list[GradedComponent]:
    """Split ``a`` into U(1)-homogeneous parts (grading by the power of U3)."""
    parts: dict[int, dict[Index, complex]] = {}
    for key, v in a.coeffs.items():
        parts.setdefault(key[2], {})[key] = v
    return [GradedComponent(n, TorusElement(a.theta, parts[n])) for n in sorted(parts)]


def homogeneous_degree(a: TorusElement) -> int:
    """Degree of a nonzero homogeneous element; raises if ``a`` mixes degrees."""
    degrees = {key[2] for key in a.coeffs}
    if len(degrees) != 1:
        raise ValueError(f"element is not homogeneous (degrees {sorted(degrees)})")
    return degrees.pop()


def monomials(theta: ThetaMatrix, degree: int, base_only: bool = False) -> Iterator[TorusElement]:
    """All unit monomials with ``max(|k|,|l|,|m|) <= degree`` in lexicographic order."""
    rng = range(-degree, degree + 1)
    mrange = (0,) if base_only else rng
    for k, l, m in itertools.product(rng, rng, mrange):
        yield TorusElement.monomial(theta, k, l, m)


def random_element(
    theta: ThetaMatrix,
    degree: int,
    rng: random.Random,
    terms: int = 4,
    base_only: bool = False,
) -> TorusElement:
    """Element with ``terms`` random complex coefficients on random monomials."""
    coeffs: dict[Index, complex] = {}
    for _ in range(terms):
        k = rng.randint(-degree, degree)
        l = rng.randint(-degree, degree)
        m = 0 if base_only else rng.randint(-degree, degree)
        coeffs[(k, l, m)] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return TorusElement(theta, coeffs)


def selfadjoint_part(a: TorusElement) -> TorusElement:
    return (a + star(a)) * 0.5
