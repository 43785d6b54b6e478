"""Canonical map of the U(1) Hopf-Galois extension and the kernel of the one-form map."""
from __future__ import annotations

import itertools
from collections import defaultdict
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .algebra import (
    ThetaMatrix,
    TorusElement,
    grade_decompose,
    monomials,
    multiply,
)
from .connections import Pair, canonicalize
from .reports import AxiomReport, CheckResult

KERNEL_TOL = 1e-10


class PreconditionError(ValueError):
    """The supplied pairs do not represent a zero one-form."""


def canonical_map(a_prime: TorusElement, a: TorusElement) -> dict[int, TorusElement]:
    """``chi(a' (x) a) = sum_n a' a_n (x) z^n`` as ``{n: a' a_n}``; zero terms are dropped."""
    out = {}
    for comp in grade_decompose(a):
        val = multiply(a_prime, comp.element)
        if not val.is_zero():
            out[comp.degree] = val
    return out


def hopf_galois_witness(n: int, theta: ThetaMatrix | None = None) -> tuple[TorusElement, TorusElement]:
    """Preimage ``(U3^-n, U3^n)`` of ``1 (x) z^n``."""
    theta = theta if theta is not None else ThetaMatrix(0.0, 0.0, 0.0)
    pair = (TorusElement.monomial(theta, 0, 0, -n), TorusElement.monomial(theta, 0, 0, n))
    image = canonical_map(*pair)
    expected = {n: TorusElement.one(theta)}
    assert image.keys() == expected.keys() and image[n].allclose(expected[n]), image
    return pair


def _image_matrix(images: list[dict[int, TorusElement]]) -> np.ndarray:
    keys = sorted({(n, key) for img in images for n, el in img.items() for key in el.coeffs})
    row = {k: i for i, k in enumerate(keys)}
    mat = np.zeros((len(keys), len(images)), dtype=complex)
    for j, img in enumerate(images):
        for n, el in img.items():
            for key, v in el.coeffs.items():
                mat[row[(n, key)], j] = v
    return mat


def injectivity_check(theta: ThetaMatrix, degree: int = 3) -> dict:
    """Rank tests of ``chi`` on a truncation of ``A (x)_B A``.

    Every monomial tensor reduces over ``B`` to a multiple of ``U^alpha (x) U3^n``,
    so those form a basis; ``chi`` is injective on the truncation iff their images
    have full rank.  As a cross-check, on all monomial pairs of degree ``<= 1`` the
    rank of the images must equal the number of distinct reduced basis elements.
    """
    basis = [(a, TorusElement.monomial(theta, 0, 0, n))
             for a in monomials(theta, degree) for n in range(-degree, degree + 1)]
    mat = _image_matrix([canonical_map(p, q) for p, q in basis])
    basis_rank = int(np.linalg.matrix_rank(mat))

    mons = list(monomials(theta, 1))
    pairs = list(itertools.product(mons, mons))
    reduced = set()
    for p, q in pairs:
        (a,), (b,) = p.support(), q.support()
        reduced.add((a[0] + b[0], a[1] + b[1], a[2], b[2]))
    span = _image_matrix([canonical_map(p, q) for p, q in pairs])
    span_rank = int(np.linalg.matrix_rank(span))
    return {
        "basis_size": len(basis),
        "basis_rank": basis_rank,
        "pairs": len(pairs),
        "reduced_dimension": len(reduced),
        "image_rank": span_rank,
        "injective": basis_rank == len(basis) and span_rank == len(reduced),
    }


def _kernel_blocks(theta: ThetaMatrix, degree: int):
    """Group monomial pairs by total momentum; ``p [D, q]`` and ``p q`` are supported there."""
    groups = defaultdict(list)
    mons = list(monomials(theta, degree))
    for p, q in itertools.product(mons, mons):
        mu = tuple(x + y for x, y in zip(p.support()[0], q.support()[0]))
        groups[mu].append((p, q))
    return groups


def _block_constraints(pairs: list[Pair], mu) -> np.ndarray:
    """Rows: coefficient of ``U^mu`` in ``p q`` and in ``p delta_j q``."""
    rows = np.zeros((4, len(pairs)), dtype=complex)
    for i, (p, q) in enumerate(pairs):
        c = multiply(p, q).coefficient(*mu)
        rows[0, i] = c
        for j in range(3):
            rows[j + 1, i] = c * q.support()[0][j]
    return rows


def sample_kernel(theta: ThetaMatrix, n_samples: int = 10, degree: int = 3, seed: int = 0,
                  terms: int = 3) -> list[list[Pair]]:
    """Random elements of ``N`` = kernel of the multiplication map and of the one-form map.

    Pairs of monomials of degree ``<= degree`` are grouped by total momentum; in
    each group both maps reduce to four linear functionals, whose null space is
    computed exactly.  Each sample sums random null vectors from ``terms`` groups.
    """
    rng = np.random.default_rng(seed)
    groups = _kernel_blocks(theta, degree)
    keys = sorted(k for k, v in groups.items() if len(v) > 4)
    samples = []
    for _ in range(n_samples):
        chosen = rng.choice(len(keys), size=min(terms, len(keys)), replace=False)
        sample: list[Pair] = []
        for idx in sorted(chosen):
            mu = keys[idx]
            pairs = groups[mu]
            null = sla.null_space(_block_constraints(pairs, mu))
            x = null @ (rng.normal(size=null.shape[1]) + 1j * rng.normal(size=null.shape[1]))
            sample.extend((p * x[i], q) for i, (p, q) in enumerate(pairs) if abs(x[i]) > 1e-14)
        samples.append(sample)
    return samples


def kernel_image_residuals(pairs: Sequence[Pair]) -> tuple[float, float]:
    """``(|sum_n c_n|, |sum_n n c_n|)`` with ``c_n = sum_i p_i q_i^(n)``."""
    theta = pairs[0][0].theta
    total = TorusElement.zero(theta)
    weighted = TorusElement.zero(theta)
    for p, q in pairs:
        for n, val in canonical_map(p, q).items():
            total = total + val
            weighted = weighted + val * n
    return total.max_abs(), weighted.max_abs()


def kernel_image_check(pairs: Sequence[Pair], atol: float = KERNEL_TOL) -> bool:
    """Is ``chi(sum p_i (x) q_i)`` in ``A (x) (ker eps)^2``?

    Requires ``sum p_i [D, q_i] = 0``.  The ``z``-polynomial ``sum_n c_n z^n``
    is divisible by ``(z - 1)^2`` iff it and its derivative vanish at ``z = 1``.
    """
    if not pairs:
        return True
    form = canonicalize(pairs)
    if not form.is_zero(atol):
        raise PreconditionError(
            f"sum p [D, q] is not zero: c1={form.c1!r}, c2={form.c2!r}, c3={form.c3!r}"
        )
    r0, r1 = kernel_image_residuals(pairs)
    return r0 <= atol and r1 <= atol


def hopf_galois_report(theta: ThetaMatrix, n_max: int = 3, degree: int = 3, seed: int = 0,
                       n_samples: int = 10) -> AxiomReport:
    report = AxiomReport("hopf-galois")
    worst = 0.0
    for n in range(-n_max, n_max + 1):
        a_prime, a = hopf_galois_witness(n, theta)
        img = canonical_map(a_prime, a)
        worst = max(worst, (img[n] - TorusElement.one(theta)).max_abs())
    report.add(CheckResult.evaluate("surjectivity witness", "chi(U3^-n (x) U3^n) = 1 (x) z^n", worst, 1e-12))

    inj = injectivity_check(theta, min(degree, 2))
    report.add(CheckResult.evaluate("injectivity on basis", "rank chi(U^a (x) U3^n) = #basis",
                                    inj["basis_size"] - inj["basis_rank"], 0.5))
    report.add(CheckResult.evaluate("injectivity on spanning set", "rank chi = dim A (x)_B A",
                                    abs(inj["reduced_dimension"] - inj["image_rank"]), 0.5))

    r_form = r0 = r1 = 0.0
    for sample in sample_kernel(theta, n_samples=n_samples, degree=degree, seed=seed):
        r_form = max(r_form, canonicalize(sample).max_abs())
        a, b = kernel_image_residuals(sample)
        r0, r1 = max(r0, a), max(r1, b)
    report.add(CheckResult.evaluate("sampled kernel one-form", "sum p [D, q] = 0", r_form, KERNEL_TOL))
    report.add(CheckResult.evaluate("kernel image at z=1", "sum_n c_n = 0", r0, KERNEL_TOL))
    report.add(CheckResult.evaluate("kernel image derivative", "sum_n n c_n = 0", r1, KERNEL_TOL))
    report.metadata.update(theta=theta.to_json(), injectivity=inj, n_max=n_max, degree=degree, seed=seed)
    return report
