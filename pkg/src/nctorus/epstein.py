"""Epstein zeta functions of (shifted) cubic lattices and their residue at ``s = d``.

``Z(s) = sum_{x in Z^d + eps, x != 0} |x|^-s`` is evaluated through the Ewald
(theta-function) splitting of its completed form

    pi^(-s/2) Gamma(s/2) Z(s)
      = sum_{x != 0} (pi |x|^2)^(-s/2) Gamma(s/2, pi |x|^2)
      + sum_{k != 0} e^(2 pi i k.eps) (pi |k|^2)^((s-d)/2) Gamma((d-s)/2, pi |k|^2)
      + 2/(s-d) - [eps = 0] 2/s,

which converges like ``exp(-pi r^2)`` in both lattice sums.  The residue is then
read off numerically from ``h Z(d + h)`` as ``h -> 0``; it is not taken from the
pole term of the formula above.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Sequence

import mpmath as mp
import numpy as np


def _lattice(d: int, radius: int, shift: Sequence[float]) -> np.ndarray:
    pts = np.array(list(itertools.product(range(-radius, radius + 1), repeat=d)), dtype=float)
    return pts + np.asarray(shift, dtype=float)


def epstein_zeta(s: float, d: int, shift: Sequence[float] | None = None, radius: int = 4) -> float:
    """``sum |x|^-s`` over ``Z^d + shift`` minus the origin, for real ``s != d``."""
    shift = tuple(float(e) for e in (shift if shift is not None else (0.0,) * d))
    if len(shift) != d:
        raise ValueError("shift must have d entries")
    s = mp.mpf(s)
    direct = _lattice(d, radius, shift)
    r2 = np.sum(direct**2, axis=1)
    total = mp.mpf(0)
    for v in r2:
        if v < 1e-24:
            continue
        x = mp.pi * v
        total += x ** (-s / 2) * mp.gammainc(s / 2, x)
    dual = _lattice(d, radius, (0.0,) * d)
    k2 = np.sum(dual**2, axis=1)
    for kvec, v in zip(dual, k2):
        if v == 0:
            continue
        x = mp.pi * v
        phase = mp.cos(2 * mp.pi * float(np.dot(kvec, shift)))
        total += phase * x ** ((s - d) / 2) * mp.gammainc((d - s) / 2, x)
    total += 2 / (s - d)
    if all(e == 0.0 for e in shift):
        total -= 2 / s
    return float(total * mp.pi ** (s / 2) / mp.gamma(s / 2))


@lru_cache(maxsize=None)
def epstein_residue(d: int, shift: tuple[float, ...] | None = None, h0: float = 1e-2, levels: int = 4) -> float:
    """Residue of ``Z`` at ``s = d`` by Richardson extrapolation of ``h Z(d + h)``, ``h = h0 / 2^i``."""
    table = [h0 / 2**i * epstein_zeta(d + h0 / 2**i, d, shift) for i in range(levels)]
    for order in range(1, levels):
        table = [(2**order * table[i + 1] - table[i]) / (2**order - 1) for i in range(len(table) - 1)]
    return table[0]


def spinor_integral_oracle(d: int, shift: tuple[float, ...] | None = None, multiplicity: int = 2) -> float:
    """Predicted ``Res Tr |D|^-s`` at ``s = d`` for the flat Dirac operator: ``multiplicity * Res Z``."""
    return multiplicity * epstein_residue(d, shift)
