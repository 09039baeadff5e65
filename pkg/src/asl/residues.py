"""Dictionary between cubic-differential residues and end holonomy spectra.

A residue R at a puncture pins down the eigenvalue exponents lambda_1 <=
lambda_2 <= lambda_3 of the end holonomy as the roots of the depressed cubic

    lambda^3 + p lambda + q = 0,
    p = -3 * 2^(-2/3) * |R|^(2/3),
    q = -Im R,

which always has three real roots here: 4 p^3 + 27 q^2 = -27 (Re R)^2 <= 0.
The holonomy eigenvalues are alpha_i = exp(2 pi lambda_i), and the conjugacy
type follows the sign structure of R: hyperbolic for Re R != 0, quasi
hyperbolic for purely imaginary R != 0, parabolic for R = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeomError
from .projective import HolonomyKind

__all__ = ["EndClassification", "eigenvalue_exponents", "classify_end"]

REAL_PART_CUTOFF = 1e-12
POLISH_TOL = 1e-13
SUM_TOL = 1e-10
PRODUCT_TOL = 1e-8


def eigenvalue_exponents(residue: complex) -> np.ndarray:
    """Ascending real roots of the residue cubic, summing to zero exactly."""
    R = complex(residue)
    if not (np.isfinite(R.real) and np.isfinite(R.imag)):
        raise ValueError("residue must be finite")
    if R == 0:
        return np.zeros(3)
    p = -3.0 * 2.0 ** (-2.0 / 3.0) * abs(R) ** (2.0 / 3.0)
    q = -R.imag
    # trigonometric form for three real roots, then a short Newton polish
    m = 2.0 * np.sqrt(-p / 3.0)
    arg = np.clip(3.0 * q / (2.0 * p) * np.sqrt(-3.0 / p), -1.0, 1.0)
    theta = np.arccos(arg)
    roots = m * np.cos(theta / 3.0 - 2.0 * np.pi * np.arange(3) / 3.0)
    scale = max(1.0, abs(p) ** 1.5, abs(q))
    for _ in range(4):
        f = roots ** 3 + p * roots + q
        fp = 3.0 * roots ** 2 + p
        step = np.where(np.abs(fp) > 1e-8 * scale, f / np.where(fp == 0, 1.0, fp), 0.0)
        roots = roots - step
    roots = roots - roots.mean()
    res = np.max(np.abs(roots ** 3 + p * roots + q))
    if res > POLISH_TOL * scale:
        raise GeomError(f"cubic root polish stalled at residual {res:.3e}")
    return np.sort(roots)


@dataclass(frozen=True)
class EndClassification:
    """End holonomy data read off a residue value."""

    residue: complex
    kind: HolonomyKind
    exponents: tuple
    eigenvalues: tuple
    bulge_sign: int

    def __post_init__(self):
        ex = np.asarray(self.exponents, dtype=float)
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ex.shape != (3,) or ev.shape != (3,):
            raise ValueError("need 3 exponents and 3 eigenvalues")
        if abs(float(ex.sum())) > SUM_TOL:
            raise ValueError(f"exponents must sum to zero, got {ex.sum():.3e}")
        if abs(float(np.prod(ev)) - 1.0) > PRODUCT_TOL:
            raise ValueError(f"eigenvalue product must be 1, got {np.prod(ev)!r}")
        object.__setattr__(self, "exponents", tuple(float(x) for x in ex))
        object.__setattr__(self, "eigenvalues", tuple(float(x) for x in ev))

    def to_json(self) -> dict:
        return {
            "schema": "asl.end_classification@1",
            "residue": [self.residue.real, self.residue.imag],
            "kind": self.kind.value,
            "exponents": list(self.exponents),
            "eigenvalues": list(self.eigenvalues),
            "bulge_sign": self.bulge_sign,
        }


def classify_end(residue: complex) -> EndClassification:
    """Conjugacy class of the end holonomy attached to a residue."""
    R = complex(residue)
    exps = eigenvalue_exponents(R)
    if abs(R) <= REAL_PART_CUTOFF:
        kind = HolonomyKind.PARABOLIC
    elif abs(R.real) <= REAL_PART_CUTOFF:
        kind = HolonomyKind.QUASI_HYPERBOLIC
    else:
        kind = HolonomyKind.HYPERBOLIC
    if abs(R.real) <= REAL_PART_CUTOFF:
        bulge = 0
    else:
        bulge = 1 if R.real > 0 else -1
    return EndClassification(
        residue=R,
        kind=kind,
        exponents=tuple(exps),
        eigenvalues=tuple(np.exp(2.0 * np.pi * exps)),
        bulge_sign=bulge,
    )
