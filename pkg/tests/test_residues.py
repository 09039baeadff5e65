"""Residue dictionary: cubic exponents and end holonomy classes."""

import numpy as np
import pytest

from asl.projective import HolonomyKind
from asl.residues import EndClassification, classify_end, eigenvalue_exponents

SEED = 314159
N_RANDOM = 100
INVERSION_TOL = 1e-8

# closed forms for the two landmark residues
EXP_REAL_ONE = np.sqrt(3.0) * 2.0 ** (-1.0 / 3.0)     # R = 1: +/- this and 0
EXP_IMAG_DOUBLE = -(2.0 ** (-1.0 / 3.0))              # R = i: double root
EXP_IMAG_TOP = 2.0 ** (2.0 / 3.0)


def _cubic_residual(R, lam):
    p = -3.0 * 2.0 ** (-2.0 / 3.0) * abs(R) ** (2.0 / 3.0)
    q = -R.imag
    return lam ** 3 + p * lam + q


def test_exponents_real_residue_closed_form():
    exps = eigenvalue_exponents(1.0 + 0.0j)
    expect = np.array([-EXP_REAL_ONE, 0.0, EXP_REAL_ONE])
    assert np.max(np.abs(exps - expect)) < 1e-14


def test_exponents_imaginary_residue_closed_form():
    exps = eigenvalue_exponents(1.0j)
    expect = np.array([EXP_IMAG_DOUBLE, EXP_IMAG_DOUBLE, EXP_IMAG_TOP])
    assert np.max(np.abs(exps - expect)) < 1e-12


def test_exponents_zero_residue():
    assert np.all(eigenvalue_exponents(0.0) == 0.0)


def test_exponents_satisfy_cubic_and_sum_to_zero():
    rng = np.random.default_rng(SEED)
    for _ in range(N_RANDOM):
        R = complex(*rng.uniform(-3.0, 3.0, size=2))
        if abs(R) < 1e-6:
            continue
        exps = eigenvalue_exponents(R)
        assert abs(exps.sum()) < 1e-12
        assert np.all(np.diff(exps) >= 0.0)
        scale = max(1.0, abs(R))
        assert np.max(np.abs(_cubic_residual(R, exps))) < 1e-10 * scale


def test_classify_end_kinds():
    assert classify_end(0.0).kind is HolonomyKind.PARABOLIC
    assert classify_end(1.0j).kind is HolonomyKind.QUASI_HYPERBOLIC
    assert classify_end(-0.7j).kind is HolonomyKind.QUASI_HYPERBOLIC
    assert classify_end(1.0).kind is HolonomyKind.HYPERBOLIC
    assert classify_end(0.5 + 0.5j).kind is HolonomyKind.HYPERBOLIC


def test_classify_end_bulge_sign():
    assert classify_end(2.0).bulge_sign == 1
    assert classify_end(-2.0).bulge_sign == -1
    assert classify_end(3.0j).bulge_sign == 0
    assert classify_end(0.0).bulge_sign == 0


def test_classify_end_eigenvalues_exponentiate():
    cls = classify_end(1.0)
    expect = np.exp(2.0 * np.pi * np.array([-EXP_REAL_ONE, 0.0, EXP_REAL_ONE]))
    assert np.max(np.abs(np.array(cls.eigenvalues) - expect) / expect) < 1e-12
    assert abs(np.prod(cls.eigenvalues) - 1.0) < 1e-8


def test_classify_end_imaginary_spot_values():
    cls = classify_end(1.0j)
    assert abs(cls.eigenvalues[0] - 0.006826334109) < 1e-9
    assert abs(cls.eigenvalues[2] - 21459.7628714) < 1e-4 * 21459.0


def test_sign_flip_inverts_spectrum():
    # acceptance-grade property: the ends of a cylinder seen from its two
    # sides have mutually inverse holonomy spectra
    rng = np.random.default_rng(SEED + 1)
    for _ in range(N_RANDOM):
        R = complex(*rng.uniform(-3.0, 3.0, size=2))
        if abs(R) < 1e-3:
            continue
        ev_pos = np.array(classify_end(R).eigenvalues)
        ev_neg = np.array(classify_end(-R).eigenvalues)
        inv = np.sort(1.0 / ev_neg)
        rel = np.max(np.abs(ev_pos - inv) / np.maximum(ev_pos, inv))
        assert rel < INVERSION_TOL, f"R={R}: relative gap {rel:.3e}"


def test_end_classification_validates_shapes():
    with pytest.raises(ValueError):
        EndClassification(residue=1.0, kind=HolonomyKind.HYPERBOLIC,
                          exponents=(1.0, -1.0), eigenvalues=(1.0, 1.0, 1.0),
                          bulge_sign=1)
    with pytest.raises(ValueError):
        EndClassification(residue=1.0, kind=HolonomyKind.HYPERBOLIC,
                          exponents=(1.0, 1.0, 1.0), eigenvalues=(1.0, 1.0, 1.0),
                          bulge_sign=1)


def test_classification_json_fields():
    doc = classify_end(0.25 + 1.5j).to_json()
    assert doc["kind"] == "hyperbolic"
    assert doc["residue"] == [0.25, 1.5]
    assert len(doc["exponents"]) == 3 and len(doc["eigenvalues"]) == 3
    assert doc["bulge_sign"] == 1


def test_rejects_nonfinite_residue():
    with pytest.raises(ValueError):
        eigenvalue_exponents(float("nan"))
