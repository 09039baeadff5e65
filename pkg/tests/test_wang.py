"""Integrable-equation solver: 1-D backgrounds and the 2-D disk truncation."""

import numpy as np
import pytest

from asl.errors import BadWindow, GeomError, ZeroOnBoundary, ZeroResidue
from asl.wang import (
    BackgroundKind,
    check_sub_super,
    constant_solution,
    make_background,
    solve_wang_1d,
    solve_wang_2d,
)

CORE = float(np.exp(-1.0))
THIRD_LOG_TWO = np.log(2.0) / 3.0

# frozen at n = 4001 reference, t = 1e-3 collar, residue 0.3
REFINE_ERR_501 = 7.021964317788232e-07
REFINE_ERR_1001 = 1.672080363890327e-07

# frozen center value for the linear cubic at h = 1/8, truncation 8
LINEAR_CUBIC_CENTER = -0.046054939677054096


def test_constant_solution_closed_forms():
    assert constant_solution(1.0) == pytest.approx(THIRD_LOG_TWO, abs=1e-15)
    assert constant_solution(2.0) == pytest.approx(np.log(2.0), abs=1e-15)
    # the balance only sees |R|
    assert constant_solution(1.0j) == pytest.approx(constant_solution(-1.0), abs=1e-15)
    with pytest.raises(ZeroResidue):
        constant_solution(0.0)


def test_background_invariants():
    cusp = make_background("cusp", n=2001, depth=8.0)
    assert cusp.kind is BackgroundKind.CUSP
    assert float(np.max(np.abs(cusp.rho - 1.0 / np.abs(cusp.x)))) < 1e-14
    assert float(np.max(np.abs(cusp.kappa + 1.0))) < 1e-8

    col = make_background("collar", n=2001, t=1e-3, c=CORE)
    assert col.kind is BackgroundKind.COLLAR
    assert float(np.max(np.abs(col.kappa + 1.0))) < 1e-8
    assert set(col.params) >= {"t", "c", "K"}


def test_collar_window_constant():
    bg = make_background("collar", n=101, t=float(np.exp(-10.0)), c=CORE)
    t, c = bg.params["t"], bg.params["c"]
    want = (np.log(t) / np.pi) * np.arcsin(np.pi * 2.0 * np.log(c) / np.log(t))
    assert bg.params["K"] == pytest.approx(want, abs=1e-12)
    assert bg.params["K"] == pytest.approx(-2.1625653025850906, abs=1e-12)


def test_background_validation():
    with pytest.raises(ValueError):
        make_background("collar", t=0.5, c=CORE)      # t >= c^2
    with pytest.raises(ValueError):
        make_background("collar", t=1e-3, c=1.5)      # core outside (0, 1)
    with pytest.raises(BadWindow):
        # t < c^2 holds but the matching flat window is undefined
        make_background("collar", t=float(np.exp(-3.0)), c=CORE)
    with pytest.raises(ValueError):
        make_background("vortex")


def test_flat_solve_is_exactly_constant():
    bg = make_background("flat", n=501)
    sol = solve_wang_1d(bg, 1.0 + 0.0j)
    assert float(np.max(np.abs(sol.u - THIRD_LOG_TWO))) < 1e-12
    doc = sol.to_json()
    assert doc["schema"] == "asl.wang_1d@1"
    assert doc["u_min"] == pytest.approx(THIRD_LOG_TWO)
    assert doc["u_max"] == pytest.approx(THIRD_LOG_TWO)


def test_cusp_zero_residue_gives_background():
    bg = make_background("cusp", n=2001, depth=8.0)
    sol = solve_wang_1d(bg, 0.0)
    assert float(np.max(np.abs(sol.u))) < 1e-12


def test_cusp_and_collar_factors_stay_nonnegative():
    cusp = make_background("cusp", n=2001, depth=8.0)
    sol = solve_wang_1d(cusp, 0.3 + 0.0j)
    assert float(sol.u.min()) >= -1e-8
    col = make_background("collar", n=2001, t=1e-3, c=CORE)
    solc = solve_wang_1d(col, 0.3 + 0.0j)
    assert float(solc.u.min()) >= -1e-8
    assert solc.bracket_constant is not None and solc.bracket_constant > 0.0


def test_sub_super_bracket_reports():
    col = make_background("collar", n=2001, t=1e-3, c=CORE)
    sol = solve_wang_1d(col, 0.3 + 0.0j)
    rep = check_sub_super(col, 0.3 + 0.0j, sol.u)
    assert rep.sub_ok and rep.super_ok and rep.candidate_inside
    assert rep.bracket_constant > 0.0

    # on a grafted window the background curvature vanishes in the middle,
    # so zero is not a subsolution there; the upper barrier still holds
    gr = make_background("grafted_flat", n=2001, t=1e-3, c=CORE)
    solg = solve_wang_1d(gr, 0.3 + 0.0j)
    repg = check_sub_super(gr, 0.3 + 0.0j, solg.u)
    assert not repg.sub_ok
    assert repg.super_ok and repg.candidate_inside
    assert float(solg.u.min()) >= -1e-8

    with pytest.raises(ValueError):
        check_sub_super(col, 0.3 + 0.0j, np.zeros(7))


def test_collar_solution_second_order_in_mesh():
    ref_bg = make_background("collar", n=4001, t=1e-3, c=CORE)
    ref = solve_wang_1d(ref_bg, 0.3 + 0.0j)
    errs = {}
    for n in (501, 1001):
        bg = make_background("collar", n=n, t=1e-3, c=CORE)
        sol = solve_wang_1d(bg, 0.3 + 0.0j)
        ui = np.interp(bg.x, ref_bg.x, ref.u)
        errs[n] = float(np.max(np.abs(sol.u - ui)))
    assert errs[501] == pytest.approx(REFINE_ERR_501, rel=1e-6)
    assert errs[1001] == pytest.approx(REFINE_ERR_1001, rel=1e-6)
    assert errs[501] / errs[1001] > 3.0


def test_2d_constant_cubic_is_exact():
    sol = solve_wang_2d([2.0], 6.0, 1.0 / 4.0)
    assert float(np.max(np.abs(sol.u - np.log(2.0)))) < 1e-12
    doc = sol.to_json()
    assert doc["schema"] == "asl.wang_2d@1"
    assert doc["u_center"] == pytest.approx(np.log(2.0))


def test_2d_linear_cubic_center_regression():
    sol = solve_wang_2d([0.0, 1.0], 8.0, 1.0 / 8.0)
    assert sol.to_json()["u_center"] == pytest.approx(LINEAR_CUBIC_CENTER, abs=1e-12)
    assert sol.residual_norm < 1e-8


def test_2d_linear_cubic_is_radial():
    sol = solve_wang_2d([0.0, 1.0], 8.0, 1.0 / 8.0)
    h = sol.domain.h
    ij = np.rint(sol.domain.xy / h).astype(int)
    ring = ij[:, 0] ** 2 + ij[:, 1] ** 2 == 400
    assert int(np.count_nonzero(ring)) >= 8
    assert float(sol.u[ring].max() - sol.u[ring].min()) < 1e-6


def test_2d_truncation_radius_converged():
    centers = []
    for radius in (6.0, 8.0, 10.0):
        sol = solve_wang_2d([0.0, 1.0], radius, 1.0 / 4.0)
        centers.append(sol.to_json()["u_center"])
    assert abs(centers[1] - centers[0]) < 1e-3
    assert abs(centers[2] - centers[1]) < 1e-3


def test_2d_rejects_zero_cubic():
    with pytest.raises(ZeroOnBoundary):
        solve_wang_2d([0.0, 0.0], 6.0, 1.0 / 4.0)


def test_value_interpolation_matches_nodes():
    sol = solve_wang_2d([0.0, 1.0], 6.0, 1.0 / 4.0)
    k = sol.domain.node_at(2, 3)
    x, y = sol.domain.xy[k]
    assert sol.value_at(x, y) == pytest.approx(float(sol.u[k]), abs=1e-14)
    with pytest.raises(ValueError):
        sol.value_at(100.0, 0.0)


def test_solver_rejects_unresolvable_tolerance():
    bg = make_background("flat", n=101)
    with pytest.raises((ValueError, GeomError)):
        solve_wang_1d(bg, 1.0, tol=1e-30)
