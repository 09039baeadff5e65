"""Projective layer: charts, transforms, domains, duality, Hausdorff."""

import numpy as np
import pytest

from asl.errors import (
    ChartMismatch,
    DegenerateDomain,
    GeomError,
    NotPositiveSpectrum,
    Overflow,
)
from asl.projective import (
    Chart,
    ConvexDomainApprox,
    HolonomyKind,
    ProjectivePoint,
    ProjectiveTransform,
    apply_transform,
    bulge_flow,
    chart_for,
    classify_holonomy,
    dual_domain,
    fubini_study_distance,
    hausdorff_distance,
    principal_triangle,
    reflection_j,
    twist_bulge_matrix,
)

INVOLUTION_TOL = 1e-6
N_RANDOM_POLYGONS = 20
SEED = 20260817

AFFINE_CHART = Chart([0.0, 0.0, 1.0])


def _random_convex_polygon(rng, n_points=40):
    # gaussian cloud hulls give generic convex polygons; resample until the
    # hull has enough vertices for the domain constructor
    from scipy.spatial import ConvexHull

    while True:
        pts = rng.standard_normal((n_points, 2))
        hull = ConvexHull(pts)
        uv = pts[hull.vertices]
        if len(uv) >= 8:
            return ConvexDomainApprox.from_chart_points(uv, AFFINE_CHART)


def test_chart_roundtrip():
    rng = np.random.default_rng(SEED)
    uv = rng.uniform(-3.0, 3.0, size=(50, 2))
    reps = AFFINE_CHART.lift(uv)
    back = AFFINE_CHART.dehomogenize(reps)
    assert np.max(np.abs(back - uv)) < 1e-12


def test_chart_for_picks_separating_direction():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(20):
        reps = rng.standard_normal((12, 3))
        reps[:, 2] += 4.0 * np.sign(reps[:, 2] + 1e-9)
        reps /= np.linalg.norm(reps, axis=1, keepdims=True)
        chart = chart_for(reps)
        assert float(np.min(np.abs(chart.heights(reps)))) > 0.0


def test_transform_compose_inverse():
    rng = np.random.default_rng(SEED + 2)
    done = 0
    while done < 10:
        m = rng.standard_normal((3, 3))
        if np.linalg.det(m) < 0.1:
            continue
        t = ProjectiveTransform(m)
        eye = (t @ t.inverse()).entries
        assert np.max(np.abs(eye - np.eye(3))) < 1e-10
        done += 1


def test_transform_rejects_orientation_reversal():
    with pytest.raises(ValueError):
        ProjectiveTransform(np.diag([1.0, -1.0, 1.0]))


def test_fubini_study_basics():
    a = ProjectivePoint([1.0, 2.0, 3.0])
    b = ProjectivePoint([-2.5, -5.0, -7.5])
    assert fubini_study_distance(a, a) < 1e-12
    assert fubini_study_distance(a, b) < 1e-12
    e3 = ProjectivePoint([0.0, 0.0, 1.0])
    e1 = ProjectivePoint([1.0, 0.0, 0.0])
    assert abs(fubini_study_distance(e3, e1) - np.pi / 2) < 1e-12


def test_principal_triangle_contains_barycenter():
    tri = principal_triangle()
    assert tri.contains(ProjectivePoint([1.0, 1.0, 1.0]))
    assert not tri.contains(ProjectivePoint([1.0, -0.2, 0.5]))


def test_reflection_j_is_unimodular_involution():
    j = reflection_j()
    assert abs(np.linalg.det(j.entries) - 1.0) < 1e-12
    sq = (j @ j).entries
    assert np.max(np.abs(sq - np.eye(3))) < 1e-12


def test_twist_bulge_matrix_unimodular():
    rng = np.random.default_rng(SEED + 3)
    for _ in range(20):
        sigma, tau = rng.uniform(-2.0, 2.0, size=2)
        m = twist_bulge_matrix(sigma, tau)
        assert abs(np.linalg.det(m.entries) - 1.0) < 1e-12
    with pytest.raises(Overflow):
        twist_bulge_matrix(1e9, 0.0)


def test_bulge_flow_diagonal():
    m = bulge_flow(8.0).entries
    w = np.log(8.0)
    expect = np.diag(np.exp([w / 3.0, -2.0 * w / 3.0, w / 3.0]))
    assert np.max(np.abs(m - expect)) < 1e-12
    with pytest.raises(ValueError):
        bulge_flow(-1.0)
    with pytest.raises(Overflow):
        bulge_flow(1e250)


def test_classify_holonomy_kinds():
    hyp = classify_holonomy(ProjectiveTransform(np.diag([4.0, 1.0, 0.25])))
    assert hyp.kind is HolonomyKind.HYPERBOLIC
    assert abs(np.prod(hyp.eigenvalues) - 1.0) < 1e-12

    quasi = classify_holonomy(ProjectiveTransform(np.diag([2.0, 2.0, 0.25])))
    assert quasi.kind is HolonomyKind.QUASI_HYPERBOLIC

    # full jordan block on the triple eigenvalue
    p = np.eye(3)
    p[0, 1] = 1.0
    p[1, 2] = 1.0
    para = classify_holonomy(ProjectiveTransform(p))
    assert para.kind is HolonomyKind.PARABOLIC
    assert para.eigenvalues == (1.0, 1.0, 1.0)

    # identity has a triple eigenvalue but no nilpotent part
    with pytest.raises(GeomError):
        classify_holonomy(ProjectiveTransform(np.eye(3)))

    rot = np.array([[np.cos(1.0), -np.sin(1.0), 0.0],
                    [np.sin(1.0), np.cos(1.0), 0.0],
                    [0.0, 0.0, 1.0]])
    with pytest.raises(NotPositiveSpectrum):
        classify_holonomy(ProjectiveTransform(rot))


def test_hausdorff_distance_symmetric_and_zero_on_self():
    tri = principal_triangle()
    est = hausdorff_distance(tri, tri)
    assert est.value < 1e-9

    # the bulge flow fixes the coordinate triangle, so shear it instead
    shear = ProjectiveTransform([[1.0, 0.3, 0.0], [0.0, 1.0, 0.2], [0.1, 0.0, 1.0]])
    moved = apply_transform(shear, tri)
    ab = hausdorff_distance(tri, moved)
    ba = hausdorff_distance(moved, tri)
    assert ab.value > 1e-3
    assert abs(ab.value - ba.value) <= ab.error_bound + ba.error_bound


def test_hausdorff_needs_common_chart():
    tri = principal_triangle()
    # a wide cap around [1, -1, 0]: any chart bounding it sits within 17
    # degrees of that axis, while charts bounding the triangle are interior
    # to the positive octant (45 degrees away), so no common chart exists
    c = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    u = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    v = np.array([0.0, 0.0, 1.0])
    th = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    rays = c + 3.2 * (np.cos(th)[:, None] * u + np.sin(th)[:, None] * v)
    cap = ConvexDomainApprox.from_rays(rays, Chart(c))
    with pytest.raises(ChartMismatch):
        hausdorff_distance(tri, cap)


def test_domain_json_roundtrip():
    tri = principal_triangle()
    back = ConvexDomainApprox.from_json(tri.to_json())
    assert hausdorff_distance(tri, back).value < 1e-9


def test_domain_svg_has_polygon():
    svg = principal_triangle().to_svg(overlay_triangle=True)
    assert "<svg" in svg and "polygon" in svg


def test_domain_rejects_nonconvex_input():
    uv = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.2], [2.0, 2.0],
                   [1.0, 2.2], [0.0, 2.0], [-0.3, 1.0], [-0.2, 0.4]])
    with pytest.raises(GeomError):
        ConvexDomainApprox.from_chart_points(uv, AFFINE_CHART)


def test_domain_needs_enough_samples():
    uv = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        ConvexDomainApprox.from_chart_points(uv, AFFINE_CHART)


def test_dual_involution_random_polygons():
    # acceptance-grade property: the dual of the dual reproduces the domain
    rng = np.random.default_rng(SEED + 4)
    for _ in range(N_RANDOM_POLYGONS):
        dom = _random_convex_polygon(rng)
        twice = dual_domain(dual_domain(dom))
        err = hausdorff_distance(dom, twice)
        assert err.value <= INVOLUTION_TOL, f"involution gap {err.value:.3e}"


def test_dual_reverses_inclusion():
    rng = np.random.default_rng(SEED + 5)
    for _ in range(N_RANDOM_POLYGONS):
        outer = _random_convex_polygon(rng)
        uv = outer.dehomogenized()
        ctr = uv.mean(axis=0)
        inner = ConvexDomainApprox.from_chart_points(ctr + 0.5 * (uv - ctr), outer.chart)
        douter = dual_domain(outer)
        dinner = dual_domain(inner)
        # inner inside outer, so the duals nest the other way around
        for p in douter.boundary:
            assert dinner.contains(p, tol=1e-7)


def test_dual_rejects_degenerate_domain():
    # near-collinear samples: either construction or the polar map must refuse
    t = np.linspace(0.0, 1.0, 12)
    uv = np.column_stack([t, 1e-13 * t * (1.0 - t)])
    with pytest.raises(GeomError):
        dual_domain(ConvexDomainApprox.from_chart_points(uv, AFFINE_CHART))


def test_apply_transform_matches_pointwise_action():
    tri = principal_triangle()
    g = twist_bulge_matrix(0.3, -0.2)
    moved = apply_transform(g, tri)
    expect = tri.reps() @ g.entries.T
    got = moved.reps()
    assert len(got) == len(expect)
    # each image ray appears among the samples up to sign and scale
    for r in expect[:8]:
        p = ProjectivePoint(r)
        d = min(fubini_study_distance(p, q) for q in moved.boundary)
        assert d < 1e-7


def test_disk_is_self_dual():
    # the circular cone x^2 + y^2 = z^2 is its own polar; with dense boundary
    # sampling the dual polygon stays within the discretization error
    th = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    uv = np.column_stack([np.cos(th), np.sin(th)])
    disk = ConvexDomainApprox.from_chart_points(uv, AFFINE_CHART)
    dual = dual_domain(disk)
    assert hausdorff_distance(disk, dual).value < 0.01
