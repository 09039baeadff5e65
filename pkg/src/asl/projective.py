"""Projective linear algebra on RP^2 and properly convex domains.

Transforms are unimodular 3x3 matrices acting on homogeneous coordinates,
domains are ordered boundary ray samples together with an affine chart in
which the region is bounded, and distances are measured in the Fubini-Study
metric (angle between rays).

Example:

    T = principal_triangle()
    M = bulge_flow(0.01)
    d, err = hausdorff_distance(apply_transform(M, T), T)

The special matrices follow the usual conventions: the twist/bulge family is
M_{sigma,tau} = diag(e^{-sigma-tau}, e^{2 tau}, e^{sigma-tau}), the bulge flow
is M_s = diag(s^{1/3}, s^{-2/3}, s^{1/3}), and the reflection J across the
principal geodesic is fixed as diag(1, -1, 1) in standard coordinates (any
such choice is conventional; twist/bulge values are relative to this one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    ChartMismatch,
    DegenerateDomain,
    GeomError,
    NotPositiveSpectrum,
    NotProperlyConvex,
    Overflow,
)

__all__ = [
    "ProjectiveTransform",
    "ProjectivePoint",
    "Chart",
    "ConvexDomainApprox",
    "HolonomyKind",
    "HolonomyClass",
    "HausdorffEstimate",
    "fubini_study_distance",
    "hausdorff_distance",
    "classify_holonomy",
    "principal_triangle",
    "twist_bulge_matrix",
    "bulge_flow",
    "reflection_j",
    "apply_transform",
    "dual_domain",
    "chart_for",
]

DET_REL_TOL = 1e-12
EXPONENT_LIMIT = 300.0
BULGE_RANGE = (1e-200, 1e200)
DEFAULT_CLASSIFY_TOL = 1e-6
MAX_CLASSIFY_TOL = 1e-2
HALFSPACE_MARGIN = 1e-9
DENSE_SAMPLES = 2048


# ---------------------------------------------------------------------------
# points and transforms
# ---------------------------------------------------------------------------

class ProjectivePoint:
    """A point of RP^2 held as a unit-norm homogeneous representative."""

    __slots__ = ("rep",)

    def __init__(self, rep: Sequence[float]):
        r = np.asarray(rep, dtype=float).reshape(3)
        if not np.all(np.isfinite(r)):
            raise ValueError("point representative must be finite")
        n = float(np.linalg.norm(r))
        if n == 0.0:
            raise ValueError("point representative must be nonzero")
        r = r / n
        r.flags.writeable = False
        self.rep = r

    def __repr__(self):
        return f"ProjectivePoint([{self.rep[0]:.6g}, {self.rep[1]:.6g}, {self.rep[2]:.6g}])"


class ProjectiveTransform:
    """Unimodular 3x3 real matrix acting on RP^2.

    Construction normalizes by the cube root of the determinant and rejects
    non-orientation-preserving input (det <= 0).
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        m = np.asarray(entries, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        det = float(np.linalg.det(m))
        if det <= 0.0:
            raise ValueError(f"determinant must be positive, got {det:.6g}")
        m = m / np.cbrt(det)
        det = float(np.linalg.det(m))
        if abs(det - 1.0) > 1e3 * DET_REL_TOL:
            # cbrt normalization leaves rounding of order eps; anything worse
            # means the input was too ill-conditioned to normalize reliably
            raise ValueError(f"could not normalize determinant (got {det!r})")
        m.flags.writeable = False
        self.entries = m

    def __matmul__(self, other: "ProjectiveTransform") -> "ProjectiveTransform":
        return ProjectiveTransform(self.entries @ other.entries)

    def inverse(self) -> "ProjectiveTransform":
        return ProjectiveTransform(np.linalg.inv(self.entries))

    def apply(self, p: ProjectivePoint) -> ProjectivePoint:
        return ProjectivePoint(self.entries @ p.rep)

    def to_json(self) -> dict:
        return {
            "schema": "asl.transform@1",
            "entries": [float(x) for x in self.entries.reshape(9)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProjectiveTransform":
        return cls(np.asarray(data["entries"], dtype=float).reshape(3, 3))

    def __repr__(self):
        rows = "; ".join(
            " ".join(f"{x:.6g}" for x in row) for row in self.entries
        )
        return f"ProjectiveTransform([{rows}])"


def fubini_study_distance(p: ProjectivePoint, q: ProjectivePoint) -> float:
    """Angle in [0, pi/2] between the projective points p and q."""
    c = abs(float(p.rep @ q.rep))
    return float(np.arccos(min(c, 1.0)))


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------

_AXIS_FRAMES = {
    0: (1, 2),  # d = e1 -> plane frame (e2, e3)
    1: (2, 0),  # d = e2 -> (e3, e1)
    2: (0, 1),  # d = e3 -> (e1, e2)
}


class Chart:
    """Affine chart of RP^2: the plane <x, d> = 1 for a unit direction d."""

    __slots__ = ("direction", "_eu", "_ev")

    def __init__(self, direction: Sequence[float]):
        d = np.asarray(direction, dtype=float).reshape(3)
        n = float(np.linalg.norm(d))
        if not np.all(np.isfinite(d)) or n == 0.0:
            raise ValueError("chart direction must be a nonzero finite vector")
        d = d / n
        # right-handed frame (e_u, e_v, d); axis directions keep the cyclic
        # convention so that d = e3 dehomogenizes to the familiar (x, y) plane
        axis = None
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            if abs(abs(d @ e) - 1.0) < 1e-12:
                axis = (k, 1.0 if d[k] > 0 else -1.0)
                break
        if axis is not None:
            k, sign = axis
            i, j = _AXIS_FRAMES[k]
            eu = np.zeros(3)
            ev = np.zeros(3)
            if sign > 0:
                eu[i] = 1.0
                ev[j] = 1.0
            else:
                eu[j] = 1.0  # swapped pair keeps (e_u, e_v, d) right-handed
                ev[i] = 1.0
            d = sign * np.eye(3)[k]
        else:
            a = np.zeros(3)
            a[int(np.argmin(np.abs(d)))] = 1.0
            eu = a - (a @ d) * d
            eu = eu / np.linalg.norm(eu)
            ev = np.cross(d, eu)
        for v in (d, eu, ev):
            v.flags.writeable = False
        self.direction = d
        self._eu = eu
        self._ev = ev

    def heights(self, reps: np.ndarray) -> np.ndarray:
        """Signed chart heights <x, d> of an (n, 3) array of representatives."""
        return np.asarray(reps, dtype=float) @ self.direction

    def dehomogenize(self, reps: np.ndarray) -> np.ndarray:
        """Map (n, 3) representatives with positive height to (n, 2) chart coords."""
        reps = np.asarray(reps, dtype=float)
        w = reps @ self.direction
        return np.stack([reps @ self._eu / w, reps @ self._ev / w], axis=-1)

    def lift(self, uv: np.ndarray) -> np.ndarray:
        """Unit homogeneous representatives of (n, 2) chart coordinates."""
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        x = np.outer(uv[:, 0], self._eu) + np.outer(uv[:, 1], self._ev) + self.direction
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def to_json(self) -> dict:
        return {"direction": [float(x) for x in self.direction]}

    @classmethod
    def from_json(cls, data: dict) -> "Chart":
        if "direction" in data:
            return cls(data["direction"])
        if "axis" in data:
            d = np.zeros(3)
            d[int(data["axis"]) - 1] = float(data.get("sign", 1))
            return cls(d)
        raise ValueError("chart needs a 'direction' or 'axis' entry")

    def __repr__(self):
        return f"Chart([{self.direction[0]:.6g}, {self.direction[1]:.6g}, {self.direction[2]:.6g}])"


def _orient(d: np.ndarray) -> np.ndarray:
    # deterministic sign: largest-magnitude component positive
    k = int(np.argmax(np.abs(d)))
    return d if d[k] > 0 else -d


def chart_for(reps: np.ndarray) -> Chart:
    """Pick a chart in which all given rays have nonzero height.

    Scans the coordinate axes in index order (score = min |<x, d>| over unit
    representatives, ties to the lower index), then the eight diagonal
    directions, then the dominant direction of the ray cloud. Raises
    NotProperlyConvex when every candidate leaves some ray on the horizon.
    """
    reps = np.asarray(reps, dtype=float)
    reps = reps / np.linalg.norm(reps, axis=1, keepdims=True)
    best_axis = None
    for k in range(3):
        s = float(np.min(np.abs(reps[:, k])))
        if best_axis is None or s > best_axis[0] + 1e-15:
            best_axis = (s, k)
    if best_axis[0] > HALFSPACE_MARGIN:
        d = np.zeros(3)
        d[best_axis[1]] = 1.0
        return Chart(_orient(d if np.sum(reps[:, best_axis[1]]) >= 0 else -d))
    best_diag = None
    for signs in ((1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
                  (-1, 1, 1), (-1, 1, -1), (-1, -1, 1), (-1, -1, -1)):
        d = np.asarray(signs, dtype=float) / np.sqrt(3.0)
        s = float(np.min(np.abs(reps @ d)))
        if best_diag is None or s > best_diag[0] + 1e-15:
            best_diag = (s, d)
    if best_diag[0] > HALFSPACE_MARGIN:
        return Chart(_orient(best_diag[1]))
    # dominant direction of the ray cloud (sign-free: top eigenvector of
    # the second-moment matrix)
    moments = reps.T @ reps
    _, vecs = np.linalg.eigh(moments)
    d = _orient(vecs[:, -1])
    if float(np.min(np.abs(reps @ d))) > HALFSPACE_MARGIN:
        return Chart(d)
    raise NotProperlyConvex("no affine chart bounds the sampled rays")


# ---------------------------------------------------------------------------
# convex domains
# ---------------------------------------------------------------------------

class ConvexDomainApprox:
    """Properly convex region given by ordered boundary ray samples + a chart.

    Invariants checked at construction: at least 8 cyclic samples, all strictly
    inside the open half-space of the chart, and the dehomogenized boundary
    polygon convex and positively oriented.
    """

    __slots__ = ("boundary", "chart", "_uv")

    def __init__(self, boundary: Sequence[ProjectivePoint], chart: Chart):
        pts = tuple(boundary)
        if len(pts) < 8:
            raise ValueError(f"need at least 8 boundary samples, got {len(pts)}")
        reps = np.stack([p.rep for p in pts])
        h = chart.heights(reps)
        reps = reps * np.where(h >= 0, 1.0, -1.0)[:, None]
        h = np.abs(h)
        if float(np.min(h)) <= HALFSPACE_MARGIN:
            raise NotProperlyConvex(
                "boundary sample on or outside the chart half-space")
        uv = chart.dehomogenize(reps)
        _check_convex_polygon(uv)
        self.boundary = tuple(ProjectivePoint(r) for r in reps)
        self.chart = chart
        uv.flags.writeable = False
        self._uv = uv

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_rays(cls, reps: np.ndarray, chart: Chart | None = None) -> "ConvexDomainApprox":
        """Build a domain from raw homogeneous rays, fixing orientation.

        Auto-selects a chart when none is given and reverses the cyclic order
        if the dehomogenized polygon comes out negatively oriented.
        """
        reps = np.asarray(reps, dtype=float)
        reps = reps / np.linalg.norm(reps, axis=1, keepdims=True)
        ch = chart if chart is not None else chart_for(reps)
        h = ch.heights(reps)
        if float(np.min(np.abs(h))) <= HALFSPACE_MARGIN:
            raise NotProperlyConvex("rays not bounded in the selected chart")
        aligned = reps * np.where(h >= 0, 1.0, -1.0)[:, None]
        uv = ch.dehomogenize(aligned)
        if _signed_area(uv) < 0:
            aligned = aligned[::-1]
        return cls([ProjectivePoint(r) for r in aligned], ch)

    @classmethod
    def from_chart_points(cls, uv: np.ndarray, chart: Chart) -> "ConvexDomainApprox":
        return cls.from_rays(chart.lift(uv), chart)

    # -- geometry --------------------------------------------------------------

    def dehomogenized(self) -> np.ndarray:
        return np.array(self._uv)

    def reps(self) -> np.ndarray:
        return np.stack([p.rep for p in self.boundary])

    def interior_ray(self) -> ProjectivePoint:
        return ProjectivePoint(self.reps().sum(axis=0))

    def contains(self, p: ProjectivePoint, tol: float = 1e-9) -> bool:
        """Whether p lies in the closed region (in this domain's chart)."""
        w = float(p.rep @ self.chart.direction)
        if abs(w) <= HALFSPACE_MARGIN:
            return False
        uv = self.chart.dehomogenize((np.sign(w) * p.rep)[None, :])[0]
        return bool(_inside_polygon(self._uv, uv[None, :], tol)[0])

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schema": "asl.domain@1",
            "chart": self.chart.to_json(),
            "boundary": [[float(x) for x in p.rep] for p in self.boundary],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConvexDomainApprox":
        chart = Chart.from_json(data["chart"])
        pts = [ProjectivePoint(r) for r in data["boundary"]]
        return cls(pts, chart)

    def to_svg(self, width: int = 480, overlay_triangle: bool = False) -> str:
        """Standalone SVG of the dehomogenized boundary polygon."""
        uv = self.dehomogenized()
        layers = [uv]
        if overlay_triangle:
            tri = principal_triangle()
            t_reps = tri.reps()
            h = self.chart.heights(t_reps)
            if float(np.min(np.abs(h))) > HALFSPACE_MARGIN:
                layers.append(self.chart.dehomogenize(t_reps * np.sign(h)[:, None]))
        allpts = np.vstack(layers)
        lo = allpts.min(axis=0)
        hi = allpts.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        pad = 0.05 * span
        view = (lo[0] - pad, lo[1] - pad, (hi[0] - lo[0]) + 2 * pad, (hi[1] - lo[1]) + 2 * pad)
        sw = span / 200.0
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'viewBox="{view[0]:.6g} {view[1]:.6g} {view[2]:.6g} {view[3]:.6g}">',
            # flip y so chart coordinates read the usual way up
            f'<g transform="translate(0 {view[1] * 2 + view[3]:.6g}) scale(1 -1)">',
        ]
        styles = [f'fill="none" stroke="#000" stroke-width="{sw:.6g}"',
                  f'fill="none" stroke="#888" stroke-width="{sw:.6g}" stroke-dasharray="{4*sw:.6g}"']
        for pts, style in zip(layers, styles):
            coords = " ".join(f"{u:.6g},{v:.6g}" for u, v in pts)
            parts.append(f'<polygon points="{coords}" {style}/>')
        parts.append("</g></svg>")
        return "\n".join(parts)

    def __repr__(self):
        return f"ConvexDomainApprox({len(self.boundary)} samples, chart={self.chart!r})"


def _signed_area(uv: np.ndarray) -> float:
    x, y = uv[:, 0], uv[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _check_convex_polygon(uv: np.ndarray):
    e = np.roll(uv, -1, axis=0) - uv
    scale = float(np.max(np.sum(e * e, axis=1)))
    if scale == 0.0:
        raise NotProperlyConvex("boundary samples coincide")
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    if float(np.min(cross)) < -1e-9 * scale:
        if float(np.max(cross)) < 1e-9 * scale:
            raise NotProperlyConvex("boundary polygon negatively oriented")
        raise NotProperlyConvex("boundary polygon is not convex")
    if _signed_area(uv) <= 0:
        raise NotProperlyConvex("boundary polygon negatively oriented")


def _inside_polygon(poly: np.ndarray, pts: np.ndarray, tol: float) -> np.ndarray:
    """Orientation-agnostic containment of pts in a convex polygon."""
    e = np.roll(poly, -1, axis=0) - poly
    # cross(e_i, p - v_i) for all edges i and points p
    d0 = pts[:, None, 0] - poly[None, :, 0]
    d1 = pts[:, None, 1] - poly[None, :, 1]
    s = e[None, :, 0] * d1 - e[None, :, 1] * d0
    scale = np.sqrt(float(np.max(np.sum(e * e, axis=1)))) or 1.0
    t = tol * scale
    return np.logical_or(np.all(s >= -t, axis=1), np.all(s <= t, axis=1))


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------

class HausdorffEstimate(NamedTuple):
    value: float
    error_bound: float


def _bounds_domain(ch: Chart, dom: ConvexDomainApprox) -> bool:
    """Whether the chart bounds the region, not just misses the samples.

    Sample heights can all clear the margin while the region still crosses
    the chart horizon; in that case the dehomogenized boundary wraps and
    stops being a convex polygon (in either orientation).
    """
    reps = dom.reps()
    h = ch.heights(reps)
    if float(np.min(np.abs(h))) <= HALFSPACE_MARGIN:
        return False
    uv = ch.dehomogenize(reps * np.sign(h)[:, None])
    e = np.roll(uv, -1, axis=0) - uv
    scale = float(np.max(np.sum(e * e, axis=1)))
    if scale == 0.0:
        return False
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    tol = 1e-9 * scale
    return bool(float(np.min(cross)) >= -tol or float(np.max(cross)) <= tol)


def _common_chart(a: ConvexDomainApprox, b: ConvexDomainApprox) -> Chart:
    candidates = [a.chart, b.chart,
                  Chart(a.interior_ray().rep), Chart(b.interior_ray().rep)]
    try:
        candidates.append(chart_for(np.vstack([a.reps(), b.reps()])))
    except NotProperlyConvex:
        pass
    for ch in candidates:
        if _bounds_domain(ch, a) and _bounds_domain(ch, b):
            return ch
    raise ChartMismatch("no common chart bounds both domains")


def _dense_boundary(dom: ConvexDomainApprox, chart: Chart, n: int) -> np.ndarray:
    """Arclength-uniform resampling of the boundary polygon in chart coords."""
    reps = dom.reps()
    h = chart.heights(reps)
    uv = chart.dehomogenize(reps * np.sign(h)[:, None])
    closed = np.vstack([uv, uv[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    t = np.linspace(0.0, total, n, endpoint=False)
    x = np.interp(t, s, closed[:, 0])
    y = np.interp(t, s, closed[:, 1])
    return np.stack([x, y], axis=1)


def hausdorff_distance(a: ConvexDomainApprox, b: ConvexDomainApprox,
                       samples: int = DENSE_SAMPLES) -> HausdorffEstimate:
    """Symmetrized Hausdorff distance between two closed convex regions.

    Measured in the Fubini-Study metric over dense boundary resamplings in a
    common chart. Returns the value together with a resolution error bound
    (the worst adjacent-sample gap). The supremum side only needs boundary
    points: the distance to a convex set has no interior local max over a
    convex region.
    """
    chart = _common_chart(a, b)
    ua = _dense_boundary(a, chart, samples)
    ub = _dense_boundary(b, chart, samples)
    ra = chart.lift(ua)
    rb = chart.lift(ub)
    pa = chart.dehomogenize(a.reps() * np.sign(chart.heights(a.reps()))[:, None])
    pb = chart.dehomogenize(b.reps() * np.sign(chart.heights(b.reps()))[:, None])

    cosm = np.clip(np.abs(ra @ rb.T), 0.0, 1.0)
    dists = np.arccos(cosm)

    def directed(src_uv, src_dists, target_poly):
        inside = _inside_polygon(target_poly, src_uv, 1e-12)
        d = np.min(src_dists, axis=1)
        d[inside] = 0.0
        return float(np.max(d))

    value = max(directed(ua, dists, pb), directed(ub, dists.T, pa))

    def max_gap(r):
        c = np.clip(np.abs(np.sum(r * np.roll(r, -1, axis=0), axis=1)), 0.0, 1.0)
        return float(np.max(np.arccos(c)))

    err = 0.5 * (max_gap(ra) + max_gap(rb))
    return HausdorffEstimate(value, err)


# ---------------------------------------------------------------------------
# holonomy classification
# ---------------------------------------------------------------------------

class HolonomyKind(Enum):
    HYPERBOLIC = "hyperbolic"
    QUASI_HYPERBOLIC = "quasi_hyperbolic"
    PARABOLIC = "parabolic"


@dataclass(frozen=True)
class HolonomyClass:
    """Conjugacy type plus positive eigenvalues (ascending, product one)."""

    kind: HolonomyKind
    eigenvalues: tuple

    def __post_init__(self):
        ev = np.sort(np.asarray(self.eigenvalues, dtype=float))
        if ev.shape != (3,) or np.any(ev <= 0):
            raise ValueError("need 3 positive eigenvalues")
        ev = ev / np.cbrt(float(np.prod(ev)))
        object.__setattr__(self, "eigenvalues", tuple(float(x) for x in ev))

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "eigenvalues": list(self.eigenvalues)}


def classify_holonomy(M: ProjectiveTransform,
                      tol: float = DEFAULT_CLASSIFY_TOL) -> HolonomyClass:
    """Classify a holonomy matrix as hyperbolic / quasi-hyperbolic / parabolic.

    Eigenvalue coincidence is decided by relative gap <= tol. The split is
    by spectrum shape alone: a double positive eigenvalue is reported
    quasi-hyperbolic whether or not the matrix is diagonalizable, since the
    Jordan structure of a repeated spectrum is not decidable in floating
    point (and the constant-coefficient model matrices realize the
    borderline semisimple case exactly). Raises NotPositiveSpectrum for
    complex or non-positive spectra, and a plain GeomError for a triple
    eigenvalue with no nilpotent part, which belongs to none of the three
    classes.
    """
    if not (0.0 < tol <= MAX_CLASSIFY_TOL):
        raise ValueError(f"tol must be in (0, {MAX_CLASSIFY_TOL}], got {tol}")
    m = M.entries
    scale = float(np.linalg.norm(m, 2))
    ev = np.linalg.eigvals(m)
    if np.any(np.abs(ev.imag) > tol * scale):
        raise NotPositiveSpectrum(f"complex eigenvalues {ev}")
    re = np.sort(ev.real)
    if np.any(re <= 0):
        raise NotPositiveSpectrum(f"non-positive eigenvalue in {re}")

    clusters = [[re[0]]]
    for x in re[1:]:
        if x - clusters[-1][-1] <= tol * max(abs(x), abs(clusters[-1][-1])):
            clusters[-1].append(x)
        else:
            clusters.append([x])
    means = [float(np.mean(c)) for c in clusters]
    sizes = [len(c) for c in clusters]

    if len(clusters) == 3:
        return HolonomyClass(HolonomyKind.HYPERBOLIC, tuple(means))

    if len(clusters) == 2:
        out = []
        for mean, size in zip(means, sizes):
            out.extend([mean] * size)
        return HolonomyClass(HolonomyKind.QUASI_HYPERBOLIC, tuple(out))
    # all three eigenvalues coincide (hence equal 1 for unimodular positive)
    lam = means[0]
    sv = np.linalg.svd(m - lam * np.eye(3), compute_uv=False)
    if int(np.sum(sv < tol * scale)) >= 3:
        raise GeomError(
            "triple eigenvalue without a nilpotent part: outside the "
            "hyperbolic/quasi-hyperbolic/parabolic trichotomy")
    return HolonomyClass(HolonomyKind.PARABOLIC, (1.0, 1.0, 1.0))


# ---------------------------------------------------------------------------
# special matrices and domain operations
# ---------------------------------------------------------------------------

def reflection_j() -> ProjectiveTransform:
    """The reflection J = diag(1, -1, 1) across the principal geodesic.

    Returned as the unimodular representative diag(-1, 1, -1), the same
    projective transform with positive determinant.
    """
    return ProjectiveTransform(np.diag([-1.0, 1.0, -1.0]))


def _diag_exp(exponents) -> ProjectiveTransform:
    return ProjectiveTransform(np.diag(np.exp(np.asarray(exponents, dtype=float))))


def twist_bulge_matrix(sigma: float, tau: float) -> ProjectiveTransform:
    """Goldman's neck matrix diag(e^{-sigma-tau}, e^{2 tau}, e^{sigma-tau})."""
    if not (np.isfinite(sigma) and np.isfinite(tau)):
        raise ValueError("twist/bulge parameters must be finite")
    exps = (-sigma - tau, 2.0 * tau, sigma - tau)
    if max(abs(e) for e in exps) > EXPONENT_LIMIT:
        raise Overflow(f"twist/bulge exponent exceeds {EXPONENT_LIMIT:g}")
    return _diag_exp(exps)


def bulge_flow(s: float) -> ProjectiveTransform:
    """The bulge-flow matrix M_s = diag(s^{1/3}, s^{-2/3}, s^{1/3})."""
    if not (np.isfinite(s) and s > 0):
        raise ValueError(f"bulge parameter must be positive, got {s!r}")
    if not (BULGE_RANGE[0] <= s <= BULGE_RANGE[1]):
        raise Overflow(f"bulge parameter outside [{BULGE_RANGE[0]:g}, {BULGE_RANGE[1]:g}]")
    w = np.log(s)
    return _diag_exp((w / 3.0, -2.0 * w / 3.0, w / 3.0))


def principal_triangle(samples_per_edge: int = 16) -> ConvexDomainApprox:
    """The projection of the first octant: triangle with vertices e1, e2, e3.

    Boundary sampled along the three edges; chart direction [1, 1, 1].
    """
    if samples_per_edge < 3:
        raise ValueError("need at least 3 samples per edge")
    verts = np.eye(3)
    rays = []
    s = np.linspace(0.0, 1.0, samples_per_edge, endpoint=False)
    for i in range(3):
        a, b = verts[i], verts[(i + 1) % 3]
        rays.append((1.0 - s)[:, None] * a + s[:, None] * b)
    return ConvexDomainApprox.from_rays(np.vstack(rays), Chart([1.0, 1.0, 1.0]))


def apply_transform(M: ProjectiveTransform, dom: ConvexDomainApprox) -> ConvexDomainApprox:
    """Image domain M(dom), with the chart re-selected automatically."""
    img = dom.reps() @ M.entries.T
    return ConvexDomainApprox.from_rays(img)


def dual_domain(dom: ConvexDomainApprox) -> ConvexDomainApprox:
    """Polar dual: boundary rays are the supporting-plane normals of the cone.

    Consecutive-sample cross products, sign-fixed against the interior ray.
    Applying it twice reproduces the original sample rays exactly (up to
    rounding), since (a x b) x (b x c) = det(a, b, c) b.
    """
    reps = dom.reps()
    uv = dom.dehomogenized()
    diam = float(np.max(np.abs(uv - uv.mean(axis=0))))
    if abs(_signed_area(uv)) < 1e-10 * max(diam, 1e-30) ** 2:
        raise DegenerateDomain("boundary samples nearly collinear in the chart")
    n = np.cross(reps, np.roll(reps, -1, axis=0))
    norms = np.linalg.norm(n, axis=1)
    ref = float(np.median(norms))
    keep = norms > max(1e-12, 1e-9 * ref)
    if int(np.count_nonzero(keep)) < 8:
        raise DegenerateDomain("too many near-parallel consecutive rays")
    n = n[keep] / norms[keep, None]
    m = dom.interior_ray().rep
    n = n * np.where(n @ m >= 0, 1.0, -1.0)[:, None]
    try:
        # the polar is bounded exactly in the charts interior to the primal
        # cone, so the primal interior ray is always a valid chart direction
        # (auto-selection can pick a plane the polar straddles)
        return ConvexDomainApprox.from_rays(n, Chart(m))
    except NotProperlyConvex as exc:
        raise DegenerateDomain(f"dual rays do not bound a convex region: {exc}") from exc
