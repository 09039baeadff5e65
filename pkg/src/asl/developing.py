"""Frame transport for hyperbolic affine spheres.

The position f and its z-derivative evolve along paths by a linear system
whose coefficients are the log conformal factor psi, its z-derivative, and
the cubic coefficient U. Integrating the system develops the affine sphere
into R^3; projecting to RP^2 and sweeping rays samples the convex domain,
and transport around deck transformations yields holonomy matrices. The
state is (f real, fz complex, psi), with f_zbar = conj(fz) by representation
and psi transported alongside so the determinant identity
det F = (i/2) e^psi checks the integrator rather than the data source.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.spatial import ConvexHull, QhullError

from .errors import DataOffGrid, GeomError, NotConvex, NotEquivariant, NotProperlyConvex, ZeroResidue
from .projective import (ConvexDomainApprox, ProjectiveTransform, chart_for,
                         fubini_study_distance, ProjectivePoint)
from .wang import WangSolution2D, constant_solution

__all__ = [
    "Frame",
    "PathSpec",
    "ConstantCoefficients",
    "PoincareDiskCoefficients",
    "BlaschkeGridCoefficients",
    "initial_frame",
    "titeica_frame",
    "make_path",
    "integrate_frame",
    "develop_domain",
    "ray_saturation",
    "holonomy_cylinder",
    "holonomy_affine_deck",
    "conic_fit_residual",
]

DET_RTOL = 1e-8
REALITY_TOL = 1e-9
CROSSCHECK_TOL = 1e-7
EQUIVARIANCE_TOL = 1e-8
DEFAULT_STEP_FRACTION = 400
MAX_STEP_FRACTION = 100
REFINE_RTOL = 1e-11
MAX_REFINE = 6
EDGE_NUDGE = 1e-9
MIN_RAYS = 16
# worst endpoint depth inside the endpoint hull, relative to its diameter:
# finite rays lag behind hull chords near straight limit edges by an
# exponentially small amount, while a folded development lands deep inside
HULL_DEPTH_TOL = 1e-3
SATURATION_DET_RTOL = 1e-4
DISK_EDGE = 1.0 - 1e-9


# ---------------------------------------------------------------------------
# coefficient sources
# ---------------------------------------------------------------------------

class ConstantCoefficients:
    """Constant psi and cubic coefficient; exact on flat cylinders."""

    constant = True

    def __init__(self, psi: float, cubic: complex):
        self.psi0 = float(psi)
        self.cubic0 = complex(cubic)

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        return (np.full(z.shape, self.psi0),
                np.zeros(z.shape, dtype=complex),
                np.full(z.shape, self.cubic0, dtype=complex))


class PoincareDiskCoefficients:
    """Hyperbolic metric of the unit disk with zero cubic coefficient."""

    constant = False

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        rsq = np.abs(z) ** 2
        if np.any(rsq >= DISK_EDGE ** 2):
            raise DataOffGrid("path reaches the boundary circle")
        om = 1.0 - rsq
        return (np.log(4.0) - 2.0 * np.log(om),
                2.0 * np.conj(z) / om,
                np.zeros(z.shape, dtype=complex))


class BlaschkeGridCoefficients:
    """Bilinear interpolation of a disk-truncation conformal factor.

    psi equals the solved factor (flat background), psi_z comes from
    centered differences at grid nodes, and the cubic coefficient is the
    polynomial itself. Queries outside cells with complete data raise
    DataOffGrid.
    """

    constant = False

    def __init__(self, sol: WangSolution2D):
        from .wang import _poly_eval
        self._poly = lambda z: _poly_eval(sol.coeffs, z)
        dom = sol.domain
        self.h = dom.h
        grid = dom.idx_grid
        ni, nj = grid.shape
        self._offsets = dom.origin
        psi = np.full((ni, nj), np.nan)
        inside = grid >= 0
        psi[inside] = sol.u[grid[inside]]
        px = np.full((ni, nj), np.nan)
        py = np.full((ni, nj), np.nan)
        core = np.zeros((ni, nj), dtype=bool)
        core[1:-1, 1:-1] = (inside[1:-1, 1:-1] & inside[2:, 1:-1] & inside[:-2, 1:-1]
                            & inside[1:-1, 2:] & inside[1:-1, :-2])
        ii, jj = np.nonzero(core)
        px[ii, jj] = (psi[ii + 1, jj] - psi[ii - 1, jj]) / (2.0 * self.h)
        py[ii, jj] = (psi[ii, jj + 1] - psi[ii, jj - 1]) / (2.0 * self.h)
        self._psi = psi
        self._px = px
        self._py = py

    def _bilinear(self, arr, fi, fj, tx, ty):
        v00 = arr[fi, fj]
        v10 = arr[fi + 1, fj]
        v01 = arr[fi, fj + 1]
        v11 = arr[fi + 1, fj + 1]
        if np.any(np.isnan(v00)) or np.any(np.isnan(v10)) \
                or np.any(np.isnan(v01)) or np.any(np.isnan(v11)):
            raise DataOffGrid("path leaves the interpolation region of the grid")
        return (v00 * (1 - tx) * (1 - ty) + v10 * tx * (1 - ty)
                + v01 * (1 - tx) * ty + v11 * tx * ty)

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        imin, jmin = self._offsets
        gx = np.real(z) / self.h
        gy = np.imag(z) / self.h
        fi = np.floor(gx).astype(int) - imin
        fj = np.floor(gy).astype(int) - jmin
        ni, nj = self._psi.shape
        if np.any(fi < 0) or np.any(fi + 1 >= ni) or np.any(fj < 0) or np.any(fj + 1 >= nj):
            raise DataOffGrid("path leaves the solution grid")
        tx = gx - np.floor(gx)
        ty = gy - np.floor(gy)
        psi = self._bilinear(self._psi, fi, fj, tx, ty)
        px = self._bilinear(self._px, fi, fj, tx, ty)
        py = self._bilinear(self._py, fi, fj, tx, ty)
        return psi, (px - 1j * py) / 2.0, self._poly(z)

    def breakpoints(self, z0: complex, z1: complex) -> np.ndarray:
        """Cell-boundary crossing parameters of the segment, in (0, 1).

        Integration splits at these so every step sees one smooth bilinear
        patch; otherwise the interpolation kinks degrade the scheme.
        """
        ts = []
        for p0, p1 in ((z0.real, z1.real), (z0.imag, z1.imag)):
            d = p1 - p0
            if d == 0.0:
                continue
            lo, hi = sorted((p0, p1))
            lines = np.arange(np.ceil(lo / self.h), np.floor(hi / self.h) + 1) * self.h
            ts.append((lines - p0) / d)
        if not ts:
            return np.empty(0)
        t = np.unique(np.concatenate(ts))
        return t[(t > 1e-12) & (t < 1.0 - 1e-12)]


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    """Affine-sphere frame: position f, derivative fz, log factor psi_at.

    The full 3x3 frame has columns (f, fz, conj(fz)); construction checks
    the determinant identity det F = (i/2) e^psi_at to relative det_rtol.
    """

    f: np.ndarray
    fz: np.ndarray
    psi_at: float
    det_rtol: float = field(default=DET_RTOL, compare=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).reshape(3)
        fz = np.asarray(self.fz, dtype=complex).reshape(3)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(fz))
                and np.isfinite(self.psi_at)):
            raise ValueError("frame entries must be finite")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "fz", fz)
        target = 0.5j * np.exp(self.psi_at)
        err = abs(np.linalg.det(self.matrix) - target) / abs(target)
        if err > self.det_rtol:
            raise ValueError(
                f"frame determinant off by relative {err:.3e} (allowed {self.det_rtol:.1e})")

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.f.astype(complex), self.fz, np.conj(self.fz)])

    def to_json(self) -> dict:
        return {
            "schema": "asl.frame@1",
            "f": [float(x) for x in self.f],
            "fz": [[float(c.real), float(c.imag)] for c in self.fz],
            "psi_at": float(self.psi_at),
        }


def initial_frame(psi0: float) -> Frame:
    """Canonical basepoint frame with f at the third axis."""
    if not np.isfinite(psi0):
        raise ValueError("psi0 must be finite")
    s = np.exp(0.5 * psi0) / 2.0
    return Frame(f=np.array([0.0, 0.0, 1.0]),
                 fz=np.array([s, -1j * s, 0.0]), psi_at=float(psi0))


def titeica_frame() -> Frame:
    """Exact frame of the closed-form affine sphere over the first octant."""
    w = np.exp(2j * np.pi / 3.0)
    r = 3.0 ** -0.5
    return Frame(f=np.array([r, r, r]),
                 fz=r * np.array([1.0, np.conj(w), w]), psi_at=float(np.log(2.0)))


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathSpec:
    """Piecewise-straight path with its coefficient source.

    Vertices are complex chart coordinates; coefficient samples come from
    `data.eval` at integration time, so refits of the step size stay exact.
    """

    chart: str
    vertices: np.ndarray
    data: object

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex).reshape(-1)
        if len(v) < 2 or not np.all(np.isfinite(v)):
            raise ValueError("need at least two finite path vertices")
        object.__setattr__(self, "vertices", v)
        self.data.eval(v)  # probes the data; DataOffGrid surfaces early

    @property
    def length(self) -> float:
        return float(np.sum(np.abs(np.diff(self.vertices))))


def make_path(data, vertices, chart: str = "z") -> PathSpec:
    return PathSpec(chart=chart, vertices=np.asarray(vertices, dtype=complex), data=data)


# ---------------------------------------------------------------------------
# the frame ODE
# ---------------------------------------------------------------------------

def _stage_rate(zdot, psi, psiz, u, f, fz, ps):
    """Time derivative of the packed state (f, fz, psi) along z(t)."""
    a = zdot * fz
    fdot = a + np.conj(a)
    fzdot = (zdot * (psiz * fz + u * np.exp(-psi) * np.conj(fz))
             + np.conj(zdot) * 0.5 * np.exp(psi) * f)
    pdot = 2.0 * np.real(zdot * psiz)
    return fdot, fzdot, pdot


def _rk4_edge(f, fz, ps, zdot, h, psi_s, psiz_s, u_s):
    """March one straight edge; coefficient arrays sampled at half-steps."""
    n = (len(psi_s) - 1) // 2
    for k in range(n):
        i0, i1, i2 = 2 * k, 2 * k + 1, 2 * k + 2
        k1 = _stage_rate(zdot, psi_s[i0], psiz_s[i0], u_s[i0], f, fz, ps)
        k2 = _stage_rate(zdot, psi_s[i1], psiz_s[i1], u_s[i1],
                         f + 0.5 * h * np.real(k1[0]), fz + 0.5 * h * k1[1], ps + 0.5 * h * k1[2])
        k3 = _stage_rate(zdot, psi_s[i1], psiz_s[i1], u_s[i1],
                         f + 0.5 * h * np.real(k2[0]), fz + 0.5 * h * k2[1], ps + 0.5 * h * k2[2])
        k4 = _stage_rate(zdot, psi_s[i2], psiz_s[i2], u_s[i2],
                         f + h * np.real(k3[0]), fz + h * k3[1], ps + h * k3[2])
        f = f + (h / 6.0) * np.real(k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        fz = fz + (h / 6.0) * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        ps = ps + (h / 6.0) * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
    return f, fz, ps


def _edge_step_matrix(zdot, h, psi, psiz, u):
    """RK4 one-step map as a real 9x9 matrix for constant coefficients."""
    d = np.zeros((9, 9))
    # state layout: (f, Re fz, Im fz); fdot = 2 Re(zdot fz)
    zr, zi = zdot.real, zdot.imag
    for m in range(3):
        d[m, 3 + m] = 2.0 * zr
        d[m, 6 + m] = -2.0 * zi
    # fzdot = zdot (psiz fz + u e^{-psi} conj fz) + conj(zdot) (e^psi / 2) f
    c1 = zdot * psiz
    c2 = zdot * u * np.exp(-psi)
    c3 = np.conj(zdot) * 0.5 * np.exp(psi)
    for m in range(3):
        d[3 + m, 3 + m] = c1.real + c2.real
        d[3 + m, 6 + m] = -c1.imag + c2.imag
        d[6 + m, 3 + m] = c1.imag + c2.imag
        d[6 + m, 6 + m] = c1.real - c2.real
        d[3 + m, m] = c3.real
        d[6 + m, m] = c3.imag
    hd = h * d
    g = np.eye(9) + hd
    term = hd
    for fac in (2.0, 3.0, 4.0):
        term = term @ hd / fac
        g = g + term
    return g


def _smooth_pieces(path: PathSpec):
    """Straight sub-segments on which the coefficient data is smooth."""
    verts = path.vertices
    splitter = getattr(path.data, "breakpoints", None)
    for m in range(len(verts) - 1):
        z0, z1 = verts[m], verts[m + 1]
        if z1 == z0:
            continue
        if splitter is None:
            yield z0, z1
        else:
            ts = np.concatenate([[0.0], splitter(z0, z1), [1.0]])
            for ta, tb in zip(ts[:-1], ts[1:]):
                yield z0 + ta * (z1 - z0), z0 + tb * (z1 - z0)


def _march(path: PathSpec, f, fz, ps, n_base: int, factor: int):
    nudge = getattr(path.data, "breakpoints", None) is not None
    for z0, z1 in _smooth_pieces(path):
        zdot = z1 - z0
        n = max(1, int(np.ceil(abs(zdot) * n_base / path.length))) * factor
        h = 1.0 / n
        ts = np.linspace(0.0, 1.0, 2 * n + 1)
        if nudge:
            # keep piece-end samples on this piece's side of the cell line
            ts[0], ts[-1] = EDGE_NUDGE, 1.0 - EDGE_NUDGE
        psi_s, psiz_s, u_s = path.data.eval(z0 + zdot * ts)
        if getattr(path.data, "constant", False):
            g1 = _edge_step_matrix(zdot, h, psi_s[0], psiz_s[0], u_s[0])
            state = np.concatenate([f, fz.real, fz.imag])
            state = np.linalg.matrix_power(g1, n) @ state
            f, fz = state[:3], state[3:6] + 1j * state[6:]
            ps = ps + 2.0 * np.real(zdot * psiz_s[0])
        else:
            f, fz, ps = _rk4_edge(f, fz, ps, zdot, h, psi_s, psiz_s, u_s)
    return f, fz, ps


def integrate_frame(frame: Frame, path: PathSpec, step: float | None = None,
                    refine: bool = True, det_rtol: float | None = None) -> Frame:
    """Transport a frame along a path by classical fixed-step RK4.

    The step is halved (whole-path reruns) until two consecutive resolutions
    agree to relative REFINE_RTOL, keeping the scheme deterministic. psi is
    transported alongside by its supplied z-derivative, which makes the
    determinant identity of the returned Frame a check of the integration.
    The identity is enforced to det_rtol, by default DET_RTOL scaled with
    the path length; pass a looser value for frames whose columns have
    collapsed toward the dominant direction, where the identity sits below
    the float64 rounding floor however small the step.
    """
    length = path.length
    if length == 0.0:
        return frame
    if step is None:
        step = length / DEFAULT_STEP_FRACTION
    if step > length / MAX_STEP_FRACTION:
        raise ValueError(f"step {step:.3g} exceeds path length/{MAX_STEP_FRACTION}")
    n_base = int(np.ceil(length / step))
    f0, fz0, ps0 = frame.f, frame.fz, frame.psi_at

    out = _march(path, f0, fz0, ps0, n_base, 1)
    factor = 1
    if refine:
        for _ in range(MAX_REFINE):
            fine = _march(path, f0, fz0, ps0, n_base, 2 * factor)
            scale = max(float(np.max(np.abs(out[0]))), float(np.max(np.abs(out[1]))), 1.0)
            gap = max(float(np.max(np.abs(fine[0] - out[0]))),
                      float(np.max(np.abs(fine[1] - out[1]))),
                      abs(fine[2] - out[2]))
            out = fine
            factor *= 2
            if gap <= REFINE_RTOL * scale:
                break
        else:
            raise GeomError("frame integration failed the step-doubling test")
    f, fz, ps = out
    if det_rtol is None:
        det_rtol = max(DET_RTOL, DET_RTOL * length)
    return Frame(f=f, fz=fz, psi_at=float(ps), det_rtol=det_rtol)


# ---------------------------------------------------------------------------
# developed domains
# ---------------------------------------------------------------------------

def _densify_polygon(poly: np.ndarray, target: int) -> np.ndarray:
    """At least target boundary points along a polygon, vertices kept."""
    edges = np.roll(poly, -1, axis=0) - poly
    lens = np.hypot(edges[:, 0], edges[:, 1])
    total = float(lens.sum())
    out = []
    for k in range(len(poly)):
        m = max(1, int(np.ceil(lens[k] / total * target)))
        for j in range(m):
            out.append(poly[k] + edges[k] * (j / m))
    return np.asarray(out)


def develop_domain(data, n_rays: int = 24, ray_length: float = 6.0,
                   step: float | None = None, base_frame: Frame | None = None,
                   basepoint: complex = 0.0) -> ConvexDomainApprox:
    """Sample the developed convex domain along radial paths.

    Integrates the frame from the basepoint out along n_rays evenly spaced
    directions, projects the endpoint positions to RP^2 and returns the
    convex hull of the endpoints in an automatically selected affine chart.
    Endpoints may cluster exponentially tightly near the limit vertices, so
    convexity is validated by how deep any endpoint sits inside the hull
    rather than by sample-to-sample turning. Longer rays tighten the
    approximation; see ray_saturation for the stopping diagnostic.
    """
    if n_rays < MIN_RAYS:
        raise ValueError(f"need at least {MIN_RAYS} rays, got {n_rays}")
    if ray_length <= 0:
        raise ValueError("ray_length must be positive")
    z0 = complex(basepoint)
    if base_frame is None:
        psi0, _, _ = data.eval(np.array([z0]))
        base_frame = initial_frame(float(psi0[0]))
    reps = []
    for k in range(n_rays):
        zt = z0 + ray_length * np.exp(2j * np.pi * k / n_rays)
        end = integrate_frame(base_frame, make_path(data, [z0, zt]), step=step)
        reps.append(end.f / np.linalg.norm(end.f))
    reps = np.stack(reps)

    try:
        chart = chart_for(reps)
    except NotProperlyConvex as exc:
        raise NotConvex(f"developed rays span no convex cone: {exc}") from exc
    heights = chart.heights(reps)
    uv = chart.dehomogenize(reps * np.where(heights >= 0, 1.0, -1.0)[:, None])
    try:
        hull = ConvexHull(uv)
    except QhullError as exc:
        raise NotConvex(f"developed endpoints are degenerate: {exc}") from exc
    poly = uv[hull.vertices]

    # inward edge normals of the ccw hull; depth of the worst sample
    edges = np.roll(poly, -1, axis=0) - poly
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    gaps = np.einsum("ske,ke->sk", uv[:, None, :] - poly[None, :, :], normals)
    depth = float(np.max(np.min(gaps, axis=1)))
    diameter = float(np.max(poly.max(axis=0) - poly.min(axis=0)))
    if depth > HULL_DEPTH_TOL * diameter:
        raise NotConvex(
            f"a developed endpoint sits {depth:.3e} inside its hull "
            f"(diameter {diameter:.3e}); rays fold back or are too short")

    boundary = _densify_polygon(poly, max(MIN_RAYS, 8))
    return ConvexDomainApprox.from_chart_points(boundary, chart)


def ray_saturation(data, ray_length: float, base_frame: Frame | None = None,
                   basepoint: complex = 0.0, n_probe: int = 8,
                   step: float | None = None) -> float:
    """Largest projective motion of probe endpoints under 20% longer rays.

    Probes tolerate a loose determinant budget: the endpoint directions the
    diagnostic compares converge long before the raw determinant identity,
    which hits the rounding floor on the extended rays.
    """
    z0 = complex(basepoint)
    if base_frame is None:
        psi0, _, _ = data.eval(np.array([z0]))
        base_frame = initial_frame(float(psi0[0]))
    worst = 0.0
    for k in range(n_probe):
        direction = np.exp(2j * np.pi * (k + 0.37) / n_probe)
        p = []
        for ell in (ray_length, 1.2 * ray_length):
            end = integrate_frame(base_frame, make_path(data, [z0, z0 + ell * direction]),
                                  step=step, det_rtol=SATURATION_DET_RTOL)
            p.append(ProjectivePoint(end.f))
        worst = max(worst, fubini_study_distance(p[0], p[1]))
    return worst


# ---------------------------------------------------------------------------
# holonomy
# ---------------------------------------------------------------------------

def _coefficient_matrices(psi: float, psiz: complex, u: complex):
    ep = np.exp(psi)
    a = np.array([[0.0, 0.0, 0.5 * ep],
                  [1.0, psiz, 0.0],
                  [0.0, u / ep, 0.0]], dtype=complex)
    b = np.array([[0.0, 0.5 * ep, 0.0],
                  [0.0, 0.0, np.conj(u) / ep],
                  [1.0, 0.0, np.conj(psiz)]], dtype=complex)
    return a, b


def _realize(s: np.ndarray, context: str) -> ProjectiveTransform:
    scale = max(1.0, float(np.max(np.abs(s))))
    worst = float(np.max(np.abs(s.imag)))
    if worst > REALITY_TOL * scale:
        raise GeomError(f"{context}: matrix has imaginary part {worst:.3e} of scale {scale:.3e}")
    return ProjectiveTransform(s.real)


def holonomy_cylinder(residue: complex, step: float | None = None) -> ProjectiveTransform:
    """Holonomy of the flat cylinder with constant cubic coefficient.

    Transports the canonical frame along one period of the deck map
    l -> l + 2 pi i at the constant balancing factor, conjugates back to the
    ambient coordinates, and cross-checks against the closed-form matrix
    exponential of the constant system.
    """
    residue = complex(residue)
    if residue == 0:
        raise ZeroResidue("cylinder holonomy needs a nonzero cubic coefficient")
    psi0 = constant_solution(residue)
    data = ConstantCoefficients(psi0, residue)
    frame = initial_frame(psi0)
    period = 2j * np.pi
    end = integrate_frame(frame, make_path(data, [0.0, period], chart="l"),
                          step=step if step is not None else abs(period) / 4096.0)
    f0inv = np.linalg.inv(frame.matrix)
    s_ode = end.matrix @ f0inv

    a, b = _coefficient_matrices(psi0, 0.0, residue)
    s_exact = frame.matrix @ expm(period * a + np.conj(period) * b) @ f0inv
    scale = max(1.0, float(np.max(np.abs(s_exact))))
    gap = float(np.max(np.abs(s_ode - s_exact)))
    if gap > CROSSCHECK_TOL * scale:
        raise GeomError(
            f"cylinder holonomy off the closed form by {gap:.3e} at scale {scale:.3e}")
    return _realize(s_ode, "cylinder holonomy")


def holonomy_affine_deck(data, deck: tuple[complex, complex], basepoint: complex,
                         step: float | None = None) -> ProjectiveTransform:
    """Holonomy of an affine deck map z -> a z + b on the data's chart.

    Validates equivariance of the coefficient data under the deck map
    (psi drops by 2 log|a| and the cubic coefficient picks up a^{-3}),
    transports the frame from the basepoint to its image, applies the
    coordinate-change correction diag(1, a, conj a), and conjugates back.
    """
    a, b = complex(deck[0]), complex(deck[1])
    if a == 0:
        raise ValueError("deck map must be invertible (a != 0)")
    z0 = complex(basepoint)
    probes = z0 + np.concatenate([[0.0], 0.3 * np.exp(2j * np.pi * np.arange(6) / 6.0)])
    psi_p, _, u_p = data.eval(probes)
    psi_i, _, u_i = data.eval(a * probes + b)
    drop = float(np.max(np.abs(psi_i - psi_p + 2.0 * np.log(abs(a)))))
    twist = float(np.max(np.abs(u_i * a ** 3 - u_p))) / (1.0 + float(np.max(np.abs(u_p))))
    if drop > EQUIVARIANCE_TOL or twist > EQUIVARIANCE_TOL:
        raise NotEquivariant(
            f"data not deck-periodic: psi gap {drop:.3e}, cubic gap {twist:.3e}")

    psi0, _, _ = data.eval(np.array([z0]))
    frame = initial_frame(float(psi0[0]))
    target = a * z0 + b
    if target == z0:
        end = frame
    else:
        end = integrate_frame(frame, make_path(data, [z0, target]), step=step)
    corr = np.diag([1.0, a, np.conj(a)])
    s = end.matrix @ corr @ np.linalg.inv(frame.matrix)
    return _realize(s, "affine deck holonomy")


# ---------------------------------------------------------------------------
# conic fitting
# ---------------------------------------------------------------------------

def conic_fit_residual(dom: ConvexDomainApprox) -> float:
    """Worst algebraic residual of the best quadric through the boundary.

    Fits x^T Q x = 0 over the unit homogeneous boundary representatives by
    SVD with the symmetric tensor normalized to unit Frobenius norm, and
    returns the largest pointwise |x^T Q x|.
    """
    reps = dom.reps()
    x, y, z = reps[:, 0], reps[:, 1], reps[:, 2]
    r2 = np.sqrt(2.0)
    m = np.stack([x * x, y * y, z * z, r2 * x * y, r2 * x * z, r2 * y * z], axis=1)
    _, _, vt = np.linalg.svd(m)
    return float(np.max(np.abs(m @ vt[-1])))
