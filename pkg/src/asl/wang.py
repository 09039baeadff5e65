"""Conformal-factor solves for Blaschke metrics over cylinders and disks.

Solves L(u) = lap_g u + 4 e^{-2u} ||U||_g^2 - 2 e^u - 2 kappa_g = 0 for the
factor e^u scaling a background metric g to the Blaschke metric of an affine
sphere. Two settings: a rotationally reduced two-point boundary problem on
cylinder and collar models (data depend only on x = Re log z), and a flat
disk truncation for polynomial cubic differentials. Collar backgrounds carry
the sub/super-solution bracket [0, phi + B] used to certify the solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import solve_banded
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BadWindow,
    BracketViolated,
    NewtonDiverged,
    ZeroOnBoundary,
    ZeroResidue,
)
from .mongeampere import GridDomain, _DIRS, _second_difference_op, build_grid, disk_shape

__all__ = [
    "BackgroundKind",
    "BackgroundMetric1D",
    "WangSolution1D",
    "WangSolution2D",
    "SubSuperReport",
    "make_background",
    "constant_solution",
    "solve_wang_1d",
    "solve_wang_2d",
    "check_sub_super",
]

DEFAULT_N = 2001
MIN_N = 11
DEFAULT_TOL_1D = 1e-8
DEFAULT_TOL_2D = 1e-8
MAX_ITER = 60
LINESEARCH_FLOOR = 2.0 ** -20
SUPER_TOL = 1e-8
BRACKET_EPS = 1e-6
BRACKET_POWERS = range(-4, 21)
CURVATURE_STEP = 1e-3
BOUNDARY_ZERO_REL = 1e-12


class BackgroundKind(Enum):
    FLAT = "flat"
    CUSP = "cusp"
    COLLAR = "collar"
    GRAFTED_FLAT = "grafted_flat"


@dataclass
class BackgroundMetric1D:
    """Conformal background rho(x)^2 |dl|^2 on a cylinder quasi-coordinate.

    kappa is the Gauss curvature, super_base the conformal log-factor
    phi = log(m/g) of the flat-grafted companion metric m over this
    background; phi + B is the super-solution of the factor equation once
    the constant B is large enough.
    """

    kind: BackgroundKind
    x: np.ndarray
    rho: np.ndarray
    kappa: np.ndarray
    super_base: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("x", "rho", "kappa", "super_base"):
            arr = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, arr)
            if arr.shape != self.x.shape:
                raise ValueError(f"{name} does not match the sample grid")
        if len(self.x) < MIN_N:
            raise ValueError(f"need at least {MIN_N} samples, got {len(self.x)}")
        if not np.all(np.isfinite(self.rho)) or np.any(self.rho <= 0):
            raise ValueError("density must be finite and positive")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def to_json(self) -> dict:
        return {
            "schema": "asl.background_1d@1",
            "kind": self.kind.value,
            "x_range": [float(self.x[0]), float(self.x[-1])],
            "n": int(len(self.x)),
            "params": {k: float(v) for k, v in self.params.items()},
        }


def _smoothstep(s: np.ndarray) -> np.ndarray:
    """Quintic step: 0 at s<=0, 1 at s>=1, C^2 at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (6.0 * s * s - 15.0 * s + 10.0)


def _eta(arg, log_c: float):
    """Cutoff equal to 1 below 2 log c and 0 above log c."""
    return 1.0 - _smoothstep((np.asarray(arg, dtype=float) - 2.0 * log_c) / (-log_c))


def _collar_log_rho(x, log_t: float):
    s = np.pi * np.asarray(x, dtype=float) / log_t
    return np.log(np.pi / (-log_t)) - np.log(np.abs(np.sin(s)))


def _cusp_log_rho(x):
    return -np.log(np.abs(np.asarray(x, dtype=float)))


def _collar_window(log_t: float, log_c: float) -> float:
    """Half-extent K of the flat annulus matching the collar density."""
    arg = np.pi * 2.0 * log_c / log_t
    if not 0.0 < arg < 1.0:
        raise BadWindow(
            f"flat window undefined: pi * 2 log c / log t = {arg:.4f} outside (0, 1)")
    k = (log_t / np.pi) * np.arcsin(arg)
    if log_t - k > k:
        raise BadWindow(f"flat window [{log_t - k:.4f}, {k:.4f}] is empty")
    return float(k)


def _grafted_log_rho(x, log_t: float, log_c: float):
    """Geometric interpolation of the collar density with the flat one."""
    k = _collar_window(log_t, log_c)
    cut = (_eta(np.asarray(x) - k + 2.0 * log_c, log_c)
           * _eta(2.0 * log_c + log_t - k - np.asarray(x), log_c))
    log_flat = np.log(1.0 / (-2.0 * log_c))
    return (1.0 - cut) * _collar_log_rho(x, log_t) + cut * log_flat


def _fd_curvature(log_rho_fn, x: np.ndarray) -> np.ndarray:
    """Gauss curvature -(log rho)'' / rho^2 by Richardson-extrapolated FD."""
    d = CURVATURE_STEP
    second = lambda dd: (log_rho_fn(x + dd) - 2.0 * log_rho_fn(x)
                         + log_rho_fn(x - dd)) / dd ** 2
    lap = (4.0 * second(d) - second(2.0 * d)) / 3.0
    return -lap * np.exp(-2.0 * log_rho_fn(x))


def make_background(kind, n: int = DEFAULT_N, **params) -> BackgroundMetric1D:
    """Sampled 1-D background of the requested kind.

    flat: x_range=(a, b), rho (constant density, default 1).
    cusp: c in (0, 1), depth (window length below log c, default 8).
    collar: t, c with 0 < |t| < c^2 < 1; x spans [log|t| - log c, log c].
    grafted_flat: as collar, with the density replaced by the constant
    1/(-2 log c) on the flat annulus [log|t| - K, K] and geometrically
    interpolated over one cutoff width on either side.
    """
    kind = BackgroundKind(kind)
    if kind is BackgroundKind.FLAT:
        a, b = params.get("x_range", (-5.0, 5.0))
        rho0 = float(params.get("rho", 1.0))
        if not (rho0 > 0 and b > a):
            raise ValueError("flat background needs rho > 0 and a nonempty range")
        x = np.linspace(a, b, n)
        return BackgroundMetric1D(kind, x, np.full(n, rho0), np.zeros(n),
                                  np.zeros(n), {"rho": rho0})

    c = float(params.get("c", np.exp(-1.0)))
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must be in (0, 1), got {c!r}")
    log_c = np.log(c)

    if kind is BackgroundKind.CUSP:
        depth = float(params.get("depth", 8.0))
        x = np.linspace(log_c - depth, log_c, n)
        log_rho = _cusp_log_rho(x)
        # companion metric: flat cylinder below 2 log c, cusp above
        graft = lambda xx: ((1.0 - _eta(xx, log_c)) * _cusp_log_rho(xx)
                            + _eta(xx, log_c) * np.log(1.0 / (-2.0 * log_c)))
        phi = 2.0 * (graft(x) - log_rho)
        return BackgroundMetric1D(kind, x, np.exp(log_rho), -np.ones(n), phi,
                                  {"c": c, "depth": depth})

    t = float(params.get("t"))
    if not 0.0 < abs(t) < c * c:
        raise ValueError(f"need 0 < |t| < c^2, got t={t!r}, c={c!r}")
    log_t = np.log(abs(t))
    x = np.linspace(log_t - log_c, log_c, n)
    if kind is BackgroundKind.COLLAR:
        log_rho = _collar_log_rho(x, log_t)
        phi = 2.0 * (_grafted_log_rho(x, log_t, log_c) - log_rho)
        return BackgroundMetric1D(kind, x, np.exp(log_rho), -np.ones(n), phi,
                                  {"t": t, "c": c, "K": _collar_window(log_t, log_c)})
    # grafted flat: background is the companion metric itself
    log_rho = _grafted_log_rho(x, log_t, log_c)
    kappa = _fd_curvature(lambda xx: _grafted_log_rho(xx, log_t, log_c), x)
    return BackgroundMetric1D(kind, x, np.exp(log_rho), kappa, np.zeros(n),
                              {"t": t, "c": c, "K": _collar_window(log_t, log_c)})


def constant_solution(residue: complex) -> float:
    """Exact factor balancing the equation on the unit-density flat cylinder."""
    r = abs(complex(residue))
    if r == 0.0:
        raise ZeroResidue("no constant balance for a vanishing cubic term")
    return float(np.log(2.0 * r * r) / 3.0)


def _residual_1d(bg: BackgroundMetric1D, rsq: float, u: np.ndarray) -> np.ndarray:
    """Equation residual at interior samples (ends carry Dirichlet data)."""
    dx = bg.dx
    lap = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx ** 2
    rho = bg.rho[1:-1]
    ui = u[1:-1]
    return (lap / rho ** 2 + 4.0 * rsq * np.exp(-2.0 * ui) / rho ** 6
            - 2.0 * np.exp(ui) - 2.0 * bg.kappa[1:-1])


def _super_constant(bg: BackgroundMetric1D, rsq: float) -> tuple[float, np.ndarray]:
    """Smallest power of 2 making phi + B a nonnegative super-solution.

    Both conditions matter: the equation residual at phi + B must be <= 0
    nodewise, and phi + B >= 0 so the constant 0 stays below it.
    """
    floor = -float(np.min(bg.super_base))
    for k in BRACKET_POWERS:
        b = 2.0 ** k
        if b < floor:
            continue
        res = _residual_1d(bg, rsq, bg.super_base + b)
        if float(np.max(res)) <= SUPER_TOL:
            return b, bg.super_base + b
    raise BracketViolated("no dyadic constant makes phi + B a super-solution")


@dataclass
class WangSolution1D:
    """Converged conformal factor on a 1-D background."""

    bg: BackgroundMetric1D
    residue: complex
    u: np.ndarray
    residual_norm: float
    iterations: int
    super_solution: np.ndarray | None = None
    bracket_constant: float | None = None

    def to_json(self) -> dict:
        return {
            "schema": "asl.wang_1d@1",
            "background": self.bg.to_json(),
            "residue": [self.residue.real, self.residue.imag],
            "residual_norm": float(self.residual_norm),
            "iterations": int(self.iterations),
            "u_min": float(np.min(self.u)),
            "u_max": float(np.max(self.u)),
            "bracket_constant": self.bracket_constant,
        }


def solve_wang_1d(bg: BackgroundMetric1D, residue: complex, bc=None,
                  tol: float = DEFAULT_TOL_1D,
                  max_iter: int = MAX_ITER) -> WangSolution1D:
    """Damped Newton for the factor equation as a two-point boundary problem.

    Dirichlet values default to the model at each end: the constant balance
    on a flat background, zero (background = Blaschke) on hyperbolic ones.
    On cusp, collar and grafted backgrounds the converged factor must stay
    inside the sub/super bracket [0, phi + B]; leaving it by more than
    BRACKET_EPS raises BracketViolated.
    """
    residue = complex(residue)
    rsq = abs(residue) ** 2
    if bc is None:
        bc = constant_solution(residue) if bg.kind is BackgroundKind.FLAT else 0.0
    bc = np.broadcast_to(np.asarray(bc, dtype=float), (2,))

    n = len(bg.x)
    u = np.linspace(bc[0], bc[1], n)
    f = _residual_1d(bg, rsq, u)
    rnorm = float(np.max(np.abs(f)))
    dx2 = bg.dx ** 2
    rho2 = bg.rho[1:-1] ** 2
    rho6 = bg.rho[1:-1] ** 6

    it = 0
    for it in range(1, max_iter + 1):
        if rnorm <= tol:
            break
        ui = u[1:-1]
        diag = (-2.0 / (dx2 * rho2) - 8.0 * rsq * np.exp(-2.0 * ui) / rho6
                - 2.0 * np.exp(ui))
        off = 1.0 / (dx2 * rho2)
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = off[:-1]
        ab[1] = diag
        ab[2, :-1] = off[1:]
        delta = solve_banded((1, 1), ab, -f)
        lam = 1.0
        while True:
            un = u.copy()
            un[1:-1] += lam * delta
            fn = _residual_1d(bg, rsq, un)
            rn = float(np.max(np.abs(fn)))
            if rn < rnorm:
                u, f, rnorm = un, fn, rn
                break
            lam *= 0.5
            if lam < LINESEARCH_FLOOR:
                raise NewtonDiverged(
                    f"line search exhausted at iteration {it} (residual {rnorm:.3e})")
    else:
        if rnorm > tol:
            raise NewtonDiverged(
                f"no convergence in {max_iter} iterations (residual {rnorm:.3e})")

    sup, b = None, None
    if bg.kind is not BackgroundKind.FLAT:
        b, sup = _super_constant(bg, rsq)
        if float(np.min(u)) < -BRACKET_EPS:
            raise BracketViolated(f"factor dips to {np.min(u):.3e} below the sub-solution")
        if float(np.max(u - sup)) > BRACKET_EPS:
            raise BracketViolated(
                f"factor exceeds the super-solution by {np.max(u - sup):.3e}")
    return WangSolution1D(bg=bg, residue=residue, u=u, residual_norm=rnorm,
                          iterations=it, super_solution=sup, bracket_constant=b)


@dataclass
class SubSuperReport:
    """Nodewise sub/super-solution diagnostics for a candidate factor."""

    sub_residual: np.ndarray
    super_residual: np.ndarray
    bracket_constant: float
    sub_ok: bool
    super_ok: bool
    candidate_inside: bool

    def to_json(self) -> dict:
        return {
            "schema": "asl.sub_super@1",
            "sub_min": float(np.min(self.sub_residual)),
            "super_max": float(np.max(self.super_residual)),
            "bracket_constant": float(self.bracket_constant),
            "sub_ok": bool(self.sub_ok),
            "super_ok": bool(self.super_ok),
            "candidate_inside": bool(self.candidate_inside),
        }


def check_sub_super(bg: BackgroundMetric1D, residue: complex,
                    candidate: np.ndarray) -> SubSuperReport:
    """Diagnostic: L(0) must be >= -SUPER_TOL, L(phi + B) <= SUPER_TOL."""
    rsq = abs(complex(residue)) ** 2
    candidate = np.asarray(candidate, dtype=float)
    if candidate.shape != bg.x.shape:
        raise ValueError("candidate is not sampled on the background grid")
    sub = _residual_1d(bg, rsq, np.zeros_like(bg.x))
    b, sup = _super_constant(bg, rsq)
    super_res = _residual_1d(bg, rsq, sup)
    inside = (float(np.min(candidate)) >= -BRACKET_EPS
              and float(np.max(candidate - sup)) <= BRACKET_EPS)
    return SubSuperReport(
        sub_residual=sub, super_residual=super_res, bracket_constant=b,
        sub_ok=float(np.min(sub)) >= -SUPER_TOL,
        super_ok=float(np.max(super_res)) <= SUPER_TOL,
        candidate_inside=inside)


def _poly_eval(coeffs, z):
    """Polynomial with coefficients in increasing degree order."""
    out = np.zeros_like(z, dtype=complex)
    for c in reversed(list(coeffs)):
        out = out * z + c
    return out


@dataclass
class WangSolution2D:
    """Converged conformal factor on a flat disk truncation."""

    domain: GridDomain
    coeffs: tuple
    truncation_radius: float
    u: np.ndarray
    residual_norm: float
    iterations: int

    def value_at(self, x: float, y: float) -> float:
        h = self.domain.h
        fi, fj = int(np.floor(x / h)), int(np.floor(y / h))
        tx, ty = x / h - fi, y / h - fj
        vals = np.empty((2, 2))
        for a in range(2):
            for b in range(2):
                k = self.domain.node_at(fi + a, fj + b)
                if k < 0:
                    raise ValueError(f"({x:.4g}, {y:.4g}) outside the interior grid")
                vals[a, b] = self.u[k]
        return float(vals[0, 0] * (1 - tx) * (1 - ty) + vals[1, 0] * tx * (1 - ty)
                     + vals[0, 1] * (1 - tx) * ty + vals[1, 1] * tx * ty)

    def to_json(self) -> dict:
        return {
            "schema": "asl.wang_2d@1",
            "coeffs": [[complex(c).real, complex(c).imag] for c in self.coeffs],
            "truncation_radius": float(self.truncation_radius),
            "h": float(self.domain.h),
            "nodes": int(self.domain.n_nodes),
            "residual_norm": float(self.residual_norm),
            "iterations": int(self.iterations),
            "u_center": float(self.u[int(np.argmin(np.sum(self.domain.xy ** 2, axis=1)))]),
        }


def _laplacian_with_data(dom: GridDomain, data_fn):
    """5-point Shortley-Weller Laplacian plus the Dirichlet boundary load."""
    axx = _second_difference_op(dom, 0, 1, dom.h)
    ayy = _second_difference_op(dom, 2, 3, dom.h)
    load = np.zeros(dom.n_nodes)
    for d in range(4):
        cutk = np.nonzero(dom.nbr[:, d] < 0)[0]
        if len(cutk) == 0:
            continue
        theta = dom.cut[cutk, d]
        other = dom.cut[cutk, d ^ 1]
        pts = dom.xy[cutk] + theta[:, None] * (_DIRS[d] * dom.h)
        coeff = 2.0 / (theta * (theta + other) * dom.h ** 2)
        load[cutk] += coeff * data_fn(pts)
    return (axx + ayy).tocsr(), load


def solve_wang_2d(coeffs, truncation_radius: float, h: float,
                  tol: float = DEFAULT_TOL_2D,
                  max_iter: int = MAX_ITER) -> WangSolution2D:
    """Factor equation with a polynomial cubic term on a flat disk truncation.

    Dirichlet data on the truncation circle is the flat balance
    (1/3) log(2 |U|^2), the asymptotic value for polynomial data; the cubic
    term must not vanish on the circle. Coefficients are in increasing
    degree order.
    """
    coeffs = tuple(complex(c) for c in coeffs)
    if not coeffs or all(c == 0 for c in coeffs):
        raise ZeroOnBoundary("cubic term is identically zero")
    dom = build_grid(disk_shape(float(truncation_radius)), h)
    bvals = np.abs(_poly_eval(coeffs, dom.boundary_points[:, 0]
                              + 1j * dom.boundary_points[:, 1]))
    if float(np.min(bvals)) <= BOUNDARY_ZERO_REL * float(np.max(bvals)):
        raise ZeroOnBoundary("cubic term vanishes on the truncation circle")

    bc = lambda pts: np.log(2.0 * np.abs(_poly_eval(
        coeffs, pts[:, 0] + 1j * pts[:, 1])) ** 2) / 3.0
    lap, load = _laplacian_with_data(dom, bc)
    usq = np.abs(_poly_eval(coeffs, dom.xy[:, 0] + 1j * dom.xy[:, 1])) ** 2

    with np.errstate(divide="ignore"):
        u = np.maximum(np.log(2.0 * usq) / 3.0, -2.0)
    f = lap @ u + load + 4.0 * usq * np.exp(-2.0 * u) - 2.0 * np.exp(u)
    rnorm = float(np.max(np.abs(f)))

    it = 0
    for it in range(1, max_iter + 1):
        if rnorm <= tol:
            break
        jac = lap + sp.diags(-8.0 * usq * np.exp(-2.0 * u) - 2.0 * np.exp(u))
        delta = spla.spsolve(jac.tocsc(), -f)
        lam = 1.0
        while True:
            un = u + lam * delta
            fn = lap @ un + load + 4.0 * usq * np.exp(-2.0 * un) - 2.0 * np.exp(un)
            rn = float(np.max(np.abs(fn)))
            if rn < rnorm:
                u, f, rnorm = un, fn, rn
                break
            lam *= 0.5
            if lam < LINESEARCH_FLOOR:
                raise NewtonDiverged(
                    f"line search exhausted at iteration {it} (residual {rnorm:.3e})")
    else:
        if rnorm > tol:
            raise NewtonDiverged(
                f"no convergence in {max_iter} iterations (residual {rnorm:.3e})")
    return WangSolution2D(domain=dom, coeffs=coeffs,
                          truncation_radius=float(truncation_radius), u=u,
                          residual_norm=rnorm, iterations=it)
