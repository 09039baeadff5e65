"""Command-line driver for the solvers and parameter-sweep experiments.

Every command prints one JSON document on stdout and exits 0 on success, 2
on a validation problem (usage errors included), 3 on a solver failure.
With --out DIR the document is also written there along with CSV/SVG
artifacts where the command produces them. Outputs carry no timestamps, so
re-running with identical flags yields byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .developing import (BlaschkeGridCoefficients, ConstantCoefficients,
                         develop_domain, holonomy_cylinder)
from .errors import SOLVER_ERRORS, VALIDATION_ERRORS, GeomError
from .experiments import EXPERIMENTS
from .mongeampere import (disk_shape, polygon_shape, regular_polygon_shape,
                          solve_dirichlet, square_shape)
from .projective import (ConvexDomainApprox, classify_holonomy, dual_domain,
                         hausdorff_distance)
from .residues import classify_end
from .wang import constant_solution, make_background, solve_wang_1d, solve_wang_2d

SCHEMA_VERSION = 1
DEFAULT_MA_GRID = 1.0 / 32
DEFAULT_WANG2D_GRID = 1.0 / 8
DEFAULT_TRUNCATION = 8.0
DEFAULT_WANG1D_N = 2001
DEFAULT_NECK_SWEEP = "1e-1,1e-2,1e-3,1e-4"


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _complex_list(text: str) -> list:
    try:
        return [complex(tok.strip()) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _vertex_list(text: str) -> list:
    out = []
    for pair in text.split(";"):
        if not pair.strip():
            continue
        xy = pair.split(",")
        if len(xy) != 2:
            raise argparse.ArgumentTypeError(f"vertex {pair!r} is not 'x,y'")
        out.append((float(xy[0]), float(xy[1])))
    return out


def _residue(args) -> complex:
    return complex(args.re, args.im)


def _threads(args) -> int:
    env = os.environ.get("ASL_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"ASL_THREADS must be an integer, got {env!r}")
    else:
        n = args.threads
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    return n


def _load_domain(path: str) -> ConvexDomainApprox:
    with open(path, "r", encoding="utf-8") as fh:
        return ConvexDomainApprox.from_json(json.load(fh))


# -- subcommand handlers -------------------------------------------------------
# each returns (payload dict, files dict name -> text)

def _cmd_ma_solve(args):
    if args.domain == "disk":
        shape = disk_shape(args.radius)
    elif args.domain == "square":
        shape = square_shape(args.half_width)
    elif args.domain == "regular-polygon":
        shape = regular_polygon_shape(args.sides, args.radius)
    else:
        if not args.vertices:
            raise ValueError("--domain polygon needs --vertices 'x,y;x,y;...'")
        shape = polygon_shape(args.vertices)
    h = args.grid if args.grid is not None else DEFAULT_MA_GRID
    kwargs = {} if args.tol is None else {"tol": args.tol}
    sol = solve_dirichlet(shape, h, **kwargs)
    payload = sol.to_json()
    origin = sol.domain.node_at(0, 0)
    if origin >= 0:
        payload["v_at_origin"] = float(sol.v[origin])
    files = {}
    if args.out:
        rows = ["x,y,v"]
        rows += [f"{float(x)!r},{float(y)!r},{float(v)!r}"
                 for (x, y), v in zip(sol.domain.xy, sol.v)]
        files["ma-solve.csv"] = "\n".join(rows) + "\n"
    return payload, files


def _cmd_wang_1d(args):
    kind = args.background.replace("-", "_")
    params = {}
    if kind == "flat":
        params["x_range"] = (args.x_min, args.x_max)
    else:
        params["c"] = args.c
        if kind == "cusp":
            params["depth"] = args.depth
        else:
            params["t"] = args.t
    bg = make_background(kind, n=args.n, **params)
    kwargs = {} if args.tol is None else {"tol": args.tol}
    sol = solve_wang_1d(bg, _residue(args), **kwargs)
    payload = sol.to_json()
    mid = 0.5 * (bg.x[0] + bg.x[-1])
    payload["u_at_mid"] = float(np.interp(mid, bg.x, sol.u))
    files = {}
    if args.out:
        rows = ["x,u"]
        rows += [f"{float(x)!r},{float(u)!r}" for x, u in zip(bg.x, sol.u)]
        files["wang-1d.csv"] = "\n".join(rows) + "\n"
    return payload, files


def _solve_wang_2d(args):
    h = args.grid if args.grid is not None else DEFAULT_WANG2D_GRID
    kwargs = {} if args.tol is None else {"tol": args.tol}
    return solve_wang_2d(args.coeffs, args.radius, h, **kwargs)


def _cmd_wang_2d(args):
    return _solve_wang_2d(args).to_json(), {}


def _cmd_develop(args):
    if len(args.coeffs) == 1:
        cubic = args.coeffs[0]
        data = ConstantCoefficients(constant_solution(cubic), cubic)
    else:
        data = BlaschkeGridCoefficients(_solve_wang_2d(args))
    dom = develop_domain(data, n_rays=args.rays, ray_length=args.ray_length,
                         step=args.step)
    payload = {"domain": dom.to_json(),
               "boundary_samples": len(dom.boundary)}
    files = {}
    if args.svg:
        files["develop.svg"] = dom.to_svg(overlay_triangle=True)
    return payload, files


def _cmd_holonomy(args):
    hol = holonomy_cylinder(_residue(args), step=args.step)
    cls = classify_holonomy(hol)
    return {"matrix": hol.to_json(), "classification": cls.to_json()}, {}


def _cmd_classify_residue(args):
    return classify_end(_residue(args)).to_json(), {}


def _cmd_dual(args):
    dom = _load_domain(args.input)
    dual = dual_domain(dom)
    payload = {"domain": dual.to_json(),
               "boundary_samples": len(dual.boundary)}
    files = {}
    if args.svg:
        files["dual.svg"] = dual.to_svg()
    return payload, files


def _cmd_hausdorff(args):
    est = hausdorff_distance(_load_domain(args.a), _load_domain(args.b))
    return {"value": est.value, "error_bound": est.error_bound}, {}


def _run_experiment(name: str, args):
    kwargs = {}
    if name == "neck-pinch":
        kwargs["s_values"] = args.s
        kwargs["workers"] = _threads(args)
    elif name == "benoist-hulin":
        if args.grid is not None:
            kwargs["h"] = args.grid
        kwargs["workers"] = _threads(args)
    elif name == "collar-limit":
        kwargs["workers"] = _threads(args)
    elif name == "cone-quant-fit":
        if args.grid is not None:
            kwargs["h"] = args.grid
    report = EXPERIMENTS[name](**kwargs)
    return report


def _cmd_neck_pinch(args):
    return _run_experiment("neck-pinch", args).to_json(), {}


def _cmd_experiment(args):
    return _run_experiment(args.name, args).to_json(), {}


# -- parser --------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asl",
        description="Affine spheres, Blaschke metrics, developing maps and "
                    "holonomies for convex projective structures.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for JSON/CSV/SVG artifacts")
    common.add_argument("--tol", type=float, help="solver tolerance override")
    common.add_argument("--step", type=float, help="integrator step override")
    common.add_argument("--grid", "--h", dest="grid", type=float,
                        help="grid spacing override")
    common.add_argument("--json", action="store_true",
                        help="accepted for symmetry; JSON is always emitted")
    common.add_argument("--svg", action="store_true",
                        help="also write an SVG drawing where applicable")
    common.add_argument("--threads", type=int, default=1,
                        help="sweep parallelism (env ASL_THREADS overrides)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ma-solve", parents=[common],
                       help="Dirichlet Monge-Ampere solve on a convex domain")
    p.add_argument("--domain", required=True,
                   choices=["disk", "square", "regular-polygon", "polygon"])
    p.add_argument("--radius", type=float, default=1.0,
                   help="disk radius / polygon circumradius")
    p.add_argument("--half-width", type=float, default=1.0)
    p.add_argument("--sides", type=int, default=6)
    p.add_argument("--vertices", type=_vertex_list, default=None,
                   help="semicolon-separated x,y pairs")
    p.set_defaults(func=_cmd_ma_solve)

    p = sub.add_parser("wang-1d", parents=[common],
                       help="factor equation on a 1-D cylinder background")
    p.add_argument("--background", required=True,
                   choices=["flat", "cusp", "collar", "grafted-flat"])
    p.add_argument("--re", type=float, default=1.0, help="residue real part")
    p.add_argument("--im", type=float, default=0.0, help="residue imaginary part")
    p.add_argument("--t", type=float, default=1e-3, help="neck parameter")
    p.add_argument("--c", type=float, default=float(np.exp(-1.0)),
                   help="core parameter in (0, 1)")
    p.add_argument("--depth", type=float, default=8.0, help="cusp window length")
    p.add_argument("--x-min", type=float, default=-5.0)
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--n", type=int, default=DEFAULT_WANG1D_N, help="grid nodes")
    p.set_defaults(func=_cmd_wang_1d)

    p = sub.add_parser("wang-2d", parents=[common],
                       help="factor equation for a polynomial cubic term on a "
                            "disk truncation")
    p.add_argument("--coeffs", type=_complex_list, required=True,
                   help="polynomial coefficients, increasing degree")
    p.add_argument("--radius", type=float, default=DEFAULT_TRUNCATION,
                   help="truncation radius")
    p.set_defaults(func=_cmd_wang_2d)

    p = sub.add_parser("develop", parents=[common],
                       help="develop the domain of a cylinder or polynomial "
                            "coefficient field")
    p.add_argument("--coeffs", type=_complex_list, required=True,
                   help="one value = constant cubic term; several = polynomial")
    p.add_argument("--radius", type=float, default=DEFAULT_TRUNCATION)
    p.add_argument("--rays", type=int, default=24)
    p.add_argument("--ray-length", type=float, default=6.0)
    p.set_defaults(func=_cmd_develop)

    p = sub.add_parser("holonomy", parents=[common],
                       help="cylinder holonomy matrix for a residue")
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, default=0.0)
    p.set_defaults(func=_cmd_holonomy)

    p = sub.add_parser("classify-residue", parents=[common],
                       help="end classification from the residue cubic")
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, default=0.0)
    p.set_defaults(func=_cmd_classify_residue)

    p = sub.add_parser("dual", parents=[common],
                       help="polar dual of a stored domain")
    p.add_argument("--input", required=True, help="domain JSON file")
    p.set_defaults(func=_cmd_dual)

    p = sub.add_parser("hausdorff", parents=[common],
                       help="Hausdorff distance between two stored domains")
    p.add_argument("--a", required=True, help="first domain JSON file")
    p.add_argument("--b", required=True, help="second domain JSON file")
    p.set_defaults(func=_cmd_hausdorff)

    p = sub.add_parser("neck-pinch", parents=[common],
                       help="bulge-flow Hausdorff sweep toward the triangle")
    p.add_argument("--s", type=_float_list, default=_float_list(DEFAULT_NECK_SWEEP),
                   help="comma-separated flow parameters")
    p.set_defaults(func=_cmd_neck_pinch)

    p = sub.add_parser("experiment", parents=[common],
                       help="run a named parameter-sweep experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--s", type=_float_list, default=_float_list(DEFAULT_NECK_SWEEP),
                   help="flow parameters (neck-pinch only)")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _threads(args)  # validate early so a bad ASL_THREADS is a usage error
        payload, files = args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except GeomError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    stem = args.command if args.command != "experiment" else f"experiment-{args.name}"
    doc = {"schema": SCHEMA_VERSION, "command": args.command, "result": payload}
    if args.out:
        names = sorted(files) + [f"{stem}.json"]
        doc["artifacts"] = names
        if isinstance(payload.get("artifacts"), list):
            payload["artifacts"] = names
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        try:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            for name, content in files.items():
                (out / name).write_text(content, encoding="utf-8")
            (out / f"{stem}.json").write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
