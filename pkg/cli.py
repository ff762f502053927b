#!/usr/bin/env python3
# ==================== cli.py ====================
"""
solgeo command line

Every capability of the toolkit behind one argparse entry point. Tables
go to CSV (stdout or --out), meshes to OBJ/PLY/CSV, scalars to stdout.

Exit codes: 0 success, 2 bad input, 3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from tools.mesh_io import FORMATS, export_mesh
from tools.sphere_mesh import VertexTag, build_sphere, euler_characteristic
from utils.config import Settings, get_settings, load_settings, use_settings
from utils.cutlocus import (
    classify,
    cut_locus_curve,
    cut_time,
    distance,
    distance_batch,
    log_map,
    psi_profile,
    triangle_margin,
    wavefront,
)
from utils.errors import ConvergenceError, InvalidInputError, SolRangeError
from utils.flow import exp_map, geodesic_trace
from utils.sol_core import Sector, SolPoint, TangentVector
from utils.specfun import level_set, level_set_from_period

logger = logging.getLogger("solgeo.cli")

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NO_CONVERGENCE = 3

# p and m for the signs of x and y
SECTOR_NAMES = {"pp": Sector(1, 1), "mp": Sector(-1, 1), "pm": Sector(1, -1), "mm": Sector(-1, -1)}


# ------------------------
# Output helpers
# ------------------------


class Printer:
    """Formats numbers with the run's significant digits"""

    def __init__(self, digits: int, out: Optional[str] = None):
        self.digits = digits
        self.out = out

    def num(self, value: float) -> str:
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        # + 0.0 turns -0.0 into 0.0
        return format(float(value) + 0.0, f".{self.digits}g")

    def nums(self, values: Iterable[float]) -> str:
        return " ".join(self.num(v) for v in values)

    def line(self, text: str) -> None:
        sys.stdout.write(text + "\n")

    def table(self, frame: pd.DataFrame, path: Optional[str] = None) -> None:
        path = path or self.out
        float_format = f"%.{self.digits}g"
        if path:
            frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n")
            logger.info("wrote %d rows to %s", len(frame), path)
        else:
            frame.to_csv(sys.stdout, index=False, float_format=float_format, lineterminator="\n")


def _settings_from(args: argparse.Namespace) -> Settings:
    overrides = {"dt": args.dt, "tol_perfect": args.tol_perfect, "seed": args.seed}
    if args.verbose:
        overrides["log_level"] = "DEBUG" if args.verbose > 1 else "INFO"
    return load_settings(args.config, overrides)


def _vector(values: Sequence[float]) -> TangentVector:
    return TangentVector(*(float(v) for v in values))


def _point(values: Sequence[float]) -> SolPoint:
    return SolPoint(*(float(v) for v in values))


# ------------------------
# Subcommands
# ------------------------


def cmd_exp(args: argparse.Namespace, printer: Printer) -> int:
    V = _vector(args.vector)
    printer.line(printer.nums(exp_map(V, args.dt)))
    if args.trace:
        printer.table(geodesic_trace(V), args.trace)
    return EXIT_OK


def cmd_classify(args: argparse.Namespace, printer: Printer) -> int:
    V = _vector(args.vector)
    result = classify(V)
    cut = cut_time(V.unit()) if V.norm() > 0 else math.inf
    printer.line(f"{result.tag.value} mu={printer.num(result.mu)} cut_time={printer.num(cut)}")
    return EXIT_OK


def cmd_distance(args: argparse.Namespace, printer: Printer) -> int:
    printer.line(printer.num(distance(_point(args.p), _point(args.q))))
    return EXIT_OK


def cmd_log(args: argparse.Namespace, printer: Printer) -> int:
    result = log_map(_point(args.point))
    logger.info("membership %s, residual %.3e", result.membership.value, result.residual)
    for V in result.solutions:
        printer.line(printer.nums(V))
    return EXIT_OK


def cmd_cutlocus(args: argparse.Namespace, printer: Printer) -> int:
    curve = cut_locus_curve(args.thetas, SECTOR_NAMES[args.sector])
    printer.table(curve.to_frame())
    return EXIT_OK


def cmd_wavefront(args: argparse.Namespace, printer: Printer) -> int:
    front = wavefront(args.L, args.n)
    margin = triangle_margin(front)
    samples = front.to_frame()
    profile = psi_profile(front)
    samples["psi"] = profile["psi"].to_numpy()
    samples["dpsi"] = profile["dpsi"].to_numpy()
    samples["margin"] = margin
    samples["inside"] = margin > 0
    samples.insert(0, "kind", "sample")
    # the far vertex is the endpoint itself and sits on the triangle
    samples.loc[samples.index[-1], "inside"] = True
    a_end, b_end = front.endpoint
    triangle = pd.DataFrame({
        "kind": "vertex",
        "a": [0.0, a_end, a_end],
        "b": [0.0, 0.0, b_end],
    })
    printer.table(pd.concat([samples, triangle], ignore_index=True))
    return EXIT_OK


def cmd_sphere(args: argparse.Namespace, printer: Printer) -> int:
    fmt = args.format or "obj"
    if fmt not in FORMATS:
        raise InvalidInputError(f"sphere meshes are written as {', '.join(FORMATS)}")
    mesh = build_sphere(args.L, args.resolution)
    path = export_mesh(mesh, fmt, args.out or f"sphere.{fmt}")
    summary = (
        f"{path} vertices={len(mesh.vertices)} faces={len(mesh.faces)} "
        f"singular={mesh.count(VertexTag.SINGULAR)} arcs={len(mesh.singular_arcs)} "
        f"chi={euler_characteristic(mesh)}"
    )
    if args.check < 0:
        raise InvalidInputError("--check needs a non-negative vertex count")
    if args.check:
        rng = np.random.default_rng(get_settings().seed)
        picks = rng.choice(len(mesh.vertices), size=min(args.check, len(mesh.vertices)), replace=False)
        error = np.abs(distance_batch(np.zeros(3), mesh.vertices[np.sort(picks)]) - mesh.L)
        summary += f" checked={len(picks)} max_distance_error={printer.num(float(error.max()))}"
    printer.line(summary)
    return EXIT_OK


def cmd_period(args: argparse.Namespace, printer: Printer) -> int:
    if args.from_L is not None:
        level = level_set_from_period(args.from_L)
    elif args.a is not None:
        level = level_set(args.a)
    else:
        raise InvalidInputError("period needs a or --from-L")
    printer.line(printer.nums([level.a, level.L, level.m, level.H]))
    return EXIT_OK


def cmd_holonomy(args: argparse.Namespace, printer: Printer) -> int:
    level = level_set_from_period(args.L)
    printer.line(printer.nums([level.L, level.m, level.H]))
    return EXIT_OK


# ------------------------
# Parser
# ------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solgeo", description="Geodesics, cut locus and metric spheres of Sol")
    parser.add_argument("--dt", type=float, default=None, help="RK4 step for flowlines, wavefronts and traces; first step of exp.")
    parser.add_argument("--tol-perfect", dest="tol_perfect", type=float, default=None,
                        help="Half width of the Perfect band around mu = pi.")
    parser.add_argument("--seed", type=int, default=None, help="Seed for sampled checks such as sphere --check.")
    parser.add_argument("--out", default=None, help="Output file for tables and meshes.")
    parser.add_argument("--format", choices=list(FORMATS), default=None, help="Mesh file format.")
    parser.add_argument("--config", default=None, help="Flat key=value settings file.")
    parser.add_argument("--full", action="store_true", help="Print 17 significant digits.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging, repeat for debug.")

    subparsers = parser.add_subparsers(dest="cmd", required=True)

    sp = subparsers.add_parser("exp", help="Exponential map at the identity.")
    sp.add_argument("vector", nargs=3, type=float, metavar=("X", "Y", "Z"))
    sp.add_argument("--trace", default=None, help="Write the trajectory t,x,y,z,ux,uy,uz as CSV.")
    sp.set_defaults(func=cmd_exp)

    sp = subparsers.add_parser("classify", help="Small, Perfect or Large, with mu and cut time.")
    sp.add_argument("vector", nargs=3, type=float, metavar=("X", "Y", "Z"))
    sp.set_defaults(func=cmd_classify)

    sp = subparsers.add_parser("distance", help="Distance between two points.")
    sp.add_argument("p", nargs=3, type=float, metavar=("PX", "PY", "PZ"))
    sp.add_argument("q", nargs=3, type=float, metavar=("QX", "QY", "QZ"))
    sp.set_defaults(func=cmd_distance)

    sp = subparsers.add_parser("log", help="Minimizing preimages of a point under exp.")
    sp.add_argument("point", nargs=3, type=float, metavar=("X", "Y", "Z"))
    sp.set_defaults(func=cmd_log)

    sp = subparsers.add_parser("cutlocus", help="Spine samples theta,f,g,x,y of one sector.")
    sp.add_argument("--sector", choices=list(SECTOR_NAMES), default="pp")
    sp.add_argument("--thetas", type=int, default=256, help="Number of sample angles.")
    sp.set_defaults(func=cmd_cutlocus)

    sp = subparsers.add_parser("wavefront", help="Samples of the wavefront and its bounding triangle.")
    sp.add_argument("L", type=float)
    sp.add_argument("n", type=int, nargs="?", default=64)
    sp.set_defaults(func=cmd_wavefront)

    sp = subparsers.add_parser("sphere", help="Mesh of the metric sphere of radius L.")
    sp.add_argument("L", type=float)
    sp.add_argument("--resolution", type=int, default=None)
    sp.add_argument("--check", type=int, default=0, metavar="K",
                    help="Check the distance to L at K randomly chosen vertices.")
    sp.set_defaults(func=cmd_sphere)

    sp = subparsers.add_parser("period", help="Level set record a, L, m, H.")
    sp.add_argument("a", type=float, nargs="?", default=None)
    sp.add_argument("--from-L", dest="from_L", type=float, default=None)
    sp.set_defaults(func=cmd_period)

    sp = subparsers.add_parser("holonomy", help="L, m, H for a period L.")
    sp.add_argument("L", type=float)
    sp.set_defaults(func=cmd_holonomy)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = _settings_from(args)
    except (ValueError, FileNotFoundError) as e:
        sys.stderr.write(f"solgeo: bad configuration: {e}\n")
        return EXIT_BAD_INPUT

    logging.basicConfig(level=settings.log_level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    use_settings(settings)
    printer = Printer(settings.full_digits if args.full else settings.digits, args.out)

    try:
        return args.func(args, printer)
    except (ConvergenceError, SolRangeError) as e:
        sys.stderr.write(f"solgeo: {e}\n")
        return EXIT_NO_CONVERGENCE
    except ValueError as e:
        sys.stderr.write(f"solgeo: {e}\n")
        return EXIT_BAD_INPUT
    finally:
        use_settings(None)


if __name__ == "__main__":
    sys.exit(main())
