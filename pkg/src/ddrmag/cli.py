"""Command-line front end: single solves, verification batteries,
convergence studies, and mesh statistics."""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import mesh as meshmod
from . import scheme, verify
from .ddr_core import DDR

DEGREE_CAP = 3

log = logging.getLogger("ddrmag")


def _setup_logging():
    level = os.environ.get("DDR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_mesh(args, parser):
    if getattr(args, "mesh", None):
        return meshmod.load_mesh(args.mesh)
    if getattr(args, "family", None):
        return meshmod.generate_mesh(args.family, args.n)
    parser.error("provide either --mesh PATH or --family NAME --n N")


def _check_degree(args, parser):
    if args.degree < 0:
        parser.error("--degree must be nonnegative")
    if args.degree > DEGREE_CAP and not args.allow_high_degree:
        parser.error("--degree %d exceeds the supported cap %d "
                     "(pass --allow-high-degree to override)"
                     % (args.degree, DEGREE_CAP))


def _add_common(p):
    p.add_argument("--degree", type=int, required=True,
                   help="polynomial degree k of the sequence")
    p.add_argument("--allow-high-degree", action="store_true",
                   help="lift the default degree cap of %d" % DEGREE_CAP)
    p.add_argument("--threads", type=int, default=1,
                   help="thread count for element-parallel sections "
                        "(results are identical for any value)")


def _add_mesh_source(p):
    p.add_argument("--mesh", help="path to a mesh file")
    p.add_argument("--family", choices=("cartesian", "kuhn-tet"),
                   help="built-in mesh family")
    p.add_argument("--n", type=int, default=1,
                   help="refinement level for --family")


def main(argv=None):
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="ddrmag",
        description="Arbitrary-order discrete de Rham solver for mixed "
                    "magnetostatics on polyhedral meshes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one case")
    _add_mesh_source(p_solve)
    _add_common(p_solve)
    p_solve.add_argument("--permeability", choices=("unit", "affine"),
                         default="unit")
    p_solve.add_argument("--out", help="write a one-row results CSV here")
    p_solve.add_argument("--timings", action="store_true",
                         help="fill the timing columns in the CSV")
    p_solve.add_argument("--residual-tol", type=float, default=1e-10)

    p_verify = sub.add_parser("verify", help="run the certification checks")
    _add_mesh_source(p_verify)
    _add_common(p_verify)
    p_verify.add_argument("--report", help="also write the report here")
    p_verify.add_argument("--json", action="store_true",
                          help="emit the report as JSON")

    p_conv = sub.add_parser("convergence", help="run a refinement study")
    p_conv.add_argument("--family", choices=("cartesian", "kuhn-tet"),
                        required=True)
    p_conv.add_argument("--levels", required=True,
                        help="comma-separated refinement levels, e.g. 2,4,8")
    _add_common(p_conv)
    p_conv.add_argument("--permeability", choices=("unit", "affine"),
                        default="unit")
    p_conv.add_argument("--out", help="write the results CSV here")
    p_conv.add_argument("--timings", action="store_true")
    p_conv.add_argument("--residual-tol", type=float, default=1e-10)

    p_info = sub.add_parser("mesh-info", help="print mesh statistics")
    p_info.add_argument("--mesh")
    p_info.add_argument("--family", choices=("cartesian", "kuhn-tet"))
    p_info.add_argument("--n", type=int, default=1)

    args = parser.parse_args(argv)

    if args.command == "mesh-info":
        mesh = _load_mesh(args, parser)
        for key, val in meshmod.mesh_stats(mesh).items():
            if isinstance(val, tuple):
                val = " .. ".join("%g" % float(v) for v in val)
            print("%s: %s" % (key, val))
        return 0

    if args.command == "verify":
        _check_degree(args, parser)
        if args.mesh or args.family:
            mesh = _load_mesh(args, parser)
            name = args.mesh or ("%s-%d" % (args.family, args.n))
            report = verify.run_battery(degrees=(args.degree,),
                                        meshes=[(name, mesh)])
        else:
            report = verify.run_battery(degrees=(args.degree,))
        text = (json.dumps(report, indent=2, default=float) if args.json
                else verify.format_report(report))
        print(text)
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(text + "\n")
        return 0 if report["passed"] else 1

    if args.command == "solve":
        _check_degree(args, parser)
        mesh = _load_mesh(args, parser)
        case = scheme.ManufacturedCase(args.permeability)
        try:
            out = scheme.solve_case(mesh, args.degree, case,
                                    residual_tol=args.residual_tol)
        except RuntimeError as exc:
            print("solver failure: %s" % exc, file=sys.stderr)
            return 3
        print("h: %.17g" % out["h"])
        print("energy_error: %.17g" % out["energy_error"])
        print("dim_curl: %d" % out["dim_curl"])
        print("dim_div: %d" % out["dim_div"])
        print("norm_H: %.17g" % np.linalg.norm(out["H"]))
        print("norm_A: %.17g" % np.linalg.norm(out["A"]))
        if args.out:
            row = {"MeshSize": out["h"],
                   "EnergyError": out["energy_error"],
                   "DimXCurl": out["dim_curl"], "DimXDiv": out["dim_div"],
                   "EOC": None, "AssemblyTime": out["assembly_time"],
                   "SolveTime": out["solve_time"]}
            scheme.write_csv([row], args.out,
                             include_timings=args.timings)
        return 0

    if args.command == "convergence":
        _check_degree(args, parser)
        try:
            levels = [int(s) for s in args.levels.split(",") if s]
        except ValueError:
            parser.error("--levels must be comma-separated integers")
        if not levels:
            parser.error("--levels must name at least one level")
        try:
            rows = scheme.convergence_run(args.family, levels, args.degree,
                                          mu_mode=args.permeability,
                                          residual_tol=args.residual_tol)
        except RuntimeError as exc:
            print("solver failure: %s" % exc, file=sys.stderr)
            return 3
        csv_text = scheme.rows_to_csv(rows, include_timings=args.timings)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(csv_text)
        else:
            sys.stdout.write(csv_text)
        return 0

    parser.error("unknown command")


if __name__ == "__main__":
    sys.exit(main())
