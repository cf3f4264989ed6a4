"""Command-line experiment driver.

    obstacle-mfem membrane --example smooth-square --mode uniform --levels 7 --out runs/ex1/
    obstacle-mfem plate --example nonsmooth-lshape --mode adaptive --max-elements 4000 --out runs/ex5/

Writes whitespace-separated convergence tables (consumable by pgfplots,
gnuplot, numpy.loadtxt) plus optional mesh/solution dumps.  Runs are
fully deterministic; repeated invocations produce byte-identical files.
"""

import os

_threads = os.environ.get("OBSTACLE_MFEM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import sys

import numpy as np

from . import data as data_mod
from .adapt import adaptive_loop
from .problems import example_names, get_example

COLUMNS_MEMBRANE = ["dofs", "nelems", "error_u", "error_sigma", "est_r",
                    "est_p", "est_c", "osc", "est_total", "xi_inf",
                    "lambda_h_omega", "pdas_iters"]
COLUMNS_PLATE = ["dofs", "nelems", "error_u", "error_M", "est_r", "est_p",
                 "est_c", "osc", "est_total", "xi_inf", "lambda_h_omega",
                 "pdas_iters"]


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    return "%.17g" % v


def _write_table(path, columns, rows):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(_fmt(row[c]) for c in columns) + "\n")


def _write_outputs(outdir, kind, rows):
    columns = COLUMNS_MEMBRANE if kind == "membrane" else COLUMNS_PLATE
    errcol = "error_sigma" if kind == "membrane" else "error_M"
    _write_table(os.path.join(outdir, "convergence.dat"), columns, rows)
    _write_table(os.path.join(outdir, "errors.dat"),
                 ["dofs", "nelems", "error_u", errcol], rows)
    _write_table(os.path.join(outdir, "estimators.dat"),
                 ["dofs", "nelems", "est_r", "est_p", "est_c", "osc",
                  "est_total", "xi_inf", "lambda_h_omega", "pdas_iters"],
                 rows)


def _membrane_step(ex, cfg):
    from .estimate import estimate_membrane
    from .membrane import (MembraneProblem, check_membrane_properties,
                           membrane_errors, solve_membrane)

    def step(mesh):
        p = MembraneProblem(mesh, ex.f, ex.g)
        s = solve_membrane(p, cfg)
        rep, J = estimate_membrane(s, p, return_clement=True)
        row = {
            "dofs": mesh.num_edges + 2 * mesh.num_triangles,
            "nelems": mesh.num_triangles,
            "error_u": float("nan"), "error_sigma": float("nan"),
            "est_r": rep.totals["est_r"], "est_p": rep.totals["est_p"],
            "est_c": rep.totals["est_c"], "osc": rep.totals["osc"],
            "est_total": rep.total,
            "xi_inf": float("nan"), "lambda_h_omega": float("nan"),
            "pdas_iters": s.iterations,
        }
        if ex.exact_u is not None:
            err = membrane_errors(s, p, ex.exact_u, ex.exact_grad_u)
            row["error_u"] = err["err_u"]
            row["error_sigma"] = err["err_sigma"]
        return row, rep.element_squares, s

    return step


def _plate_step(ex, cfg, eps):
    from .estimate import estimate_plate
    from .plate import PlateProblem, plate_errors, solve_plate
    from .xspace import X_LOCAL_DIM, constraint_matrix

    def step(mesh):
        p = PlateProblem(mesh, ex.f, ex.g)
        s = solve_plate(p, cfg)
        rep = estimate_plate(s, p, eps=eps)
        nt = mesh.num_triangles
        nc = constraint_matrix(p.space).shape[0]
        row = {
            "dofs": X_LOCAL_DIM * nt - nc + 6 * nt,
            "nelems": nt,
            "error_u": float("nan"), "error_M": float("nan"),
            "est_r": rep.totals["est_r"], "est_p": rep.totals["est_p"],
            "est_c": rep.totals["est_c"], "osc": rep.totals["osc"],
            "est_total": rep.total,
            "xi_inf": rep.extras["xi_inf"],
            "lambda_h_omega": rep.extras["lambda_h_omega"],
            "pdas_iters": s.iterations,
        }
        if ex.exact_u is not None:
            err = plate_errors(s, p, ex.exact_u, ex.exact_hess_u)
            row["error_u"] = err["err_u"]
            row["error_M"] = err["err_M"]
        return row, rep.element_squares, s

    return step


def _run(args):
    from .pdas import NoConvergence, PdasConfig

    try:
        ex = get_example(args.kind, args.example)
    except KeyError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    if args.quad_order is not None:
        data_mod.set_min_quad_degree(args.quad_order)
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    cfg = PdasConfig(c=args.c)
    if args.kind == "membrane":
        inner = _membrane_step(ex, cfg)
    else:
        inner = _plate_step(ex, cfg, args.eps)

    rows = []
    level_counter = [0]

    def step(mesh):
        row, ind2, s = inner(mesh)
        row["level"] = level_counter[0]
        rows.append(row)
        if args.dump_meshes:
            k = level_counter[0]
            with open(os.path.join(outdir, "mesh_%03d.txt" % k), "w") as fh:
                fh.write(mesh.dump())
            with open(os.path.join(outdir, "solution_%03d.txt" % k), "w") as fh:
                fh.write(s.u.dump())
        level_counter[0] += 1
        return row, ind2

    mesh = ex.make_mesh(args.initial_subdivisions)
    try:
        adaptive_loop(step, mesh, mode=args.mode, theta=args.theta,
                      levels=args.levels, max_elements=args.max_elements)
    except Exception as exc:
        _write_outputs(outdir, args.kind, rows)
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1
    _write_outputs(outdir, args.kind, rows)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="obstacle-mfem",
        description="Mixed finite element solvers for membrane and "
                    "clamped-plate obstacle problems with adaptive "
                    "refinement.")
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in ("membrane", "plate"):
        sp = sub.add_parser(kind, help="%s obstacle problem" % kind)
        sp.add_argument("--example", required=True,
                        help="one of: %s" % ", ".join(example_names(kind)))
        sp.add_argument("--mode", choices=["uniform", "adaptive"],
                        default="uniform")
        sp.add_argument("--levels", type=int, default=None,
                        help="number of refinement levels")
        sp.add_argument("--max-elements", type=int, default=None,
                        help="stop once the mesh has this many elements")
        sp.add_argument("--theta", type=float, default=0.5,
                        help="bulk marking parameter (default 0.5)")
        sp.add_argument("--eps", type=float, default=1e-10,
                        help="regularized-max parameter (plate estimator)")
        sp.add_argument("--c", type=float, default=1.0,
                        help="active-set weighting in the solver")
        sp.add_argument("--quad-order", type=int, default=None,
                        help="minimum quadrature degree for data integrals")
        sp.add_argument("--initial-subdivisions", type=int, default=0)
        sp.add_argument("--dump-meshes", action="store_true")
        sp.add_argument("--out", default=".")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.levels is None and args.max_elements is None:
        args.levels = 6
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
