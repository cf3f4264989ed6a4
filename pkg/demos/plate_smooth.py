"""Uniform convergence study for the clamped-plate obstacle problem with
a known radially symmetric solution.

Run:  python3 demos/plate_smooth.py
"""

from obstacle_mfem.estimate import estimate_plate
from obstacle_mfem.mesh import refine_uniform
from obstacle_mfem.plate import PlateProblem, plate_errors, solve_plate
from obstacle_mfem.problems import get_example


def main():
    ex = get_example("plate", "smooth")
    mesh = ex.make_mesh(0)
    print("%8s %12s %12s %12s %12s" % ("nelems", "err_u", "err_M",
                                       "est_r", "xi_inf"))
    for level in range(5):
        p = PlateProblem(mesh, ex.f, ex.g)
        s = solve_plate(p)
        err = plate_errors(s, p, ex.exact_u, ex.exact_hess_u)
        rep = estimate_plate(s, p)
        print("%8d %12.4e %12.4e %12.4e %12.4e" % (
            mesh.num_triangles, err["err_u"], err["err_M"],
            rep.totals["est_r"], rep.extras["xi_inf"]))
        mesh = refine_uniform(mesh)
    print("\nExpected: errors decay like (total dimension)^(-1) once the "
          "contact disk is resolved.")


if __name__ == "__main__":
    main()
