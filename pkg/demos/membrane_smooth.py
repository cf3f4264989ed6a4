"""Uniform convergence study for the membrane obstacle problem with a
known solution; prints an error/estimator table.

Run:  python3 demos/membrane_smooth.py
"""

import numpy as np

from obstacle_mfem.estimate import estimate_membrane
from obstacle_mfem.membrane import (MembraneProblem, membrane_errors,
                                    solve_membrane)
from obstacle_mfem.mesh import refine_uniform
from obstacle_mfem.problems import get_example


def main():
    ex = get_example("membrane", "smooth-square")
    mesh = ex.make_mesh(0)
    print("%8s %12s %12s %12s %6s" % ("nelems", "err_u", "err_sigma",
                                      "estimator", "iters"))
    prev = None
    for level in range(6):
        p = MembraneProblem(mesh, ex.f, ex.g)
        s = solve_membrane(p)
        err = membrane_errors(s, p, ex.exact_u, ex.exact_grad_u)
        rep = estimate_membrane(s, p)
        line = "%8d %12.4e %12.4e %12.4e %6d" % (
            mesh.num_triangles, err["err_u"], err["err_sigma"], rep.total,
            s.iterations)
        if prev is not None:
            eoc = np.log(prev / err["err_u"]) / np.log(4.0)
            line += "   EOC(u) vs nelems: %.2f" % eoc
        prev = err["err_u"]
        print(line)
        mesh = refine_uniform(mesh)
    print("\nExpected: errors and estimator decay like nelems^(-1/2).")


if __name__ == "__main__":
    main()
