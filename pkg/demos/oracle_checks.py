"""Cross-checks of the production solver against independent oracles.

- active-set enumeration on small meshes vs the iterative solver,
- distributional conformity of the solved plate moment tensor,
- conforming primal solve vs the mixed solution.

Run:  python3 demos/oracle_checks.py
"""

import numpy as np

from obstacle_mfem.membrane import MembraneProblem, assemble_membrane, \
    solve_membrane
from obstacle_mfem.mesh import make_domain
from obstacle_mfem.oracle import (brute_force_active_set,
                                  divdiv_pairing_check, primal_p1_obstacle)
from obstacle_mfem.pdas import solve_pdas
from obstacle_mfem.plate import PlateProblem, solve_plate
from obstacle_mfem.problems import get_example


def main():
    ex = get_example("membrane", "smooth-square")
    mesh = ex.make_mesh(1)
    sysm = assemble_membrane(MembraneProblem(mesh, ex.f, ex.g))
    res = solve_pdas(sysm)
    ref = brute_force_active_set(sysm)
    print("active sets: solver %s, enumeration %s"
          % (sorted(np.nonzero(res.active)[0]), list(ref.active)))
    print("coefficient gap: %.2e" % np.abs(res.x - ref.x).max())

    exp = get_example("plate", "smooth")
    pm = exp.make_mesh(1)
    s = solve_plate(PlateProblem(pm, exp.f, exp.g))
    mism = divdiv_pairing_check(s.M, trials=3, seed=0)
    print("plate moment tensor conformity mismatch: %.2e" % mism)

    # conforming primal P1 solve agrees with the mixed displacement means
    mesh = ex.make_mesh(4)
    p = MembraneProblem(mesh, ex.f, ex.g)
    s = solve_membrane(p)
    u = primal_p1_obstacle(mesh, ex.f, ex.g)
    means = u[mesh.triangles].mean(axis=1)
    print("primal vs mixed displacement gap (elementwise means): %.2e"
          % np.abs(means - s.u.values).max())


if __name__ == "__main__":
    main()
