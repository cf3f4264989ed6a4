"""Adaptive refinement for the membrane problem with a pyramid obstacle
on an L-shaped domain: the estimator steers elements toward the
re-entrant corner and the obstacle ridge.

Run:  python3 demos/membrane_adaptive_lshape.py
"""

import numpy as np

from obstacle_mfem.adapt import adaptive_loop
from obstacle_mfem.estimate import estimate_membrane
from obstacle_mfem.membrane import MembraneProblem, solve_membrane
from obstacle_mfem.problems import get_example


def main():
    ex = get_example("membrane", "lshape-pyramid")

    def step(mesh):
        p = MembraneProblem(mesh, ex.f, ex.g)
        s = solve_membrane(p)
        rep = estimate_membrane(s, p)
        print("%8d elements   estimator %.4e   contact elements %d"
              % (mesh.num_triangles, rep.total, int(s.active.sum())))
        return {"mesh": mesh, "est": rep.total}, rep.element_squares

    records = adaptive_loop(step, ex.make_mesh(0), "adaptive", theta=0.5,
                            max_elements=2000, levels=40)
    mesh = records[-1]["mesh"]
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    avg = mesh.num_triangles / 3.0  # domain area is 3
    for label, c, frac in (("re-entrant corner", (0.0, 0.0), 0.75),
                           ("obstacle ridge", (0.5, 0.5), 1.0)):
        d2 = ((cent - np.array(c)) ** 2).sum(axis=1)
        dens = (d2 < 0.15 ** 2).sum() / (frac * np.pi * 0.15 ** 2)
        print("element density near %s: %.1fx the average" % (label, dens / avg))


if __name__ == "__main__":
    main()
