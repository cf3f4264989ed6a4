"""Adaptive refinement for the clamped plate over an elliptic paraboloid
obstacle on an L-shaped domain (no known solution; estimator-driven).

Run:  python3 demos/plate_adaptive.py
"""

import numpy as np

from obstacle_mfem.adapt import adaptive_loop
from obstacle_mfem.estimate import estimate_plate
from obstacle_mfem.plate import PlateProblem, solve_plate
from obstacle_mfem.problems import get_example


def main():
    ex = get_example("plate", "ellipse-lshape")

    def step(mesh):
        p = PlateProblem(mesh, ex.f, ex.g)
        s = solve_plate(p)
        rep = estimate_plate(s, p)
        est = np.sqrt(rep.parts["est_r"].sum() + rep.parts["osc"].sum())
        print("%8d elements   estimator %.4e   multiplier mass %.4e"
              % (mesh.num_triangles, est, rep.extras["lambda_h_omega"]))
        return {"est": est}, rep.element_squares

    adaptive_loop(step, ex.make_mesh(0), "adaptive", theta=0.5,
                  max_elements=400, levels=40)
    print("\nExpected: the estimator decays like dimension^(-1) under "
          "adaptive refinement, against ~0.27 for uniform refinement.")


if __name__ == "__main__":
    main()
