"""Tour of the conforming postprocessing operators.

- weighted patch averaging of piecewise constants into continuous P1,
- elementwise cubic displacement recovery from a moment tensor,
- moment-preserving smoothing of broken cubics into clamped C1 fields.

Run:  python3 demos/postprocessing_tour.py
"""

import numpy as np

from obstacle_mfem.fields import P3bField
from obstacle_mfem.hct import HCTSpace
from obstacle_mfem.mesh import make_domain, refine_uniform
from obstacle_mfem.postproc import (clement_apply, clement_weights, j_h_hct,
                                    p1_moments_of_p3b)


def main():
    mesh = refine_uniform(refine_uniform(make_domain("unit_square")))
    weights = clement_weights(mesh)
    print("patch-averaging weights on %d interior vertices" % len(weights))

    # averaging reproduces affine functions exactly at interior vertices
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    vals = 1.0 + 2.0 * cent[:, 0] - cent[:, 1]
    J = clement_apply(mesh, weights, mesh.areas * vals)
    interior = ~mesh.boundary_vertex_flags
    exact = 1.0 + 2.0 * mesh.vertices[:, 0] - mesh.vertices[:, 1]
    print("affine reproduction defect: %.2e"
          % np.abs(J.values[interior] - exact[interior]).max())

    # smoothing a random broken cubic into a C1 clamped field
    mesh = refine_uniform(make_domain("unit_square"))
    space = HCTSpace(mesh, clamped=True)
    v = P3bField(np.random.default_rng(0).standard_normal(
        (mesh.num_triangles, 10)))
    sm = j_h_hct(space, v)
    mom = p1_moments_of_p3b(mesh, v)
    print("input broken cubic with moment magnitude %.3f"
          % np.abs(mom).max())
    e = np.nonzero(~mesh.boundary_edge_flags)[0][0]
    a, b = mesh.vertices[mesh.edges[e]]
    pts = a[None, :] + np.linspace(0.2, 0.8, 3)[:, None] * (b - a)[None, :]
    tl, tr = mesh.edge_tris[e]
    print("value jump of the smoothed field across an interior edge: %.2e"
          % np.abs(sm.eval(tl, pts) - sm.eval(tr, pts)).max())
    print("gradient jump: %.2e"
          % np.abs(sm.grad(tl, pts) - sm.grad(tr, pts)).max())


if __name__ == "__main__":
    main()
