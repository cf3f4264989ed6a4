import numpy as np
import pytest

from obstacle_mfem.fields import P3bField, p3_basis, p3_ref_nodes
from obstacle_mfem.hct import HCTField, HCTSpace
from obstacle_mfem.mesh import make_domain, refine_nvb, refine_uniform
from obstacle_mfem.postproc import e_h


def _broken_from_global(mesh, func):
    """Broken cubic holding the elementwise interpolant of a global cubic."""
    nodes = p3_ref_nodes()
    coeffs = np.empty((mesh.num_triangles, 10))
    for t in range(mesh.num_triangles):
        verts = mesh.triangle_coords(t)
        v0 = verts[0]
        B = np.column_stack([verts[1] - v0, verts[2] - v0])
        phys = v0[None, :] + nodes @ B.T
        coeffs[t] = func(phys)
    return P3bField(coeffs)


def test_quadratic_reproduction():
    m = refine_uniform(make_domain("unit_square"))
    space = HCTSpace(m, clamped=False)

    def q(p):
        return 1.0 + 2 * p[:, 0] - p[:, 1] + 0.5 * p[:, 0] ** 2 \
            - p[:, 0] * p[:, 1] + 0.25 * p[:, 1] ** 2

    v = _broken_from_global(m, q)
    f = e_h(space, v)
    rng = np.random.default_rng(0)
    for t in range(m.num_triangles):
        verts = m.triangle_coords(t)
        bary = rng.dirichlet([1, 1, 1], size=5)
        pts = bary @ verts
        assert np.abs(f.eval(t, pts) - q(pts)).max() < 1e-12
        g = f.grad(t, pts)
        gx = 2 + pts[:, 0] - pts[:, 1]
        gy = -1 - pts[:, 0] + 0.5 * pts[:, 1]
        assert np.abs(g - np.column_stack([gx, gy])).max() < 1e-10
        H = f.hess(t, pts)
        assert np.abs(H[:, 0, 0] - 1.0).max() < 1e-9
        assert np.abs(H[:, 0, 1] + 1.0).max() < 1e-9
        assert np.abs(H[:, 1, 1] - 0.5).max() < 1e-9


def _edge_samples(a, b, n=7):
    s = np.linspace(0.02, 0.98, n)
    return a[None, :] + s[:, None] * (b - a)[None, :]


def test_c1_continuity_across_mesh_edges():
    rng = np.random.default_rng(1)
    m = refine_nvb(refine_uniform(make_domain("lshape_paper")), [0, 3, 5])
    space = HCTSpace(m, clamped=True)
    f = HCTField(space, rng.standard_normal(space.ndof))
    for e in range(m.num_edges):
        if m.boundary_edge_flags[e]:
            continue
        a, b = m.vertices[m.edges[e]]
        pts = _edge_samples(a, b)
        tl, tr = m.edge_tris[e]
        assert np.abs(f.eval(tl, pts) - f.eval(tr, pts)).max() < 1e-9
        assert np.abs(f.grad(tl, pts) - f.grad(tr, pts)).max() < 1e-8


def test_c1_continuity_inside_macro_element():
    rng = np.random.default_rng(2)
    m = make_domain("unit_square", 1)
    space = HCTSpace(m, clamped=False)
    f = HCTField(space, rng.standard_normal(space.ndof))
    for t in range(m.num_triangles):
        subs = space.subtriangle_vertices(t)
        c = space.centers[t]
        verts = m.triangle_coords(t)
        for i in range(3):
            pts = _edge_samples(c, verts[i])
            # evaluate forcing each of the two adjacent subtriangles
            dv = space.local_dof_values(t, f.coeffs)
            sa = np.full(len(pts), i)
            sb = np.full(len(pts), (i + 2) % 3)
            va = space.eval_local(t, dv, pts, sub=sa)
            vb = space.eval_local(t, dv, pts, sub=sb)
            assert np.abs(va - vb).max() < 1e-9
            ga = space.eval_grad_local(t, dv, pts, sub=sa)
            gb = space.eval_grad_local(t, dv, pts, sub=sb)
            assert np.abs(ga - gb).max() < 1e-8


def test_clamped_boundary_values_vanish():
    rng = np.random.default_rng(3)
    m = refine_uniform(make_domain("unit_square"))
    space = HCTSpace(m, clamped=True)
    f = HCTField(space, rng.standard_normal(space.ndof))
    for e in np.nonzero(m.boundary_edge_flags)[0]:
        a, b = m.vertices[m.edges[e]]
        pts = _edge_samples(a, b)
        t = max(m.edge_tris[e])
        assert np.abs(f.eval(t, pts)).max() < 1e-9
        assert np.abs(f.grad(t, pts)).max() < 1e-8


def test_dof_count():
    m = refine_uniform(make_domain("unit_square"))
    nvf = int((~m.boundary_vertex_flags).sum())
    nef = int((~m.boundary_edge_flags).sum())
    assert HCTSpace(m, clamped=True).ndof == 3 * nvf + nef
    assert HCTSpace(m, clamped=False).ndof == 3 * m.num_vertices + m.num_edges
