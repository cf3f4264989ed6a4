import numpy as np
import pytest

from obstacle_mfem import quadrature
from obstacle_mfem.data import ScalarData, constant
from obstacle_mfem.fields import (P0Field, P1cField, P1dField, P3bField,
                                  RT0Field, barycentric, interpolate_rt0,
                                  p1_mass, p3_basis, p3_ref_nodes, project_p0,
                                  project_p1d, to_reference)
from obstacle_mfem.mesh import make_domain, refine_uniform


def test_project_p0_of_x_squared():
    # per-triangle means of x^2 on the 2-triangle unit square:
    # lower-right triangle ((0,0),(1,0),(1,1)): mean = 1/2
    # upper-left  triangle ((1,1),(0,1),(0,0)): mean = 1/6
    m = make_domain("unit_square")
    f = ScalarData(lambda p: p[:, 0] ** 2)
    pf = project_p0(f, m)
    means = sorted(pf.values)
    assert abs(means[0] - 1.0 / 6.0) < 1e-13
    assert abs(means[1] - 1.0 / 2.0) < 1e-13


def test_project_p1d_reproduces_affine():
    m = make_domain("lshape_paper", 1)
    f = ScalarData(lambda p: 2 * p[:, 0] - 3 * p[:, 1] + 1)
    pf = project_p1d(f, m)
    for t in range(m.num_triangles):
        verts = m.triangle_coords(t)
        expected = 2 * verts[:, 0] - 3 * verts[:, 1] + 1
        assert np.abs(pf.values[t] - expected).max() < 1e-12


def test_p1_mass():
    M = p1_mass(2.0)
    assert np.allclose(M, 2.0 / 12.0 * np.array(
        [[2, 1, 1], [1, 2, 1], [1, 1, 2]]))


def test_rt0_constant_reproduction_and_commuting():
    m = make_domain("unit_square", 1)
    c = np.array([0.7, -0.3])
    fld = interpolate_rt0(lambda p: np.broadcast_to(c, (len(p), 2)), m)
    for t in range(m.num_triangles):
        pts = m.triangle_coords(t).mean(axis=0, keepdims=True)
        assert np.abs(fld.eval(m, t, pts) - c).max() < 1e-14
        assert abs(fld.div(m, t)) < 1e-13


def test_rt0_commuting_diagram():
    # div(RT0-interpolant) equals the elementwise mean of the divergence
    m = make_domain("unit_square", 1)

    def vec(p):
        x, y = p[:, 0], p[:, 1]
        return np.column_stack([x * x + y, x * y - 2 * y])

    def divv(p):
        return 2 * p[:, 0] + p[:, 0] - 2

    fld = interpolate_rt0(vec, m)
    pd = project_p0(ScalarData(divv), m)
    for t in range(m.num_triangles):
        assert abs(fld.div(m, t) - pd.values[t]) < 1e-12


def test_p3_basis_is_nodal():
    nodes = p3_ref_nodes()
    V = p3_basis(nodes)
    assert np.abs(V - np.eye(10)).max() < 1e-12


def test_p3b_field_derivatives_fd():
    m = make_domain("unit_square")
    rng = np.random.default_rng(0)
    f = P3bField(rng.standard_normal((m.num_triangles, 10)))
    t = 0
    pts = np.array([[0.61, 0.25], [0.7, 0.4]])  # inside triangle 0
    h = 1e-6
    # first derivatives in physical coordinates
    for dx, dy in [(1, 0), (0, 1)]:
        d = np.array([dx, dy]) * h
        fd = (f.eval(m, t, pts + d) - f.eval(m, t, pts - d)) / (2 * h)
        an = f.eval(m, t, pts, deriv=(dx, dy))
        assert np.abs(fd - an).max() < 1e-6
    # second derivatives via differences of first derivatives
    for dx, dy in [(2, 0), (1, 1), (0, 2)]:
        d = np.array([1, 0]) * h if dx >= 1 else np.array([0, 1]) * h
        lo = (dx - 1, dy) if dx >= 1 else (dx, dy - 1)
        fd = (f.eval(m, t, pts + d, deriv=lo)
              - f.eval(m, t, pts - d, deriv=lo)) / (2 * h)
        an = f.eval(m, t, pts, deriv=(dx, dy))
        assert np.abs(fd - an).max() < 1e-5
    # hess_ref agrees with the second-derivative evaluations
    ref = to_reference(m.triangle_coords(t), pts)
    H = f.hess_ref(m, t, ref)
    assert np.abs(H[:, 0, 0] - f.eval(m, t, pts, deriv=(2, 0))).max() < 1e-12
    assert np.abs(H[:, 0, 1] - f.eval(m, t, pts, deriv=(1, 1))).max() < 1e-12
    assert np.abs(H[:, 1, 1] - f.eval(m, t, pts, deriv=(0, 2))).max() < 1e-12


def test_p1c_field_gradient_and_dump():
    m = make_domain("unit_square", 1)
    vals = 2 * m.vertices[:, 0] + 3 * m.vertices[:, 1]
    f = P1cField(vals)
    for t in range(m.num_triangles):
        assert np.abs(f.grad(m, t) - [2.0, 3.0]).max() < 1e-12
    assert len(f.dump().strip().split("\n")) == m.num_vertices


def test_barycentric_partition_of_unity():
    pts = np.random.default_rng(1).random((20, 2)) * 0.5
    lam = barycentric(pts)
    assert np.abs(lam.sum(axis=1) - 1).max() < 1e-14
