import numpy as np
import pytest

from obstacle_mfem import quadrature
from obstacle_mfem.fields import P3bField, barycentric, p3_basis
from obstacle_mfem.hct import HCTSpace
from obstacle_mfem.mesh import make_domain, refine_nvb, refine_uniform
from obstacle_mfem.postproc import (BubbleField, b_h, clement_apply,
                                    clement_weights, e_h, f_eps, j_h_hct,
                                    m_eps, p1_moments_of_hct,
                                    p1_moments_of_p3b)


def test_clement_weights_invariants():
    m = refine_nvb(refine_uniform(make_domain("lshape_paper")), [1, 4])
    weights = clement_weights(m)
    centroids = m.vertices[m.triangles].mean(axis=1)
    for z, (tris, alpha) in weights.items():
        assert not m.boundary_vertex_flags[z]
        assert alpha.min() >= -1e-13
        assert abs(alpha.sum() - 1.0) < 1e-10
        rec = alpha @ centroids[tris]
        assert np.abs(rec - m.vertices[z]).max() < 1e-10


def test_clement_reproduces_constants_and_affine():
    m = refine_uniform(refine_uniform(make_domain("unit_square")))
    weights = clement_weights(m)
    # constants
    f = clement_apply(m, weights, m.areas * 1.0)
    interior = ~m.boundary_vertex_flags
    assert np.abs(f.values[interior] - 1.0).max() < 1e-12
    assert np.abs(f.values[~interior]).max() == 0.0
    # affine p -> 2x - y + 3: elementwise integral = area * value(centroid)
    centroids = m.vertices[m.triangles].mean(axis=1)
    vals = 2 * centroids[:, 0] - centroids[:, 1] + 3
    f = clement_apply(m, weights, m.areas * vals)
    exact = 2 * m.vertices[:, 0] - m.vertices[:, 1] + 3
    assert np.abs(f.values[interior] - exact[interior]).max() < 1e-10


def _p1_moments_of_bubble(bub):
    m = bub.mesh
    pts, w = quadrature.triangle_rule(12)
    lam = barycentric(pts)
    out = np.empty((m.num_triangles, 3))
    for t in range(m.num_triangles):
        phys, pw = quadrature.map_to_triangle(m.triangle_coords(t), pts, w)
        out[t] = np.einsum("nj,n,n->j", lam, bub.eval(t, phys), pw)
    return out


def test_bubble_lift_preserves_moments_and_vanishes_on_edges():
    m = make_domain("unit_square", 1)
    rng = np.random.default_rng(0)
    target = rng.standard_normal((m.num_triangles, 3)) * m.areas[:, None]
    bub = b_h(m, target)
    got = _p1_moments_of_bubble(bub)
    assert np.abs(got - target).max() < 1e-12 * max(1, np.abs(target).max())
    # zero value and gradient on element boundaries
    for t in range(m.num_triangles):
        verts = m.triangle_coords(t)
        for i in range(3):
            a, b = verts[i], verts[(i + 1) % 3]
            s = np.linspace(0, 1, 5)
            pts = a[None, :] + s[:, None] * (b - a)[None, :]
            assert np.abs(bub.eval(t, pts)).max() < 1e-13
            assert np.abs(bub.grad(t, pts)).max() < 1e-12


def test_bubble_derivatives_fd():
    m = make_domain("unit_square")
    bub = BubbleField(m, [[1.0, -2.0, 0.5], [0.3, 0.0, 1.0]])
    t = 0
    pts = np.array([[0.6, 0.3], [0.75, 0.45]])
    h = 1e-6
    for k, d in enumerate((np.array([h, 0.0]), np.array([0.0, h]))):
        fd = (bub.eval(t, pts + d) - bub.eval(t, pts - d)) / (2 * h)
        assert np.abs(fd - bub.grad(t, pts)[:, k]).max() < 1e-7
        fdg = (bub.grad(t, pts + d) - bub.grad(t, pts - d)) / (2 * h)
        assert np.abs(fdg - bub.hess(t, pts)[:, :, k]).max() < 1e-6


def test_smoothing_preserves_elementwise_p1_moments():
    m = refine_uniform(make_domain("unit_square"))
    space = HCTSpace(m, clamped=True)
    rng = np.random.default_rng(4)
    v = P3bField(rng.standard_normal((m.num_triangles, 10)))
    sm = j_h_hct(space, v)
    mom_v = p1_moments_of_p3b(m, v)
    mom_sm = (p1_moments_of_hct(space, sm.hct.coeffs)
              + _p1_moments_of_bubble(sm.bubble))
    assert np.abs(mom_sm - mom_v).max() < 1e-11 * max(1, np.abs(mom_v).max())


def test_smoothing_is_boundary_clamped():
    m = refine_uniform(make_domain("unit_square"))
    space = HCTSpace(m, clamped=True)
    rng = np.random.default_rng(5)
    v = P3bField(rng.standard_normal((m.num_triangles, 10)))
    sm = j_h_hct(space, v)
    for e in np.nonzero(m.boundary_edge_flags)[0]:
        a, b = m.vertices[m.edges[e]]
        s = np.linspace(0, 1, 6)
        pts = a[None, :] + s[:, None] * (b - a)[None, :]
        t = max(m.edge_tris[e])
        assert np.abs(sm.eval(t, pts)).max() < 1e-9
        assert np.abs(sm.grad(t, pts)).max() < 1e-8


def test_regularized_max_properties():
    eps = 0.1
    t = np.linspace(-1, 1, 2001)
    val, dv, d2 = f_eps(t, eps)
    assert np.abs(val[t < -eps]).max() == 0.0
    assert np.abs(val[t > eps] - t[t > eps]).max() < 1e-15
    assert (val >= np.maximum(t, 0.0) - 1e-15).all()
    # C1 at the seams
    for s in (-eps, eps):
        v1 = f_eps(np.array([s - 1e-9]), eps)
        v2 = f_eps(np.array([s + 1e-9]), eps)
        assert abs(v1[0][0] - v2[0][0]) < 1e-8
        assert abs(v1[1][0] - v2[1][0]) < 1e-7
    # chain rule of the composed maximum
    rng = np.random.default_rng(6)
    w = rng.standard_normal(5)
    gw = rng.standard_normal((5, 2))
    Hw = rng.standard_normal((5, 2, 2))
    Hw = 0.5 * (Hw + Hw.transpose(0, 2, 1))
    mv, mg, mh = m_eps(w, gw, Hw, eps)
    _, dv, d2 = f_eps(w, eps)
    assert np.abs(mg - dv[:, None] * gw).max() < 1e-14
    expect = (d2[:, None, None] * np.einsum("ni,nj->nij", gw, gw)
              + dv[:, None, None] * Hw)
    assert np.abs(mh - expect).max() < 1e-14
    with pytest.raises(ValueError):
        m_eps(w, gw, Hw, 0.0)
