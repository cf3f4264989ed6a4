import io

import numpy as np
import pytest

from obstacle_mfem.mesh import make_domain, refine_nvb, refine_uniform


@pytest.mark.parametrize("domain,nv,nt", [
    ("unit_square", 4, 2),
    ("square_m1_1", 4, 2),
    ("lshape_paper", 8, 6),
    ("lshape_small", 8, 6),
])
def test_initial_meshes(domain, nv, nt):
    m = make_domain(domain)
    assert m.num_vertices == nv
    assert m.num_triangles == nt
    assert (m.areas > 0).all()


def test_connectivity_invariants():
    m = make_domain("lshape_paper", 1)
    # edges sorted lexicographically, signs consistent with global normals
    assert (m.edges[:, 0] < m.edges[:, 1]).all()
    for t in range(m.num_triangles):
        tri = m.triangles[t]
        for i in range(3):
            e = m.tri_edges[t, i]
            pair = {m.edges[e, 0], m.edges[e, 1]}
            local = {tri[(i + 1) % 3], tri[(i + 2) % 3]}
            assert pair == local
    # every interior edge has two triangles, boundary edges one
    for e in range(m.num_edges):
        tl, tr = m.edge_tris[e]
        if m.boundary_edge_flags[e]:
            assert (tl >= 0) != (tr >= 0)
        else:
            assert tl >= 0 and tr >= 0


def test_uniform_refinement_counts_and_nesting():
    m = make_domain("unit_square")
    areas = m.areas.sum()
    for _ in range(3):
        m2 = refine_uniform(m)
        assert m2.num_triangles == 4 * m.num_triangles
        assert abs(m2.areas.sum() - areas) < 1e-14
        m = m2


def test_nvb_conformity_and_closure():
    rng = np.random.default_rng(3)
    m = make_domain("lshape_paper")
    for _ in range(6):
        marked = rng.choice(m.num_triangles,
                            size=max(1, m.num_triangles // 4), replace=False)
        m2 = refine_nvb(m, marked)
        assert m2.num_triangles > m.num_triangles
        assert abs(m2.areas.sum() - m.areas.sum()) < 1e-12
        m = m2
    # conformity is asserted inside the Mesh constructor


def test_shape_regularity_under_nvb():
    rng = np.random.default_rng(0)
    m = make_domain("unit_square")
    a0 = m.min_angle()
    for _ in range(8):
        marked = rng.choice(m.num_triangles,
                            size=max(1, m.num_triangles // 3), replace=False)
        m = refine_nvb(m, marked)
    # newest-vertex bisection produces finitely many similarity classes
    assert m.min_angle() >= a0 / 2.0 - 1e-12


def test_marking_all_equals_reasonable_growth():
    m = make_domain("unit_square")
    m2 = refine_nvb(m, np.arange(m.num_triangles))
    assert m2.num_triangles >= 2 * m.num_triangles


def test_dump_format():
    m = make_domain("unit_square")
    text = m.dump()
    lines = text.strip().split("\n")
    nv, ne, nt = map(int, lines[0].split())
    assert (nv, ne, nt) == (4, 5, 2)
    assert len(lines) == 1 + nv + nt
    for ln in lines[1:1 + nv]:
        assert len(ln.split()) == 2
    for ln in lines[1 + nv:]:
        assert len(ln.split()) == 3


def test_vertex_patches_partition():
    m = make_domain("unit_square", 1)
    patches = m.vertex_patches()
    cnt = np.zeros(m.num_triangles)
    for tris in patches:
        cnt[list(tris)] += 1
    assert (cnt == 3).all()  # each triangle appears in its 3 vertex patches
