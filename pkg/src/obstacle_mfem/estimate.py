"""A posteriori error indicators for both problems.

Membrane (per element T, with J the weighted averaging of u_h):
    rho_r^2 = ||sigma_h - grad J u_h||_T^2
    rho_p^2 = ||grad (g - J u_h)_+||_T^2
    rho_c^2 = <lambda_h, (g - J u_h)_+>_T
    osc^2   = h_T^2 ||f - P0 f||_T^2

Plate (with u* the elementwise cubic recovery and J the H2_0 smoothing):
    xi_r^2  = ||M_h - hess u*||_T^2 + h_T^-3 ||[u*]||_dT^2
              + h_T^-1 ||[d_n u*]||_dT^2
    osc^2   = h_T^4 ||f - P1 f||_T^2
    xi_p^2  = ||hess M_eps{g - J u*, 0}||_T^2
    xi_c^2  = <lambda_h, M_eps{g - J u*, 0}>_T
plus the sup-norm functional xi_inf and the total multiplier mass.
Jump terms on boundary edges use the trace itself (clamped conditions).
"""

import numpy as np

from . import quadrature
from .fields import barycentric, to_reference
from .postproc import (clement_apply, clement_weights, j_h_hct,
                       local_p3_recover, m_eps)


class EstimatorReport:
    """Per-element squared indicators by kind, their totals, and global
    scalars."""

    def __init__(self, parts, extras=None):
        self.parts = parts          # dict name -> (nt,) squared indicators
        self.extras = extras or {}  # global scalars (xi_inf, lambda mass)
        self.totals = {k: float(np.sqrt(v.sum())) for k, v in parts.items()}

    @property
    def element_squares(self):
        """Sum of all squared indicator families per element."""
        return sum(self.parts.values())

    @property
    def total(self):
        return float(np.sqrt(self.element_squares.sum()))


def estimate_membrane(s, p, weights=None, return_clement=False):
    m = p.mesh
    nt = m.num_triangles
    if weights is None:
        weights = clement_weights(m)
    J = clement_apply(m, weights, m.areas * s.u.values)
    from .fields import project_p0
    pf = project_p0(p.f, m)

    rho_r = np.empty(nt)
    rho_p = np.empty(nt)
    rho_c = np.empty(nt)
    osc = np.empty(nt)
    for t in range(nt):
        verts = m.triangle_coords(t)
        # residual part: sigma_h linear, grad J constant
        pts, w = quadrature.triangle_rule(2)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        d = s.sigma.eval(m, t, phys) - J.grad(m, t)[None, :]
        rho_r[t] = float((pw * (d ** 2).sum(axis=1)).sum())
        # obstacle parts, interface-aware high order rule
        deg = p.g.quad_degree(verts, base=8, flagged=8)
        pts, w = quadrature.triangle_rule(deg)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        gap = p.g.value(phys) - J.eval(m, t, phys)
        pos = gap > 0.0
        dg = p.g.gradient(phys) - J.grad(m, t)[None, :]
        rho_p[t] = float((pw * pos * (dg ** 2).sum(axis=1)).sum())
        rho_c[t] = float(s.lam.values[t] * (pw * np.where(pos, gap, 0.0)).sum())
        degf = p.f.quad_degree(verts, base=8, flagged=8)
        ptsf, wf = quadrature.triangle_rule(degf)
        physf, pwf = quadrature.map_to_triangle(verts, ptsf, wf)
        df = p.f.value(physf) - pf.values[t]
        osc[t] = float(m.diameters[t] ** 2 * (pwf * df ** 2).sum())
    rho_c = np.clip(rho_c, 0.0, None)
    report = EstimatorReport(
        {"est_r": rho_r, "est_p": rho_p, "est_c": rho_c, "osc": osc})
    if return_clement:
        return report, J
    return report


def _edge_jump_norms(mesh, ustar):
    """Squared L2 edge norms of the value jump and normal-derivative jump
    of the broken cubic; boundary edges use the one-sided trace."""
    ne = mesh.num_edges
    jump_v = np.zeros(ne)
    jump_dn = np.zeros(ne)
    sq, wq = quadrature.edge_rule(8)
    for e in range(ne):
        a = mesh.vertices[mesh.edges[e, 0]]
        b = mesh.vertices[mesh.edges[e, 1]]
        d = b - a
        elen = np.linalg.norm(d)
        tv = d / elen
        nv = np.array([tv[1], -tv[0]])
        phys = a[None, :] + sq[:, None] * d[None, :]
        tl, tr = mesh.edge_tris[e]
        def trace(t):
            ref = to_reference(mesh.triangle_coords(t), phys)
            val = ustar.eval_ref(mesh, t, ref)
            gr = ustar.grad_ref(mesh, t, ref)
            return val, gr @ nv
        if tl >= 0 and tr >= 0:
            v1, dn1 = trace(tl)
            v2, dn2 = trace(tr)
            dv, dn = v1 - v2, dn1 - dn2
        else:
            t = tl if tl >= 0 else tr
            dv, dn = trace(t)
        jump_v[e] = float((wq * dv ** 2).sum() * elen)
        jump_dn[e] = float((wq * dn ** 2).sum() * elen)
    return jump_v, jump_dn


def estimate_plate(s, p, ustar=None, smoothed=None, hct_space=None,
                   eps=1e-10):
    m = p.mesh
    nt = m.num_triangles
    if ustar is None:
        ustar = local_p3_recover(s.M, s.u)
    if smoothed is None:
        if hct_space is None:
            from .hct import HCTSpace
            hct_space = HCTSpace(m)
        smoothed = j_h_hct(hct_space, ustar)
    from .fields import project_p1d
    pf = project_p1d(p.f, m)

    jump_v, jump_dn = _edge_jump_norms(m, ustar)

    xi_r = np.empty(nt)
    osc = np.empty(nt)
    xi_p = np.empty(nt)
    xi_c = np.empty(nt)
    sup_gap = 0.0
    # sampling lattice of order 6 for the sup-norm part
    lat = []
    for i in range(7):
        for j in range(7 - i):
            lat.append((i / 6.0, j / 6.0))
    lat = np.array(lat)

    for t in range(nt):
        verts = m.triangle_coords(t)
        h = m.diameters[t]
        pts, w = quadrature.triangle_rule(6)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        dM = s.M.eval(t, phys) - ustar.hess_ref(m, t, pts)
        vol = float((pw * np.einsum("nij,nij->n", dM, dM)).sum())
        ed = m.tri_edges[t]
        xi_r[t] = (vol + jump_v[ed].sum() / h ** 3 + jump_dn[ed].sum() / h)

        degf = p.f.quad_degree(verts, base=8, flagged=8)
        ptsf, wf = quadrature.triangle_rule(degf)
        physf, pwf = quadrature.map_to_triangle(verts, ptsf, wf)
        lamf = barycentric(ptsf)
        df = p.f.value(physf) - lamf @ pf.values[t]
        osc[t] = float(h ** 4 * (pwf * df ** 2).sum())

        # contact terms with the regularized maximum, degree-18 rule
        # (the smoothing contains degree-9 bubbles)
        pts18, w18 = quadrature.triangle_rule(18)
        phys18, pw18 = quadrature.map_to_triangle(verts, pts18, w18)
        wv = p.g.value(phys18) - smoothed.eval(t, phys18)
        wg = p.g.gradient(phys18) - smoothed.grad(t, phys18)
        wh = p.g.hessian(phys18) - smoothed.hess(t, phys18)
        mv, mg, mh = m_eps(wv, wg, wh, eps)
        xi_p[t] = float((pw18 * np.einsum("nij,nij->n", mh, mh)).sum())
        lam18 = barycentric(pts18)
        lamvals = lam18 @ s.lam.values[t]
        xi_c[t] = float((pw18 * lamvals * mv).sum())

        # sup-norm sample of (g - u*)_+
        physl = verts[0] + lat @ (verts[1:] - verts[0])
        gap = p.g.value(physl) - ustar.eval_ref(m, t, lat)
        sup_gap = max(sup_gap, float(gap.max(initial=0.0)))

    xi_c = np.clip(xi_c, 0.0, None)
    # sup-norm jump part: max over T of scaled edge-norm sums, taken over
    # all edges that share at least one vertex with T
    vert_edges = [[] for _ in range(m.num_vertices)]
    for e in range(m.num_edges):
        vert_edges[m.edges[e, 0]].append(e)
        vert_edges[m.edges[e, 1]].append(e)
    jump_part = 0.0
    for t in range(nt):
        h = m.diameters[t]
        ed = sorted({e for v in m.triangles[t] for e in vert_edges[v]})
        jump_part = max(jump_part,
                        float(np.sqrt(jump_v[ed]).sum() / h ** 1.5
                              + np.sqrt(jump_dn[ed]).sum() / h ** 0.5))
    xi_inf = sup_gap + jump_part
    lam_mass = float((m.areas / 3.0 * s.lam.values.sum(axis=1)).sum())
    return EstimatorReport(
        {"est_r": xi_r, "osc": osc, "est_p": xi_p, "est_c": xi_c},
        extras={"xi_inf": xi_inf, "lambda_h_omega": lam_mass})
