"""Mixed membrane obstacle problem: RT0 flux, P0 multiplier, P0
displacement.

Discrete system: find (sigma_h, lambda_h, u_h) with lambda_h >= 0
elementwise such that

    <sigma_h, tau> + <div tau, u_h> = 0          for all tau in RT0,
    div sigma_h + lambda_h = -P0-projection of f   elementwise,
    lambda_T * (|T| u_T - int_T g) = 0,  u_T >= mean_T g.

The complementarity pairs are one per triangle with residual
r_T = |T| u_T - int_T g.
"""

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .fields import P0Field, RT0Field
from .pdas import ComplementaritySystem, PdasConfig, solve_pdas


class BoundaryCompatibilityError(Exception):
    pass


class MembraneProblem:
    """Load f and obstacle g (ScalarData); g must be <= 0 on the boundary."""

    def __init__(self, mesh, f, g, check_boundary=True):
        self.mesh = mesh
        self.f = f
        self.g = g
        if check_boundary:
            self._check_boundary()

    def _check_boundary(self):
        m = self.mesh
        s = np.linspace(0.0, 1.0, 9)
        worst = -np.inf
        for e in np.nonzero(m.boundary_edge_flags)[0]:
            a = m.vertices[m.edges[e, 0]]
            b = m.vertices[m.edges[e, 1]]
            pts = a[None, :] + s[:, None] * (b - a)[None, :]
            worst = max(worst, float(self.g.value(pts).max()))
        if worst > 1e-12:
            raise BoundaryCompatibilityError(
                "obstacle exceeds 0 on the boundary by %.3e" % worst)


class MembraneSolution:
    def __init__(self, sigma, lam, u, iterations, active):
        self.sigma = sigma    # RT0Field
        self.lam = lam        # P0Field
        self.u = u            # P0Field
        self.iterations = iterations
        self.active = active


def _element_integral(data, mesh, t, base=6):
    verts = mesh.triangle_coords(t)
    deg = data.quad_degree(verts, base=base, flagged=8)
    pts, w = quadrature.triangle_rule(deg)
    phys, pw = quadrature.map_to_triangle(verts, pts, w)
    return float((pw * data.value(phys)).sum())


def rt0_mass_matrix(mesh):
    """Global RT0 mass matrix (num_edges x num_edges)."""
    ne = mesh.num_edges
    pts, w = quadrature.triangle_rule(2)
    rows, cols, vals = [], [], []
    probe = RT0Field(np.zeros(ne))
    for t in range(mesh.num_triangles):
        phys, pw = quadrature.map_to_triangle(mesh.triangle_coords(t), pts, w)
        basis = probe.local_basis(mesh, t, phys)  # (3, n, 2)
        loc = np.einsum("inj,knj,n->ik", basis, basis, pw)
        ed = mesh.tri_edges[t]
        for i in range(3):
            for k in range(3):
                rows.append(ed[i])
                cols.append(ed[k])
                vals.append(loc[i, k])
    return sp.coo_matrix((vals, (rows, cols)), shape=(ne, ne)).tocsr()


def rt0_div_matrix(mesh):
    """B with B[e, t] = int_T div(basis_e) = +-1 for incident edges."""
    ne = mesh.num_edges
    nt = mesh.num_triangles
    rows, cols, vals = [], [], []
    for t in range(nt):
        for i in range(3):
            rows.append(mesh.tri_edges[t, i])
            cols.append(t)
            vals.append(float(mesh.tri_edge_signs[t, i]))
    return sp.coo_matrix((vals, (rows, cols)), shape=(ne, nt)).tocsr()


def assemble_membrane(p):
    """Build the complementarity system; unknowns x = [sigma, u, lambda]."""
    m = p.mesh
    ne, nt = m.num_edges, m.num_triangles
    n = ne + 2 * nt
    A = rt0_mass_matrix(m)
    B = rt0_div_matrix(m)

    f_int = np.array([_element_integral(p.f, m, t) for t in range(nt)])
    g_int = np.array([_element_integral(p.g, m, t) for t in range(nt)])

    # constitutive rows: A sigma + B u = 0
    top = sp.hstack([A, B, sp.csr_matrix((ne, nt))])
    # balance rows (elementwise): div sigma + lambda = -(1/|T|) int_T f
    Dt = B.T.multiply(1.0 / m.areas[:, None]).tocsr()  # div coefficients
    bal = sp.hstack([Dt, sp.csr_matrix((nt, nt)), sp.identity(nt)])
    eq = sp.vstack([top, bal]).tocsr()
    rhs = np.concatenate([np.zeros(ne), -f_int / m.areas])

    # pairs: lambda_T vs r_T = |T| u_T - int_T g
    lambda_idx = ne + nt + np.arange(nt)
    R = sp.coo_matrix((m.areas, (np.arange(nt), ne + np.arange(nt))),
                      shape=(nt, n)).tocsr()
    scale = max(np.abs(f_int).max(initial=0.0), np.abs(g_int).max(initial=0.0), 1e-300)
    return ComplementaritySystem(
        eq_matrix=eq, eq_rhs=rhs, lambda_idx=lambda_idx,
        r_matrix=R, r_shift=g_int,
        pair_elements=np.arange(nt), scale=scale)


def solve_membrane(p, cfg=None):
    sys = assemble_membrane(p)
    res = solve_pdas(sys, cfg or PdasConfig())
    m = p.mesh
    ne, nt = m.num_edges, m.num_triangles
    sigma = RT0Field(res.x[:ne])
    u = P0Field(res.x[ne:ne + nt])
    lam = P0Field(res.x[ne + nt:])
    return MembraneSolution(sigma, lam, u, res.iterations, res.active)


def check_membrane_properties(s, p):
    """Residuals of the four structural identities of the discrete
    solution: elementwise balance, RT0 orthogonality, complementarity and
    obstacle feasibility (in P0-projected form)."""
    m = p.mesh
    nt = m.num_triangles
    from .fields import project_p0
    pf = project_p0(p.f, m)
    pg = project_p0(p.g, m)
    divs = np.array([s.sigma.div(m, t) for t in range(nt)])
    res_balance = float(np.abs(divs + s.lam.values + pf.values).max())
    A = rt0_mass_matrix(m)
    B = rt0_div_matrix(m)
    res_ortho = float(np.abs(A @ s.sigma.coeffs + B @ s.u.values).max())
    g_int = np.array([_element_integral(p.g, m, t) for t in range(nt)])
    r = m.areas * s.u.values - g_int
    res_comp = float(abs(np.dot(s.lam.values, r)))
    feas = float((s.u.values - pg.values).min())
    return {
        "balance": res_balance,
        "rt0_orthogonality": res_ortho,
        "complementarity": res_comp,
        "feasibility_min": feas,
    }


def membrane_errors(s, p, u_exact, grad_u_exact, lam_exact=None):
    """L2 errors against a known exact solution.

    u_exact, lam_exact: ScalarData; grad_u_exact(points) -> (n, 2) is the
    exact flux sigma = grad u.
    """
    m = p.mesh
    err_u2 = 0.0
    err_s2 = 0.0
    err_dl2 = 0.0
    for t in range(m.num_triangles):
        verts = m.triangle_coords(t)
        deg = max(u_exact.quad_degree(verts),
                  p.f.quad_degree(verts) if lam_exact is not None else 6)
        pts, w = quadrature.triangle_rule(deg)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        du = u_exact.value(phys) - s.u.values[t]
        err_u2 += float((pw * du ** 2).sum())
        ds = grad_u_exact(phys) - s.sigma.eval(m, t, phys)
        err_s2 += float((pw * (ds ** 2).sum(axis=1)).sum())
        if lam_exact is not None:
            # div(sigma - sigma_h) + lambda - lambda_h, with
            # div sigma = -f - lambda pointwise
            dv = (-p.f.value(phys) - lam_exact.value(phys)
                  - s.sigma.div(m, t)
                  + lam_exact.value(phys) - s.lam.values[t])
            err_dl2 += float((pw * dv ** 2).sum())
    out = {"err_u": np.sqrt(err_u2), "err_sigma": np.sqrt(err_s2)}
    if lam_exact is not None:
        out["err_div_lam"] = np.sqrt(err_dl2)
    return out
