"""Mixed plate obstacle problem: broken sym(RT0 x RT1) moment tensor with
divDiv-conformity constraints, discontinuous P1 multiplier and
displacement.

Unknown layout: x = [M (15 per triangle), z (conformity multipliers),
u (3 per triangle), lambda (3 per triangle)].

Equality block:
    <M, N> + C^T z - <divDiv N, u> = 0   for every broken basis tensor N,
    C M = 0                              (conformity),
    <divDiv M - lambda, eta> = <f, eta>  for every P1 nodal function eta.

Complementarity pairs (3 per triangle): nodal multiplier lambda_i against
r_i = <eta_i, u_h - g>_T; nonnegativity of a P1 function on a triangle is
equivalent to nonnegativity of its nodal values.
"""

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .fields import P1dField, barycentric, p1_mass
from .membrane import BoundaryCompatibilityError
from .pdas import ComplementaritySystem, PdasConfig, solve_pdas
from .xspace import XSpace, XField, X_LOCAL_DIM, constraint_matrix


class PlateProblem:
    """Load f and obstacle g; g must be strictly negative on the boundary."""

    def __init__(self, mesh, f, g, check_boundary=True):
        self.mesh = mesh
        self.f = f
        self.g = g
        self.space = XSpace(mesh)
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
        if worst >= 0.0:
            raise BoundaryCompatibilityError(
                "plate obstacle must be < 0 on the boundary (max %.3e)" % worst)


class PlateSolution:
    def __init__(self, M, lam, u, iterations, active, space):
        self.M = M            # XField
        self.lam = lam        # P1dField
        self.u = u            # P1dField
        self.iterations = iterations
        self.active = active
        self.space = space


def moment_mass_matrix(space):
    """Gram matrix of the broken basis (identity up to round-off, since
    the per-element basis is L2-orthonormal; assembled explicitly)."""
    mesh = space.mesh
    nt = mesh.num_triangles
    pts, w = quadrature.triangle_rule(6)
    wt = np.array([1.0, 2.0, 1.0])
    blocks = []
    for t in range(nt):
        phys, pw = quadrature.map_to_triangle(mesh.triangle_coords(t), pts, w)
        vals = space.basis_values(t, phys)  # (15, n, 3)
        blocks.append(np.einsum("knc,c,lnc,n->kl", vals, wt, vals, pw))
    return sp.block_diag(blocks, format="csr")


def divdiv_coupling_matrix(space):
    """B with B[(t,j),(t,k)] = int_T divDiv(S_k) eta_j."""
    mesh = space.mesh
    nt = mesh.num_triangles
    pts, w = quadrature.triangle_rule(3)
    lam = barycentric(pts)
    blocks = []
    for t in range(nt):
        phys, pw = quadrature.map_to_triangle(mesh.triangle_coords(t), pts, w)
        dd = space.basis_divdiv(t, phys)  # (15, n)
        blocks.append(np.einsum("nj,kn,n->jk", lam, dd, pw))
    return sp.block_diag(blocks, format="csr")


def p1d_mass_matrix(mesh):
    return sp.block_diag([p1_mass(a) for a in mesh.areas], format="csr")


def _p1_moments(data, mesh, base=6):
    """(nt, 3) array of int_T eta_j * data."""
    out = np.empty((mesh.num_triangles, 3))
    for t in range(mesh.num_triangles):
        verts = mesh.triangle_coords(t)
        deg = data.quad_degree(verts, base=base, flagged=8)
        pts, w = quadrature.triangle_rule(deg)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        lam = barycentric(pts)
        out[t] = lam.T @ (pw * data.value(phys))
    return out


def assemble_plate(p):
    m = p.mesh
    space = p.space
    nt = m.num_triangles
    nM = X_LOCAL_DIM * nt
    C = constraint_matrix(space)
    nc = C.shape[0]
    nu = 3 * nt
    n = nM + nc + 2 * nu

    A = moment_mass_matrix(space)
    B = divdiv_coupling_matrix(space)
    Mass = p1d_mass_matrix(m)

    f_mom = _p1_moments(p.f, m).ravel()
    g_mom = _p1_moments(p.g, m).ravel()

    Z = sp.csr_matrix
    top = sp.hstack([A, C.T, -B.T, Z((nM, nu))])
    conf = sp.hstack([C, Z((nc, nc)), Z((nc, nu)), Z((nc, nu))])
    bal = sp.hstack([B, Z((nu, nc)), Z((nu, nu)), -Mass])
    eq = sp.vstack([top, conf, bal]).tocsr()
    rhs = np.concatenate([np.zeros(nM + nc), f_mom])

    lambda_idx = nM + nc + nu + np.arange(nu)
    R = sp.hstack([Z((nu, nM + nc)), Mass, Z((nu, nu))]).tocsr()
    scale = max(np.abs(f_mom).max(initial=0.0),
                np.abs(g_mom).max(initial=0.0), 1e-300)
    # the multiplier can concentrate (point-load-like contact forces on
    # strongly graded meshes), making its nodal densities ~1/|T|; scale
    # those unknowns so the solved vector stays balanced
    col_scale = np.ones(nM + nc + 2 * nu)
    col_scale[nM + nc + nu:] = np.repeat(1.0 / m.areas, 3)
    sysm = ComplementaritySystem(
        eq_matrix=eq, eq_rhs=rhs, lambda_idx=lambda_idx,
        r_matrix=R, r_shift=g_mom,
        pair_elements=np.repeat(np.arange(nt), 3), scale=scale,
        col_scale=col_scale)
    sysm.num_conformity = nc
    return sysm


def solve_plate(p, cfg=None):
    sysm = assemble_plate(p)
    res = solve_pdas(sysm, cfg or PdasConfig())
    m = p.mesh
    nt = m.num_triangles
    nM = X_LOCAL_DIM * nt
    nc = sysm.num_conformity
    nu = 3 * nt
    M = XField(p.space, res.x[:nM])
    u = P1dField(res.x[nM + nc:nM + nc + nu])
    lam = P1dField(res.x[nM + nc + nu:])
    return PlateSolution(M, lam, u, res.iterations, res.active, p.space)


def check_plate_properties(s, p):
    """Residuals of the three structural identities."""
    m = p.mesh
    nt = m.num_triangles
    from .fields import project_p1d
    pf = project_p1d(p.f, m)
    # (i) divDiv M_h - lambda_h = P1-projection of f, nodal max residual
    res_i = 0.0
    for t in range(nt):
        dd = s.M.divdiv(t, m.triangle_coords(t))
        res_i = max(res_i, float(np.abs(dd - s.lam.values[t] - pf.values[t]).max()))
    # (ii) orthogonality over the conforming subspace: project the broken
    # residual A M - B^T u onto the kernel of the constraint matrix
    space = p.space
    A = moment_mass_matrix(space)
    B = divdiv_coupling_matrix(space)
    C = constraint_matrix(space)
    resid = A @ s.M.coeffs.ravel() - B.T @ s.u.values.ravel()
    if C.shape[0] > 0:
        from .linsys import factor_solve
        CCt = (C @ C.T).tocsc()
        y = factor_solve(CCt, C @ resid, label="constraint projection")
        resid = resid - C.T @ y
    res_ii = float(np.linalg.norm(resid))
    # (iii) complementarity
    g_mom = _p1_moments(p.g, m)
    Mass = p1d_mass_matrix(m)
    r = Mass @ s.u.values.ravel() - g_mom.ravel()
    res_iii = float(abs(np.dot(s.lam.values.ravel(), r)))
    return {"balance": res_i, "x_orthogonality": res_ii,
            "complementarity": res_iii,
            "lambda_min": float(s.lam.values.min(initial=0.0)),
            "r_min": float(r.min(initial=0.0))}


def plate_errors(s, p, u_exact, hess_u_exact):
    """L2 errors: displacement against u_exact, moment tensor against the
    exact Hessian."""
    m = p.mesh
    err_u2 = 0.0
    err_M2 = 0.0
    for t in range(m.num_triangles):
        verts = m.triangle_coords(t)
        deg = u_exact.quad_degree(verts, base=8, flagged=10)
        pts, w = quadrature.triangle_rule(deg)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        du = u_exact.value(phys) - s.u.eval(m, t, phys)
        err_u2 += float((pw * du ** 2).sum())
        dM = hess_u_exact(phys) - s.M.eval(t, phys)
        err_M2 += float((pw * np.einsum("nij,nij->n", dM, dM)).sum())
    return {"err_u": np.sqrt(err_u2), "err_M": np.sqrt(err_M2)}
