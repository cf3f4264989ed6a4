"""Conforming postprocessing operators.

Membrane side: a weighted Clement-type averaging operator into continuous
P1 with vanishing boundary values, whose patch weights are nonnegative and
reproduce constants and centroid first moments.

Plate side: elementwise cubic recovery of the displacement from the
moment tensor, a first-order-moment preserving interior bubble lift, DOF
averaging into the C1 macro-element space, and their composition, which
maps broken cubics into H2_0 while preserving elementwise P1 moments.
Also the C^{1,1} regularized maximum used by the contact estimators.
"""

import numpy as np
from scipy.optimize import nnls

from . import quadrature
from .fields import (P1cField, P1dField, P3bField, affine_map, barycentric,
                     p1_mass, p3_basis, p3_ref_nodes, to_reference)
from .hct import HCTField


class InfeasiblePatch(Exception):
    pass


# -- weighted Clement averaging (membrane) --------------------------------

def clement_weights(mesh):
    """Per interior vertex z: nonnegative patch weights with sum 1 whose
    centroid average reproduces z; canonical minimum-Euclidean-norm
    choice.  Returns {vertex: (triangle index array, weight array)}."""
    patches = mesh.vertex_patches()
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    out = {}
    for z in range(mesh.num_vertices):
        if mesh.boundary_vertex_flags[z]:
            continue
        tris = np.array(patches[z], dtype=np.int64)
        k = len(tris)
        E = np.vstack([np.ones(k), centroids[tris].T])  # (3, k)
        d = np.array([1.0, mesh.vertices[z, 0], mesh.vertices[z, 1]])
        rho = 1e8
        stacked = np.vstack([rho * E, np.eye(k)])
        rhs = np.concatenate([rho * d, np.zeros(k)])
        alpha, _ = nnls(stacked, rhs)
        # polish: exact min-norm on the detected support
        support = alpha > 1e-12 * max(alpha.max(), 1e-300)
        Es = E[:, support]
        # min ||a||^2 s.t. Es a = d  ->  a = Es^T (Es Es^T)^-1 d
        try:
            a = Es.T @ np.linalg.solve(Es @ Es.T, d)
        except np.linalg.LinAlgError:
            a = None
        if a is not None and a.min() >= -1e-13:
            alpha = np.zeros(k)
            alpha[support] = np.clip(a, 0.0, None)
        res = np.abs(E @ alpha - d).max()
        if res > 1e-12 * max(1.0, np.abs(d).max()) or alpha.min() < -1e-13:
            raise InfeasiblePatch(
                "no nonnegative weights at vertex %d (residual %.3e)"
                % (z, res))
        out[z] = (tris, alpha)
    return out


def clement_apply(mesh, weights, elem_integrals):
    """Averaging into continuous P1 vanishing at boundary vertices.

    elem_integrals[t] must be the integral of the input function over
    triangle t; the value at interior vertex z is the weighted patch mean
    sum_T alpha_{z,T} / |T| * int_T v.
    """
    elem_integrals = np.asarray(elem_integrals, dtype=float)
    vals = np.zeros(mesh.num_vertices)
    for z, (tris, alpha) in weights.items():
        vals[z] = float((alpha / mesh.areas[tris]) @ elem_integrals[tris])
    return P1cField(vals, h10=True)


# -- elementwise cubic recovery (plate) -----------------------------------

def _p3_basis_hess(verts, ref_pts):
    """(n, 10, 2, 2): physical Hessians of the P3 Lagrange basis."""
    _, _, Binv, _ = affine_map(verts)
    dxx = p3_basis(ref_pts, 2, 0)
    dxy = p3_basis(ref_pts, 1, 1)
    dyy = p3_basis(ref_pts, 0, 2)
    Href = np.empty((len(ref_pts), 10, 2, 2))
    Href[:, :, 0, 0] = dxx
    Href[:, :, 0, 1] = dxy
    Href[:, :, 1, 0] = dxy
    Href[:, :, 1, 1] = dyy
    return np.einsum("pi,nkpq,qj->nkij", Binv, Href, Binv)


def local_p3_recover(M_h, u_h):
    """Elementwise cubic whose Hessian best matches the moment tensor in
    L2(T), constrained to share the P1 moments of the displacement."""
    space = M_h.space
    mesh = space.mesh
    nt = mesh.num_triangles
    pts, w = quadrature.triangle_rule(4)
    lam = barycentric(pts)
    out = np.empty((nt, 10))
    for t in range(nt):
        verts = mesh.triangle_coords(t)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        BH = _p3_basis_hess(verts, pts)              # (n, 10, 2, 2)
        K = np.einsum("nkij,nlij,n->kl", BH, BH, pw)
        Mvals = M_h.eval(t, phys)                    # (n, 2, 2)
        rhs = np.einsum("nij,nkij,n->k", Mvals, BH, pw)
        # constraints <u*, eta_j> = <u_h, eta_j>
        B3 = p3_basis(pts)                           # (n, 10)
        Cc = np.einsum("nj,nk,n->jk", lam, B3, pw)   # (3, 10)
        uh_mom = p1_mass(mesh.areas[t]) @ u_h.values[t]
        # the Hessian Gram block scales like h^-2 and the moment block
        # like h^2; equilibrate the constraint rows so the local solve
        # stays well conditioned on very small elements
        alpha = max(np.linalg.norm(K), 1e-300) / max(np.linalg.norm(Cc),
                                                     1e-300)
        kkt = np.zeros((13, 13))
        kkt[:10, :10] = K
        kkt[:10, 10:] = alpha * Cc.T
        kkt[10:, :10] = alpha * Cc
        b = np.concatenate([rhs, alpha * uh_mom])
        try:
            sol = np.linalg.solve(kkt, b)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("cubic recovery singular on triangle %d" % t) from exc
        out[t] = sol[:10]
    return P3bField(out)


# -- interior bubble lift -------------------------------------------------

class BubbleField:
    """Elementwise span of (l1 l2 l3)^2 l_z: degree-9 interior bubbles
    vanishing on element boundaries together with their gradients."""

    def __init__(self, mesh, coeffs):
        self.mesh = mesh
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1, 3)

    def _bary_data(self, t, phys_pts):
        verts = self.mesh.triangle_coords(t)
        _, _, Binv, _ = affine_map(verts)
        gref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        G = gref @ Binv                     # (3, 2) barycentric gradients
        ref = to_reference(verts, phys_pts)
        lam = barycentric(ref)              # (n, 3)
        return lam, G

    def eval(self, t, phys_pts):
        lam, _ = self._bary_data(t, phys_pts)
        P = lam.prod(axis=1)
        return (P ** 2)[:, None] * lam @ self.coeffs[t]

    def grad(self, t, phys_pts):
        lam, G = self._bary_data(t, phys_pts)
        P = lam.prod(axis=1)
        gradP = np.einsum("ni,ij->nj",
                          np.stack([lam[:, 1] * lam[:, 2],
                                    lam[:, 0] * lam[:, 2],
                                    lam[:, 0] * lam[:, 1]], axis=1), G)
        out = np.zeros((len(lam), 2))
        for z in range(3):
            c = self.coeffs[t, z]
            if c == 0.0:
                continue
            out += c * (2 * (P * lam[:, z])[:, None] * gradP
                        + (P ** 2)[:, None] * G[z][None, :])
        return out

    def hess(self, t, phys_pts):
        lam, G = self._bary_data(t, phys_pts)
        P = lam.prod(axis=1)
        pairs = np.stack([lam[:, 1] * lam[:, 2],
                          lam[:, 0] * lam[:, 2],
                          lam[:, 0] * lam[:, 1]], axis=1)
        gradP = pairs @ G
        # Hessian of P: sum over i<j of lam_k (G_i G_j^T + G_j G_i^T)
        HP = np.zeros((len(lam), 2, 2))
        for (i, j, k) in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            sym = np.outer(G[i], G[j])
            sym = sym + sym.T
            HP += lam[:, k][:, None, None] * sym[None, :, :]
        out = np.zeros((len(lam), 2, 2))
        for z in range(3):
            c = self.coeffs[t, z]
            if c == 0.0:
                continue
            gPz = lam[:, z][:, None] * gradP + P[:, None] * G[z][None, :]
            # hess(P^2 lam_z) = 2 gradP (x) grad(P lam_z) sym + 2 P lam_z HP
            #                 + 2 P (gradP (x) G_z) sym ... assembled below
            term = (2 * np.einsum("ni,nj->nij", gradP, gPz)
                    + 2 * (P * lam[:, z])[:, None, None] * HP)
            term = 0.5 * (term + term.transpose(0, 2, 1))
            term2 = 2 * P[:, None, None] * 0.5 * (
                np.einsum("ni,j->nij", gradP, G[z])
                + np.einsum("i,nj->nij", G[z], gradP))
            out += c * (term + term2)
        return out


def b_h(mesh, elem_p1_moments):
    """Moment-preserving bubble lift.

    elem_p1_moments[t, j] = <input, eta_j>_T.  Output BubbleField has the
    same elementwise P1 moments.
    """
    pts, w = quadrature.triangle_rule(18)
    lam = barycentric(pts)
    P = lam.prod(axis=1)
    bub = (P ** 2)[:, None] * lam            # (n, 3)
    coeffs = np.empty((mesh.num_triangles, 3))
    for t in range(mesh.num_triangles):
        G = np.einsum("nj,nk,n->jk", lam, bub, w) * 2.0 * mesh.areas[t]
        coeffs[t] = np.linalg.solve(G, elem_p1_moments[t])
    return BubbleField(mesh, coeffs)


def p1_moments_of_p3b(mesh, v):
    """(nt, 3) moments <v, eta_j>_T of a broken cubic."""
    pts, w = quadrature.triangle_rule(4)
    lam = barycentric(pts)
    B3 = p3_basis(pts)
    out = np.empty((mesh.num_triangles, 3))
    for t in range(mesh.num_triangles):
        vals = B3 @ v.coeffs[t]
        out[t] = np.einsum("nj,n,n->j", lam, vals, w) * 2.0 * mesh.areas[t]
    return out


def p1_moments_of_hct(hct_space, x):
    """(nt, 3) moments of a macro-element field, integrated per
    subtriangle."""
    mesh = hct_space.mesh
    pts, w = quadrature.triangle_rule(4)
    out = np.zeros((mesh.num_triangles, 3))
    for t in range(mesh.num_triangles):
        dv = hct_space.local_dof_values(t, x)
        subs = hct_space.subtriangle_vertices(t)
        verts = mesh.triangle_coords(t)
        for s in range(3):
            phys, pw = quadrature.map_to_triangle(subs[s], pts, w)
            vals = hct_space.eval_local(t, dv, phys,
                                        sub=np.full(len(phys), s))
            ref = to_reference(verts, phys)
            lam = barycentric(ref)
            out[t] += np.einsum("nj,n,n->j", lam, vals, pw)
    return out


# -- DOF averaging into the macro-element space ---------------------------

def e_h(hct_space, v):
    """Average the broken cubic v into the C1 macro-element space:
    each free DOF is the arithmetic mean of the corresponding evaluations
    of v over the triangles sharing it; constrained (boundary) DOFs are 0."""
    mesh = hct_space.mesh
    x = np.zeros(hct_space.ndof)
    counts = np.zeros(hct_space.ndof)
    for t in range(mesh.num_triangles):
        verts = mesh.triangle_coords(t)
        tri = mesh.triangles[t]
        idx = hct_space.dof_map[t]
        ref = to_reference(verts, verts)
        vals = v.eval_ref(mesh, t, ref)
        gr = v.grad_ref(mesh, t, ref)
        for i in range(3):
            if idx[3 * i] >= 0:
                x[idx[3 * i]] += vals[i]
                counts[idx[3 * i]] += 1
                x[idx[3 * i + 1]] += gr[i, 0]
                counts[idx[3 * i + 1]] += 1
                x[idx[3 * i + 2]] += gr[i, 1]
                counts[idx[3 * i + 2]] += 1
        for i in range(3):
            d = idx[9 + i]
            if d < 0:
                continue
            e = mesh.tri_edges[t, (i + 2) % 3]
            a, b = mesh.vertices[mesh.edges[e]]
            tv = (b - a) / np.linalg.norm(b - a)
            nv = np.array([tv[1], -tv[0]])
            mid = to_reference(verts, (0.5 * (a + b))[None, :])
            gm = v.grad_ref(mesh, t, mid)[0]
            x[d] += gm @ nv
            counts[d] += 1
    nonzero = counts > 0
    x[nonzero] /= counts[nonzero]
    return HCTField(hct_space, x)


class SmoothedField:
    """Sum of a macro-element part and an interior bubble part: the
    composed smoothing of a broken cubic into H2_0."""

    def __init__(self, hct_field, bubble_field):
        self.hct = hct_field
        self.bubble = bubble_field

    def eval(self, t, phys_pts):
        return self.hct.eval(t, phys_pts) + self.bubble.eval(t, phys_pts)

    def grad(self, t, phys_pts):
        return self.hct.grad(t, phys_pts) + self.bubble.grad(t, phys_pts)

    def hess(self, t, phys_pts):
        return self.hct.hess(t, phys_pts) + self.bubble.hess(t, phys_pts)


def j_h_hct(hct_space, v):
    """Moment-preserving H2_0 smoothing: averaging plus bubble correction
    of the elementwise P1 moment defect."""
    mesh = hct_space.mesh
    eh = e_h(hct_space, v)
    mom_v = p1_moments_of_p3b(mesh, v)
    mom_eh = p1_moments_of_hct(hct_space, eh.coeffs)
    bub = b_h(mesh, mom_v - mom_eh)
    return SmoothedField(eh, bub)


# -- regularized maximum --------------------------------------------------

def f_eps(t, eps):
    """C^{1,1} regularization of max(t, 0): value, first and (weak)
    second derivative."""
    t = np.asarray(t, dtype=float)
    mid = np.abs(t) <= eps
    hi = t > eps
    val = np.where(hi, t, 0.0)
    dv = np.where(hi, 1.0, 0.0)
    val = np.where(mid, t ** 2 / (4 * eps) + 0.5 * t + 0.25 * eps, val)
    dv = np.where(mid, t / (2 * eps) + 0.5, dv)
    d2 = np.where(mid, 1.0 / (2 * eps), 0.0)
    return val, dv, d2


def m_eps(w_value, w_grad, w_hess, eps):
    """Value, gradient and (weak) Hessian of the regularized maximum of w
    and 0."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    val, dv, d2 = f_eps(w_value, eps)
    grad = dv[:, None] * w_grad
    hess = (d2[:, None, None] * np.einsum("ni,nj->nij", w_grad, w_grad)
            + dv[:, None, None] * w_hess)
    return val, grad, hess
