"""Independent reference computations used by the test suite.

Everything here is deliberately written without reusing the assembly
routines of the main modules: quadrature tables are built directly from
Gauss-Legendre nodes, and element matrices are hand-coded.  The only
shared ingredients are the mesh data structure and (for the second-order
dual norm) the C1 macro-element basis evaluation.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve


class NoFeasibleSet(Exception):
    pass


class MultipleFeasibleSets(Exception):
    pass


class NoConvergence(Exception):
    pass


# -- independent quadrature -------------------------------------------------

def _tri_rule(degree):
    """Product Gauss rule on the reference triangle x,y >= 0, x+y <= 1,
    via the map (s, t) -> (s (1 - t), t) with Jacobian (1 - t)."""
    n = degree // 2 + 2
    a, wa = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (a + 1.0)
    ws = 0.5 * wa
    S, T = np.meshgrid(s, s, indexing="ij")
    WS, WT = np.meshgrid(ws, ws, indexing="ij")
    x = (S * (1.0 - T)).ravel()
    y = T.ravel()
    w = (WS * WT * (1.0 - T)).ravel()
    return np.column_stack([x, y]), w


def _map_rule(verts, pts, w):
    v0, v1, v2 = np.asarray(verts, dtype=float)
    B = np.column_stack([v1 - v0, v2 - v0])
    phys = v0 + pts @ B.T
    return phys, w * abs(np.linalg.det(B))


# -- primal P1 obstacle solve ----------------------------------------------

def _p1_stiffness(mesh):
    nv = mesh.num_vertices
    rows, cols, vals = [], [], []
    for t in range(mesh.num_triangles):
        tri = mesh.triangles[t]
        v = mesh.vertices[tri]
        area = mesh.areas[t]
        # gradients of the barycentric coordinates
        b = np.empty((3, 2))
        for i in range(3):
            p1, p2 = v[(i + 1) % 3], v[(i + 2) % 3]
            b[i] = [p1[1] - p2[1], p2[0] - p1[0]]
        K = (b @ b.T) / (4.0 * area)
        for i in range(3):
            for j in range(3):
                rows.append(tri[i])
                cols.append(tri[j])
                vals.append(K[i, j])
    return sp.coo_matrix((vals, (rows, cols)), shape=(nv, nv)).tocsr()


def _p1_load(mesh, f, degree=8):
    nv = mesh.num_vertices
    pts, w = _tri_rule(degree)
    lam = np.column_stack([1.0 - pts.sum(axis=1), pts[:, 0], pts[:, 1]])
    b = np.zeros(nv)
    for t in range(mesh.num_triangles):
        phys, pw = _map_rule(mesh.triangle_coords(t), pts, w)
        b[mesh.triangles[t]] += lam.T @ (pw * f.value(phys))
    return b


def primal_p1_obstacle(mesh, f, g, tol=1e-10, max_sweeps=200000):
    """Conforming P1 solve of the displacement obstacle problem with
    nodal constraints u(z) >= g(z), by projected Gauss-Seidel over the
    interior vertices in ascending index order.  Returns vertex values."""
    A = _p1_stiffness(mesh).tolil().tocsr()
    b = _p1_load(mesh, f)
    glow = g.value(mesh.vertices)
    free = np.nonzero(~mesh.boundary_vertex_flags)[0]
    u = np.zeros(mesh.num_vertices)
    u[free] = np.maximum(0.0, glow[free])
    diag = A.diagonal()
    scale = max(float(np.abs(b).max(initial=0.0)),
                float(np.abs(glow).max(initial=0.0)), 1.0)
    indptr, indices, data = A.indptr, A.indices, A.data
    for sweep in range(max_sweeps):
        for i in free:
            row = slice(indptr[i], indptr[i + 1])
            s = b[i] - data[row] @ u[indices[row]] + diag[i] * u[i]
            u[i] = max(glow[i], s / diag[i])
        if sweep % 10 == 0 or sweep == max_sweeps - 1:
            res = A @ u - b
            mu = res[free]
            gap = u[free] - glow[free]
            kkt = max(float(np.abs(np.minimum(mu, 0.0)).max(initial=0.0)),
                      float(np.abs(np.minimum(gap, 0.0)).max(initial=0.0)),
                      float(np.abs(mu * gap).max(initial=0.0)))
            if kkt <= tol * scale:
                return u
    raise NoConvergence("projected Gauss-Seidel did not reach tolerance")


# -- brute-force complementarity solve --------------------------------------

class BruteForceResult:
    def __init__(self, x, lam, r, active):
        self.x = x
        self.lam = lam
        self.r = r
        self.active = active


def brute_force_active_set(sys, tol=1e-12):
    """Enumerate all active sets of a complementarity system (<= 16
    pairs) and return the unique sign-feasible solution."""
    m = len(sys.lambda_idx)
    if m > 16:
        raise ValueError("brute force limited to 16 pairs")
    eq = np.asarray(sys.eq_matrix.todense())
    n = eq.shape[1]
    neq = eq.shape[0]
    if neq + m != n:
        raise ValueError("system is not square with the pair rows added")
    R = np.asarray(sys.r_matrix.todense())
    A = np.zeros((n, n))
    A[:neq] = eq
    rhs = np.zeros(n)
    rhs[:neq] = sys.eq_rhs
    scale = max(sys.scale, 1e-300)
    found = []
    for mask in range(1 << m):
        for i in range(m):
            if mask >> i & 1:
                A[neq + i] = R[i]
                rhs[neq + i] = sys.r_shift[i]
            else:
                A[neq + i] = 0.0
                A[neq + i, sys.lambda_idx[i]] = 1.0
                rhs[neq + i] = 0.0
        try:
            x = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.abs(A @ x - rhs).max() > 1e-8 * max(np.abs(rhs).max(), 1.0):
            continue
        lam = x[sys.lambda_idx]
        r = R @ x - sys.r_shift
        if lam.min(initial=0.0) >= -tol * scale and \
                r.min(initial=0.0) >= -tol * scale:
            active = np.sort(np.nonzero(
                [(mask >> i) & 1 for i in range(m)])[0])
            found.append(BruteForceResult(x, lam, r, active))
    if not found:
        raise NoFeasibleSet("no active set is sign-feasible")
    if len(found) > 1:
        x0 = found[0].x
        if all(np.abs(f.x - x0).max() <= 1e-10 * max(np.abs(x0).max(), 1.0)
               for f in found[1:]):
            return found[0]
        raise MultipleFeasibleSets(
            "%d distinct feasible active sets" % len(found))
    return found[0]


# -- discrete dual norms ----------------------------------------------------

def discrete_dual_norm(density, order, ref_mesh, degree=8):
    """Dual-norm surrogate of the functional v -> int density*v.

    order 1: energy norm of the P1 (H1_0-conforming) Riesz representative;
    order 2: of the C1 macro-element (H2_0-conforming) representative.
    """
    if order == 1:
        A = _p1_stiffness(ref_mesh)
        b = _p1_load(ref_mesh, _AsData(density), degree)
        free = np.nonzero(~ref_mesh.boundary_vertex_flags)[0]
        Af = A[np.ix_(free, free)].tocsc()
        w = spsolve(Af, b[free])
        return float(np.sqrt(max(w @ b[free], 0.0)))
    if order == 2:
        from .hct import HCTSpace
        space = HCTSpace(ref_mesh, clamped=True)
        nd = space.ndof
        pts, w = _tri_rule(max(degree, 4))
        A = np.zeros((nd, nd))
        b = np.zeros(nd)
        eye = np.eye(12)
        for t in range(ref_mesh.num_triangles):
            idx = space.dof_map[t]
            keep = np.nonzero(idx >= 0)[0]
            if len(keep) == 0:
                continue
            subs = space.subtriangle_vertices(t)
            Hloc = np.zeros((len(keep), len(keep)))
            bloc = np.zeros(len(keep))
            for si in range(3):
                phys, pw = _map_rule(subs[si], pts, w)
                sub = np.full(len(phys), si)
                Hvals = np.array([
                    space.eval_hess_local(t, eye[d], phys, sub)
                    for d in keep])                      # (k, n, 2, 2)
                Vvals = np.array([
                    space.eval_local(t, eye[d], phys, sub)
                    for d in keep])                      # (k, n)
                Hloc += np.einsum("inab,jnab,n->ij", Hvals, Hvals, pw)
                bloc += Vvals @ (pw * density(phys))
            ii = idx[keep]
            A[np.ix_(ii, ii)] += Hloc
            b[ii] += bloc
        wsol = np.linalg.solve(A, b)
        return float(np.sqrt(max(wsol @ b, 0.0)))
    raise ValueError("order must be 1 or 2")


class _AsData:
    def __init__(self, fn):
        self.value = fn


# -- distributional divDiv pairing check ------------------------------------

def _radial_bump(center, radius):
    """C^11 bump (1 - |x-c|^2/R^2)^12 supported on the disk, with
    analytic gradient and Hessian."""
    c = np.asarray(center, dtype=float)
    R2 = radius * radius

    def value(p):
        t = ((p - c) ** 2).sum(axis=1) / R2
        return np.where(t < 1.0, (1.0 - np.minimum(t, 1.0)) ** 12, 0.0)

    def grad(p):
        d = p - c
        t = np.minimum((d ** 2).sum(axis=1) / R2, 1.0)
        fac = -24.0 / R2 * (1.0 - t) ** 11
        return fac[:, None] * d

    def hess(p):
        d = p - c
        t = np.minimum((d ** 2).sum(axis=1) / R2, 1.0)
        a = -24.0 / R2 * (1.0 - t) ** 11
        bb = 528.0 / R2 ** 2 * (1.0 - t) ** 10
        H = np.empty((len(p), 2, 2))
        H[:, 0, 0] = a + bb * d[:, 0] ** 2
        H[:, 0, 1] = H[:, 1, 0] = bb * d[:, 0] * d[:, 1]
        H[:, 1, 1] = a + bb * d[:, 1] ** 2
        return H

    return value, grad, hess


def _subdivide(verts, levels):
    tris = [np.asarray(verts, dtype=float)]
    for _ in range(levels):
        out = []
        for v0, v1, v2 in tris:
            m01, m12, m20 = (v0 + v1) / 2, (v1 + v2) / 2, (v2 + v0) / 2
            out += [np.array(x) for x in
                    ([v0, m01, m20], [m01, v1, m12],
                     [m20, m12, v2], [m01, m12, m20])]
        tris = out
    return tris


def _boundary_distance(mesh, point):
    d = np.inf
    for e in np.nonzero(mesh.boundary_edge_flags)[0]:
        a = mesh.vertices[mesh.edges[e, 0]]
        b = mesh.vertices[mesh.edges[e, 1]]
        ab = b - a
        s = np.clip(np.dot(point - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        d = min(d, float(np.linalg.norm(point - (a + s * ab))))
    return d


def divdiv_pairing_check(field, trials=10, seed=0, degree=28):
    """Max relative mismatch between the elementwise pairing
    sum_T int_T (divDiv N) phi and the distributional pairing
    <N, hess phi> over random compactly supported C^2 bumps.

    Vanishes (to quadrature accuracy) iff the broken field N is
    conforming for the distributional divDiv.
    """
    mesh = field.space.mesh
    rng = np.random.default_rng(seed)
    pts, w = _tri_rule(degree)
    worst = 0.0
    interior = np.nonzero(~mesh.boundary_edge_flags)[0]
    for _ in range(trials):
        # center the bump on a random interior edge so the check is
        # sensitive to the inter-element jump terms of the field
        if len(interior) > 0:
            lens = np.linalg.norm(
                mesh.vertices[mesh.edges[interior, 1]]
                - mesh.vertices[mesh.edges[interior, 0]], axis=1)
            e = rng.choice(interior, p=lens / lens.sum())
            a = mesh.vertices[mesh.edges[e, 0]]
            b = mesh.vertices[mesh.edges[e, 1]]
            center = a + rng.uniform(0.3, 0.7) * (b - a)
        else:
            t0 = rng.choice(mesh.num_triangles)
            center = mesh.triangle_coords(t0).mean(axis=0)
        radius = 0.9 * _boundary_distance(mesh, center)
        val, grd, hss = _radial_bump(center, radius)
        side1 = 0.0
        side2 = 0.0
        nrm_n2 = 0.0
        nrm_h2 = 0.0
        for t in range(mesh.num_triangles):
            verts = mesh.triangle_coords(t)
            diam = max(np.linalg.norm(verts[1] - verts[0]),
                       np.linalg.norm(verts[2] - verts[1]),
                       np.linalg.norm(verts[0] - verts[2]))
            levels = 0
            while diam / 2 ** levels > radius / 3.0 and levels < 5:
                levels += 1
            for sub in _subdivide(verts, levels):
                phys, pw = _map_rule(sub, pts, w)
                phi = val(phys)
                if phi.max(initial=0.0) == 0.0 and \
                        val(sub.mean(axis=0)[None, :])[0] == 0.0:
                    continue
                N = field.eval(t, phys)
                dd = field.divdiv(t, phys)
                H = hss(phys)
                side1 += float((pw * dd * phi).sum())
                side2 += float((pw * np.einsum(
                    "nij,nij->n", N, H)).sum())
                nrm_n2 += float((pw * np.einsum("nij,nij->n", N, N)).sum())
                nrm_h2 += float((pw * np.einsum("nij,nij->n", H, H)).sum())
        scale = np.sqrt(nrm_n2 * nrm_h2) + 1e-300
        worst = max(worst, abs(side1 - side2) / scale)
    return worst
