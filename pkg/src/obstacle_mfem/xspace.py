"""Broken moment space of symmetric matrix polynomials spanned by
symmetrized products of lowest-order and first-order Raviart-Thomas
vector fields, with inter-element constraints characterizing
distributional divDiv regularity.

Per triangle the span of sym(a b^T) over a in RT0(T), b in RT1(T) has a
fixed dimension (15, established by rank computation and recorded as a
build constant).  The local basis is obtained by L2(T)-orthonormalizing
the 24 generator products via a Gram eigendecomposition, dropping
directions with eigenvalues below 1e-10 times the largest.  Generators
are written in centroid-centered coordinates scaled by the element
diameter, which keeps the Gram matrices uniformly conditioned.

A piecewise field N of this kind has divDiv N in L2 distributionally iff
across every interior edge the normal-normal trace n^T N n and the
effective transverse shear n . (div N) + d/dt (t^T N n) are continuous
(t the global edge tangent, n its -90 degree rotation), and at every
interior vertex the cyclic sum of corner jumps of t^T N n vanishes.
Both edge traces turn out to be polynomials of degree <= 1 in the arc
length for this space, so the declared higher moment rows vanish
identically and are pruned to keep the constraint matrix full-rank.
"""

import numpy as np

from . import quadrature

X_LOCAL_DIM = 15
EIG_CUTOFF = 1e-10

# monomial exponents for bivariate polynomials up to degree 3
MONO_EXP = [(a, d - a) for d in range(4) for a in range(d, -1, -1)]
_MONO_INDEX = {e: i for i, e in enumerate(MONO_EXP)}


def mono_eval(pts, dx=0, dy=0):
    """(n, 10) evaluation of the (dx, dy)-derivatives of the monomials."""
    x = pts[:, 0]
    y = pts[:, 1]
    out = np.zeros((len(pts), 10))
    for col, (a, b) in enumerate(MONO_EXP):
        if a < dx or b < dy:
            continue
        c = 1.0
        for k in range(dx):
            c *= a - k
        for k in range(dy):
            c *= b - k
        out[:, col] = c * x ** (a - dx) * y ** (b - dy)
    return out


def _mono_mul(coeffs, a, b):
    """Multiply a degree-<=3 coefficient vector by the monomial x^a y^b,
    assuming the result stays within degree 3."""
    out = np.zeros(10)
    for i, (p, q) in enumerate(MONO_EXP):
        if coeffs[i] == 0.0:
            continue
        out[_MONO_INDEX[(p + a, q + b)]] += coeffs[i]
    return out


def _generators():
    """Coefficient arrays (24, 3, 10) of the generator tensors in local
    coordinates; components ordered (S11, S12, S22)."""
    e = np.zeros(10)

    def mono(a, b):
        v = np.zeros(10)
        v[_MONO_INDEX[(a, b)]] = 1.0
        return v

    one = mono(0, 0)
    x1 = mono(1, 0)
    x2 = mono(0, 1)
    # RT0 vector generators: each a pair of coefficient vectors
    rt0 = [(one, e.copy()), (e.copy(), one), (x1, x2)]
    # RT1 vector generators: P1^2 (6) plus x * span{x1, x2} (2)
    p1 = [one, x1, x2]
    rt1 = [(p, e.copy()) for p in p1] + [(e.copy(), p) for p in p1]
    rt1 += [(_mono_mul(x1, 1, 0), _mono_mul(x2, 1, 0)),
            (_mono_mul(x1, 0, 1), _mono_mul(x2, 0, 1))]

    def polymul(u, v):
        out = np.zeros(10)
        for i, (p, q) in enumerate(MONO_EXP):
            if u[i] == 0.0:
                continue
            out += u[i] * _mono_mul(v, p, q)
        return out

    gens = []
    for a1, a2 in rt0:
        for b1, b2 in rt1:
            s11 = polymul(a1, b1)
            s22 = polymul(a2, b2)
            s12 = 0.5 * (polymul(a1, b2) + polymul(a2, b1))
            gens.append(np.stack([s11, s12, s22]))
    return np.array(gens)


_GENS = _generators()


class XSpace:
    """Per-triangle orthonormal basis of the local moment space.

    Attributes
    ----------
    coeffs : (nt, 15, 3, 10) array
        Monomial coefficients of each basis tensor's components
        (S11, S12, S22) in local coordinates (x - centroid) / diameter.
    centers, scales : per-triangle local coordinate data.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        nt = mesh.num_triangles
        self.centers = mesh.vertices[mesh.triangles].mean(axis=1)
        self.scales = mesh.diameters.copy()
        self.coeffs = np.empty((nt, X_LOCAL_DIM, 3, 10))
        pts, w = quadrature.triangle_rule(6)
        for t in range(nt):
            self.coeffs[t] = self._local_basis(mesh, t, pts, w)

    def _local_basis(self, mesh, t, pts, w):
        verts = mesh.triangle_coords(t)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        loc = (phys - self.centers[t]) / self.scales[t]
        V = mono_eval(loc)  # (n, 10)
        vals = np.einsum("gcm,nm->gcn", _GENS, V)  # (24, 3, n)
        # Frobenius weight: S11*S11 + 2 S12*S12 + S22*S22
        wt = np.array([1.0, 2.0, 1.0])
        G = np.einsum("gcn,c,hcn,n->gh", vals, wt, vals, pw)
        lam, vec = np.linalg.eigh(G)
        keep = lam > EIG_CUTOFF * lam[-1]
        if keep.sum() != X_LOCAL_DIM:
            raise RuntimeError(
                "local moment-space rank %d != %d on triangle %d"
                % (keep.sum(), X_LOCAL_DIM, t))
        lam = lam[keep]
        vec = vec[:, keep]
        # fix eigenvector signs for cross-platform determinism
        for k in range(vec.shape[1]):
            j = np.argmax(np.abs(vec[:, k]))
            if vec[j, k] < 0:
                vec[:, k] = -vec[:, k]
        basis = np.einsum("gk,gcm->kcm", vec / np.sqrt(lam), _GENS)
        return basis

    # -- evaluation --------------------------------------------------------

    def local_coords(self, t, phys_pts):
        return (np.asarray(phys_pts) - self.centers[t]) / self.scales[t]

    def basis_values(self, t, phys_pts):
        """(15, n, 3): components (S11, S12, S22) of each basis tensor."""
        loc = self.local_coords(t, phys_pts)
        V = mono_eval(loc)
        return np.einsum("kcm,nm->knc", self.coeffs[t], V)

    def basis_grad(self, t, phys_pts):
        """(15, n, 3, 2): physical gradient of each component."""
        loc = self.local_coords(t, phys_pts)
        h = self.scales[t]
        Dx = mono_eval(loc, 1, 0) / h
        Dy = mono_eval(loc, 0, 1) / h
        out = np.empty((X_LOCAL_DIM, len(loc), 3, 2))
        out[:, :, :, 0] = np.einsum("kcm,nm->knc", self.coeffs[t], Dx)
        out[:, :, :, 1] = np.einsum("kcm,nm->knc", self.coeffs[t], Dy)
        return out

    def basis_div(self, t, phys_pts):
        """(15, n, 2): row divergence (d1 S11 + d2 S12, d1 S12 + d2 S22)."""
        g = self.basis_grad(t, phys_pts)
        out = np.empty(g.shape[:2] + (2,))
        out[:, :, 0] = g[:, :, 0, 0] + g[:, :, 1, 1]
        out[:, :, 1] = g[:, :, 1, 0] + g[:, :, 2, 1]
        return out

    def basis_divdiv(self, t, phys_pts):
        """(15, n): double divergence (degree <= 1 polynomial)."""
        loc = self.local_coords(t, phys_pts)
        h = self.scales[t]
        Dxx = mono_eval(loc, 2, 0) / h ** 2
        Dxy = mono_eval(loc, 1, 1) / h ** 2
        Dyy = mono_eval(loc, 0, 2) / h ** 2
        c = self.coeffs[t]
        return (np.einsum("km,nm->kn", c[:, 0], Dxx)
                + 2.0 * np.einsum("km,nm->kn", c[:, 1], Dxy)
                + np.einsum("km,nm->kn", c[:, 2], Dyy))


class XField:
    """Field in the broken moment space: (nt, 15) coefficients against the
    per-triangle orthonormal basis of an XSpace."""

    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1, X_LOCAL_DIM)

    def eval(self, t, phys_pts):
        """(n, 2, 2) symmetric matrix values."""
        comp = np.einsum("k,knc->nc", self.coeffs[t],
                         self.space.basis_values(t, phys_pts))
        out = np.empty((len(comp), 2, 2))
        out[:, 0, 0] = comp[:, 0]
        out[:, 0, 1] = comp[:, 1]
        out[:, 1, 0] = comp[:, 1]
        out[:, 1, 1] = comp[:, 2]
        return out

    def div(self, t, phys_pts):
        return np.einsum("k,knj->nj", self.coeffs[t],
                         self.space.basis_div(t, phys_pts))

    def divdiv(self, t, phys_pts):
        return np.einsum("k,kn->n", self.coeffs[t],
                         self.space.basis_divdiv(t, phys_pts))

    def norm_l2(self):
        # basis orthonormal per element
        return float(np.linalg.norm(self.coeffs))

    def dump(self):
        return "".join(" ".join("%.17g" % v for v in r) + "\n"
                       for r in self.coeffs)


def _legendre01(k, s):
    """Shifted Legendre polynomial on [0, 1]."""
    from numpy.polynomial import legendre
    c = np.zeros(k + 1)
    c[k] = 1.0
    return legendre.legval(2.0 * s - 1.0, c)


def build_divdiv_constraints(space):
    """Constraint rows over broken coefficients whose kernel is the
    divDiv-conforming subspace.

    Returns a dense-free COO-style triple (rows, cols, vals, n_rows); the
    column index of basis k on triangle t is 15 t + k.
    """
    mesh = space.mesh
    rows, cols, vals = [], [], []
    nrow = 0
    sq, wq = quadrature.edge_rule(8)

    for e in range(mesh.num_edges):
        if mesh.boundary_edge_flags[e]:
            continue
        a = mesh.vertices[mesh.edges[e, 0]]
        b = mesh.vertices[mesh.edges[e, 1]]
        tvec = b - a
        elen = np.linalg.norm(tvec)
        tv = tvec / elen
        nv = np.array([tv[1], -tv[0]])
        phys = a[None, :] + sq[:, None] * tvec[None, :]
        tl, tr = mesh.edge_tris[e]
        leg = np.stack([_legendre01(k, sq) for k in range(4)])  # (4, n)
        for side, t in ((1.0, tl), (-1.0, tr)):
            val = space.basis_values(t, phys)      # (15, n, 3)
            grad = space.basis_grad(t, phys)       # (15, n, 3, 2)
            div = space.basis_div(t, phys)         # (15, n, 2)
            # n^T S n and t^T S n as combinations of (S11, S12, S22)
            wnn = np.array([nv[0] ** 2, 2 * nv[0] * nv[1], nv[1] ** 2])
            wtn = np.array([tv[0] * nv[0], tv[0] * nv[1] + tv[1] * nv[0],
                            tv[1] * nv[1]])
            qnn = np.einsum("knc,c->kn", val, wnn)
            # tangential derivative of t^T S n along the edge
            dtn = np.einsum("knc,c->kn",
                            np.einsum("kncj,j->knc", grad, tv), wtn)
            shear = np.einsum("knj,j->kn", div, nv) + dtn
            # 4 moments of the nn trace
            for k in range(4):
                m = np.einsum("kn,n->k", qnn * leg[k][None, :], wq) * elen
                rows.extend([nrow + k] * X_LOCAL_DIM)
                cols.extend(X_LOCAL_DIM * t + np.arange(X_LOCAL_DIM))
                vals.extend(side * m)
            # 3 moments of the effective shear
            for k in range(3):
                m = np.einsum("kn,n->k", shear * leg[k][None, :], wq) * elen
                rows.extend([nrow + 4 + k] * X_LOCAL_DIM)
                cols.extend(X_LOCAL_DIM * t + np.arange(X_LOCAL_DIM))
                vals.extend(side * m)
        nrow += 7

    # corner-force balance at interior vertices
    patches = mesh.vertex_patches()
    for z in range(mesh.num_vertices):
        if mesh.boundary_vertex_flags[z]:
            continue
        pt = mesh.vertices[z][None, :]
        any_entry = False
        for t in patches[z]:
            tri = mesh.triangles[t]
            i = int(np.where(tri == z)[0][0])
            val = space.basis_values(t, pt)[:, 0, :]  # (15, 3)
            contrib = np.zeros(X_LOCAL_DIM)
            # incoming edge v_{i-1} -> z, outgoing z -> v_{i+1}
            for which, (p, q) in ((1.0, (tri[(i + 2) % 3], z)),
                                  (-1.0, (z, tri[(i + 1) % 3]))):
                d = mesh.vertices[q] - mesh.vertices[p]
                tv = d / np.linalg.norm(d)
                nv = np.array([tv[1], -tv[0]])  # outward for CCW triangles
                wtn = np.array([tv[0] * nv[0],
                                tv[0] * nv[1] + tv[1] * nv[0],
                                tv[1] * nv[1]])
                contrib += which * (val @ wtn)
            rows.extend([nrow] * X_LOCAL_DIM)
            cols.extend(X_LOCAL_DIM * t + np.arange(X_LOCAL_DIM))
            vals.extend(contrib)
            any_entry = True
        if any_entry:
            nrow += 1

    return (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
            np.array(vals, dtype=float), nrow)


def constraint_matrix(space, prune=True):
    """Sparse CSR constraint matrix C with C x = 0 defining conformity.

    With prune=True (default), rows of numerically zero norm are removed;
    the remaining rows are linearly independent, which the KKT assembly
    relies on.
    """
    import scipy.sparse as sp
    rows, cols, vals, nrow = build_divdiv_constraints(space)
    ncol = space.mesh.num_triangles * X_LOCAL_DIM
    C = sp.coo_matrix((vals, (rows, cols)), shape=(nrow, ncol)).tocsr()
    if not prune or C.shape[0] == 0:
        return C
    norms = np.sqrt(np.asarray(C.multiply(C).sum(axis=1)).ravel())
    keep = norms > 1e-10 * max(norms.max(), 1e-300)
    return C[keep]
