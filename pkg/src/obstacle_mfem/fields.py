"""Piecewise polynomial fields: P0, discontinuous P1, conforming P1,
broken P3 (Lagrange principal lattice) and lowest-order Raviart-Thomas,
with elementwise evaluation, projections and the RT0 interpolant.

Reference element: triangle {(x, y): x, y >= 0, x + y <= 1}; barycentric
coordinates (1 - x - y, x, y) are attached to local vertices (0, 1, 2).
"""

import numpy as np

from . import quadrature


# -- affine maps ----------------------------------------------------------

def affine_map(verts):
    """Return (origin v0, jacobian B, inverse Binv, det) of the map
    x = v0 + B x_ref."""
    v0, v1, v2 = np.asarray(verts, dtype=float)
    B = np.column_stack([v1 - v0, v2 - v0])
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    Binv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]]) / det
    return v0, B, Binv, det


def to_reference(verts, phys_pts):
    v0, B, Binv, det = affine_map(verts)
    return (np.asarray(phys_pts) - v0) @ Binv.T


def barycentric(ref_pts):
    x = ref_pts[:, 0]
    y = ref_pts[:, 1]
    return np.column_stack([1.0 - x - y, x, y])


# -- P3 Lagrange basis on the reference triangle --------------------------

def p3_nodes():
    """Principal lattice nodes of degree 3, barycentric multi-indices
    (i, j, k)/3 with i + j + k = 3, ordered lexicographically by (i, j, k)
    descending in i then j."""
    nodes = []
    for i in range(3, -1, -1):
        for j in range(3 - i, -1, -1):
            k = 3 - i - j
            nodes.append((i / 3.0, j / 3.0, k / 3.0))
    return np.array(nodes)


def _monomials3(pts):
    x = pts[:, 0]
    y = pts[:, 1]
    cols = []
    for d in range(4):
        for a in range(d, -1, -1):
            b = d - a
            cols.append(x ** a * y ** b)
    return np.column_stack(cols)


_P3_REF_NODES = None
_P3_COEFFS = None  # (10, 10): basis index -> monomial coefficients


def _p3_setup():
    global _P3_REF_NODES, _P3_COEFFS
    if _P3_COEFFS is not None:
        return
    bary = p3_nodes()
    ref = np.column_stack([bary[:, 1], bary[:, 2]])
    V = _monomials3(ref)
    _P3_COEFFS = np.linalg.inv(V)  # columns are nodal basis coefficients
    _P3_REF_NODES = ref


def p3_ref_nodes():
    _p3_setup()
    return _P3_REF_NODES


_MONO_EXP = [(a, d - a) for d in range(4) for a in range(d, -1, -1)]


def _mono_eval(pts, dx=0, dy=0):
    """Evaluate (derivatives of) the 10 cubic monomials at ref points."""
    x = pts[:, 0]
    y = pts[:, 1]
    out = np.zeros((len(pts), 10))
    for col, (a, b) in enumerate(_MONO_EXP):
        if a < dx or b < dy:
            continue
        ca = 1.0
        for k in range(dx):
            ca *= a - k
        for k in range(dy):
            ca *= b - k
        out[:, col] = ca * x ** (a - dx) * y ** (b - dy)
    return out


def p3_basis(ref_pts, dx=0, dy=0):
    """(n, 10) array of P3 Lagrange basis (derivative) values."""
    _p3_setup()
    return _mono_eval(ref_pts, dx, dy) @ _P3_COEFFS


# -- field classes --------------------------------------------------------

class P0Field:
    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def eval(self, mesh, t, phys_pts):
        return np.full(len(phys_pts), self.values[t])

    def dump(self):
        return "".join("%.17g\n" % v for v in self.values)


class P1dField:
    """Discontinuous P1: nodal values at the 3 vertices of each triangle."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float).reshape(-1, 3)

    def eval(self, mesh, t, phys_pts):
        ref = to_reference(mesh.triangle_coords(t), phys_pts)
        return barycentric(ref) @ self.values[t]

    def grad(self, mesh, t):
        verts = mesh.triangle_coords(t)
        _, _, Binv, _ = affine_map(verts)
        # gradients of barycentric coords in reference: (-1,-1), (1,0), (0,1)
        gref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return self.values[t] @ (gref @ Binv)

    def dump(self):
        return "".join("%.17g %.17g %.17g\n" % tuple(r) for r in self.values)


class P1cField:
    """Conforming P1: one value per mesh vertex."""

    def __init__(self, values, h10=False):
        self.values = np.asarray(values, dtype=float)
        self.h10 = h10

    def eval(self, mesh, t, phys_pts):
        ref = to_reference(mesh.triangle_coords(t), phys_pts)
        return barycentric(ref) @ self.values[mesh.triangles[t]]

    def grad(self, mesh, t):
        verts = mesh.triangle_coords(t)
        _, _, Binv, _ = affine_map(verts)
        gref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return self.values[mesh.triangles[t]] @ (gref @ Binv)

    def to_p1d(self, mesh):
        return P1dField(self.values[mesh.triangles])

    def dump(self):
        return "".join("%.17g\n" % v for v in self.values)


class P3bField:
    """Broken P3: 10 Lagrange coefficients per triangle."""

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1, 10)

    def eval(self, mesh, t, phys_pts, deriv=(0, 0)):
        verts = mesh.triangle_coords(t)
        ref = to_reference(verts, phys_pts)
        return self.eval_ref(mesh, t, ref, deriv)

    def eval_ref(self, mesh, t, ref_pts, deriv=(0, 0)):
        """Evaluate at reference points; deriv = (dx, dy) in physical
        coordinates (total order <= 2)."""
        verts = mesh.triangle_coords(t)
        _, _, Binv, _ = affine_map(verts)
        dx, dy = deriv
        order = dx + dy
        if order == 0:
            return p3_basis(ref_pts) @ self.coeffs[t]
        if order == 1:
            dref = np.stack([p3_basis(ref_pts, 1, 0) @ self.coeffs[t],
                             p3_basis(ref_pts, 0, 1) @ self.coeffs[t]])
            e = np.zeros(2)
            e[1 if dy else 0] = 1.0
            w = Binv @ e  # w_k = d ref_k / d phys_j
            return w[0] * dref[0] + w[1] * dref[1]
        if order == 2:
            d2 = [[p3_basis(ref_pts, 2, 0) @ self.coeffs[t],
                   p3_basis(ref_pts, 1, 1) @ self.coeffs[t]],
                  [None, p3_basis(ref_pts, 0, 2) @ self.coeffs[t]]]
            d2[1][0] = d2[0][1]
            # physical second derivative d^2/(dx_i dx_j)
            i = 0 if dx >= 1 else 1
            j = 0 if dx == 2 else 1
            ei = np.zeros(2)
            ei[i] = 1.0
            ej = np.zeros(2)
            ej[j] = 1.0
            a = Binv @ ei
            b = Binv @ ej
            out = np.zeros(len(ref_pts))
            for p in range(2):
                for q in range(2):
                    out += a[p] * b[q] * d2[p][q]
            return out
        raise ValueError("unsupported derivative order")

    def grad_phys(self, mesh, t, phys_pts):
        ref = to_reference(mesh.triangle_coords(t), phys_pts)
        return self.grad_ref(mesh, t, ref)

    def grad_ref(self, mesh, t, ref_pts):
        verts = mesh.triangle_coords(t)
        _, _, Binv, _ = affine_map(verts)
        gr = np.stack([p3_basis(ref_pts, 1, 0) @ self.coeffs[t],
                       p3_basis(ref_pts, 0, 1) @ self.coeffs[t]], axis=1)
        return gr @ Binv

    def hess_ref(self, mesh, t, ref_pts):
        """Physical Hessian, shape (n, 2, 2)."""
        verts = mesh.triangle_coords(t)
        _, _, Binv, _ = affine_map(verts)
        d = np.empty((len(ref_pts), 2, 2))
        dxx = p3_basis(ref_pts, 2, 0) @ self.coeffs[t]
        dxy = p3_basis(ref_pts, 1, 1) @ self.coeffs[t]
        dyy = p3_basis(ref_pts, 0, 2) @ self.coeffs[t]
        Href = np.empty((len(ref_pts), 2, 2))
        Href[:, 0, 0] = dxx
        Href[:, 0, 1] = dxy
        Href[:, 1, 0] = dxy
        Href[:, 1, 1] = dyy
        return np.einsum("pi,npq,qj->nij", Binv, Href, Binv)

    def dump(self):
        return "".join(" ".join("%.17g" % v for v in r) + "\n"
                       for r in self.coeffs)


class RT0Field:
    """Lowest-order Raviart-Thomas field: one flux per global edge.

    The coefficient of edge e is the integral of the normal component over
    e with the global normal (tangent low->high vertex rotated by -90
    degrees).
    """

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)

    def local_basis(self, mesh, t, phys_pts):
        """(3, n, 2): local basis functions on T (edge opposite local
        vertex i, sign-adjusted to the global edge orientation)."""
        verts = mesh.triangle_coords(t)
        area = mesh.areas[t]
        out = np.empty((3, len(phys_pts), 2))
        for i in range(3):
            s = mesh.tri_edge_signs[t, i]
            out[i] = s / (2.0 * area) * (phys_pts - verts[i])
        return out

    def local_div(self, mesh, t):
        """(3,): divergence of each local basis function (constant)."""
        out = np.empty(3)
        for i in range(3):
            out[i] = mesh.tri_edge_signs[t, i] / mesh.areas[t]
        return out

    def eval(self, mesh, t, phys_pts):
        basis = self.local_basis(mesh, t, phys_pts)
        c = self.coeffs[mesh.tri_edges[t]]
        return np.einsum("i,inj->nj", c, basis)

    def div(self, mesh, t):
        return float(self.coeffs[mesh.tri_edges[t]] @ self.local_div(mesh, t))

    def dump(self):
        return "".join("%.17g\n" % v for v in self.coeffs)


# -- projections and interpolants -----------------------------------------

def project_p0(f, mesh, base_degree=6):
    vals = np.empty(mesh.num_triangles)
    for t in range(mesh.num_triangles):
        verts = mesh.triangle_coords(t)
        deg = f.quad_degree(verts, base=base_degree, flagged=max(8, base_degree))
        pts, w = quadrature.triangle_rule(deg)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        vals[t] = (pw * f.value(phys)).sum() / mesh.areas[t]
    return P0Field(vals)


_P1_MASS_REF = np.array([[2.0, 1.0, 1.0],
                         [1.0, 2.0, 1.0],
                         [1.0, 1.0, 2.0]]) / 12.0


def p1_mass(area):
    """Nodal P1 mass matrix on a triangle of given area."""
    return area * _P1_MASS_REF


def project_p1d(f, mesh, base_degree=6):
    vals = np.empty((mesh.num_triangles, 3))
    for t in range(mesh.num_triangles):
        verts = mesh.triangle_coords(t)
        deg = f.quad_degree(verts, base=base_degree, flagged=max(8, base_degree))
        pts, w = quadrature.triangle_rule(deg)
        phys, pw = quadrature.map_to_triangle(verts, pts, w)
        lam = barycentric(pts)
        rhs = lam.T @ (pw * f.value(phys))
        vals[t] = np.linalg.solve(p1_mass(mesh.areas[t]), rhs)
    return P1dField(vals)


def interpolate_rt0(vector_value, mesh, degree=6):
    """Edge-flux interpolant: coefficient on e = integral of q . n_e.

    vector_value(points (n, 2)) -> (n, 2).
    """
    x, w = quadrature.edge_rule(degree)
    coeffs = np.empty(mesh.num_edges)
    for e in range(mesh.num_edges):
        a = mesh.vertices[mesh.edges[e, 0]]
        b = mesh.vertices[mesh.edges[e, 1]]
        tvec = b - a
        n = np.array([tvec[1], -tvec[0]])  # length |b - a| absorbed below
        phys = a[None, :] + x[:, None] * tvec[None, :]
        q = vector_value(phys)
        coeffs[e] = (w * (q @ n)).sum()
    return RT0Field(coeffs)
