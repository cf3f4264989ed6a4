"""C1-conforming cubic macro-element space (three-subtriangle split).

Each mesh triangle is split at its centroid into three subtriangles, each
carrying a cubic polynomial.  Degrees of freedom: value and gradient at
the three vertices, plus the normal derivative (global edge normal) at
the three edge midpoints.  The twelve DOFs together with the internal C1
matching conditions determine the piecewise cubic uniquely; the local
33x30 condition system is solved by least squares per element (rank 30,
three redundant conditions) and the residual is verified.

Homogeneous second-order boundary conditions are imposed by constraining
all DOFs attached to boundary vertices and boundary edges to zero.
"""

import numpy as np

from .xspace import mono_eval


class HCTSpace:
    def __init__(self, mesh, clamped=True):
        self.mesh = mesh
        self.clamped = clamped
        nt = mesh.num_triangles
        self.centers = mesh.vertices[mesh.triangles].mean(axis=1)
        self.scales = mesh.diameters.copy()
        # DOF numbering: 3 per free vertex then 1 per free edge
        vfree = ~mesh.boundary_vertex_flags if clamped else np.ones(
            mesh.num_vertices, dtype=bool)
        efree = ~mesh.boundary_edge_flags if clamped else np.ones(
            mesh.num_edges, dtype=bool)
        vnum = -np.ones(mesh.num_vertices, dtype=np.int64)
        vnum[vfree] = np.arange(vfree.sum())
        enum = -np.ones(mesh.num_edges, dtype=np.int64)
        enum[efree] = 3 * vfree.sum() + np.arange(efree.sum())
        self.ndof = int(3 * vfree.sum() + efree.sum())
        self.dof_map = -np.ones((nt, 12), dtype=np.int64)
        for t in range(nt):
            tri = mesh.triangles[t]
            for i in range(3):
                if vnum[tri[i]] >= 0:
                    self.dof_map[t, 3 * i:3 * i + 3] = 3 * vnum[tri[i]] + np.arange(3)
            for i in range(3):
                e = mesh.tri_edges[t, (i + 2) % 3]  # edge (p_i, p_{i+1})
                if enum[e] >= 0:
                    self.dof_map[t, 9 + i] = enum[e]
        self.local_basis = np.empty((nt, 12, 3, 10))
        for t in range(nt):
            self.local_basis[t] = self._build_local(t)

    # -- local construction ------------------------------------------------

    def _loc(self, t, phys):
        return (np.asarray(phys) - self.centers[t]) / self.scales[t]

    def _build_local(self, t):
        mesh = self.mesh
        verts = mesh.triangle_coords(t)
        h = self.scales[t]
        locv = self._loc(t, verts)           # (3, 2); centroid at origin
        rows = []
        rhs_cols = []

        def add_row(block, coeff, dofcol):
            row = np.zeros(30)
            row[10 * block:10 * block + 10] = coeff
            rows.append(row)
            rhs_cols.append(dofcol)

        # vertex DOFs imposed on subtriangle K_i = (c, p_i, p_{i+1})
        for i in range(3):
            pt = locv[i][None, :]
            add_row(i, mono_eval(pt)[0], 3 * i)
            add_row(i, mono_eval(pt, 1, 0)[0] / h, 3 * i + 1)
            add_row(i, mono_eval(pt, 0, 1)[0] / h, 3 * i + 2)
        # edge-midpoint normal derivatives, global edge normal
        for i in range(3):
            e = mesh.tri_edges[t, (i + 2) % 3]
            a = mesh.vertices[mesh.edges[e, 0]]
            b = mesh.vertices[mesh.edges[e, 1]]
            tv = (b - a) / np.linalg.norm(b - a)
            nv = np.array([tv[1], -tv[0]])
            mid = self._loc(t, 0.5 * (verts[i] + verts[(i + 1) % 3]))[None, :]
            coeff = (nv[0] * mono_eval(mid, 1, 0)[0]
                     + nv[1] * mono_eval(mid, 0, 1)[0]) / h
            add_row(i, coeff, 9 + i)

        ncond = len(rows)
        # internal C1 conditions on edges (centroid -> p_i), shared by
        # subtriangles K_{i-1} and K_i
        c1rows = []
        for i in range(3):
            d = locv[i]  # direction from origin (centroid) to vertex i
            dn = d / np.linalg.norm(d)
            nv = np.array([dn[1], -dn[0]])
            for s in (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0):
                pt = (s * d)[None, :]
                row = np.zeros(30)
                v = mono_eval(pt)[0]
                row[10 * ((i + 2) % 3):10 * ((i + 2) % 3) + 10] = v
                row[10 * i:10 * i + 10] -= v
                c1rows.append(row)
            for s in (0.0, 0.5, 1.0):
                pt = (s * d)[None, :]
                gn = nv[0] * mono_eval(pt, 1, 0)[0] + nv[1] * mono_eval(pt, 0, 1)[0]
                row = np.zeros(30)
                row[10 * ((i + 2) % 3):10 * ((i + 2) % 3) + 10] = gn
                row[10 * i:10 * i + 10] -= gn
                c1rows.append(row)
        A = np.vstack([np.array(rows), np.array(c1rows)])
        B = np.zeros((A.shape[0], 12))
        for r, col in enumerate(rhs_cols):
            B[r, col] = 1.0
        sol, _, rank, _ = np.linalg.lstsq(A, B, rcond=None)
        res = np.abs(A @ sol - B).max()
        if res > 1e-8:
            raise RuntimeError(
                "macro-element construction failed on triangle %d "
                "(residual %.3e, rank %d)" % (t, res, rank))
        return sol.T.reshape(12, 3, 10)

    # -- geometry ----------------------------------------------------------

    def subtriangle_vertices(self, t):
        """(3, 3, 2): physical vertices of the subtriangles (c, p_i, p_{i+1})."""
        verts = self.mesh.triangle_coords(t)
        c = self.centers[t]
        out = np.empty((3, 3, 2))
        for i in range(3):
            out[i] = [c, verts[i], verts[(i + 1) % 3]]
        return out

    def locate_subtriangle(self, t, phys_pts):
        """Subtriangle index for each point (assumed inside the macro
        triangle)."""
        subs = self.subtriangle_vertices(t)
        pts = np.asarray(phys_pts, dtype=float)
        best = np.full(len(pts), -1, dtype=np.int64)
        bestmin = np.full(len(pts), -np.inf)
        for s in range(3):
            v0, v1, v2 = subs[s]
            Binv = np.linalg.inv(np.column_stack([v1 - v0, v2 - v0]))
            ref = (pts - v0) @ Binv.T
            bary = np.column_stack([1 - ref.sum(axis=1), ref])
            mn = bary.min(axis=1)
            upd = mn > bestmin
            best[upd] = s
            bestmin[upd] = mn[upd]
        return best

    # -- evaluation --------------------------------------------------------

    def local_dof_values(self, t, x):
        """Extract the 12 local DOF values from a global vector (zeros for
        constrained DOFs)."""
        idx = self.dof_map[t]
        out = np.zeros(12)
        free = idx >= 0
        out[free] = x[idx[free]]
        return out

    def eval_local(self, t, dofvals, phys_pts, sub=None, deriv=(0, 0)):
        """Evaluate the macro polynomial with given local DOF values."""
        if sub is None:
            sub = self.locate_subtriangle(t, phys_pts)
        loc = self._loc(t, phys_pts)
        h = self.scales[t]
        dx, dy = deriv
        V = mono_eval(loc, dx, dy) / h ** (dx + dy)
        coeffs = np.einsum("d,dsm->sm", dofvals, self.local_basis[t])
        out = np.empty(len(loc))
        for s in range(3):
            mask = sub == s
            if mask.any():
                out[mask] = V[mask] @ coeffs[s]
        return out

    def eval_grad_local(self, t, dofvals, phys_pts, sub=None):
        gx = self.eval_local(t, dofvals, phys_pts, sub, (1, 0))
        gy = self.eval_local(t, dofvals, phys_pts, sub, (0, 1))
        return np.column_stack([gx, gy])

    def eval_hess_local(self, t, dofvals, phys_pts, sub=None):
        if sub is None:
            sub = self.locate_subtriangle(t, phys_pts)
        H = np.empty((len(phys_pts), 2, 2))
        H[:, 0, 0] = self.eval_local(t, dofvals, phys_pts, sub, (2, 0))
        H[:, 0, 1] = self.eval_local(t, dofvals, phys_pts, sub, (1, 1))
        H[:, 1, 0] = H[:, 0, 1]
        H[:, 1, 1] = self.eval_local(t, dofvals, phys_pts, sub, (0, 2))
        return H


class HCTField:
    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=float)

    def eval(self, t, phys_pts, deriv=(0, 0)):
        dv = self.space.local_dof_values(t, self.coeffs)
        return self.space.eval_local(t, dv, phys_pts, deriv=deriv)

    def grad(self, t, phys_pts):
        dv = self.space.local_dof_values(t, self.coeffs)
        return self.space.eval_grad_local(t, dv, phys_pts)

    def hess(self, t, phys_pts):
        dv = self.space.local_dof_values(t, self.coeffs)
        return self.space.eval_hess_local(t, dv, phys_pts)

    def dump(self):
        return "".join("%.17g\n" % v for v in self.coeffs)
