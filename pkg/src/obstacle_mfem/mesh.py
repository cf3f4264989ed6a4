"""Conforming triangle meshes with newest-vertex bisection.

Triangles are stored counterclockwise with the newest vertex in local
position 0, so the refinement edge is always the local edge (v1, v2).
Edges carry a global orientation from lower to higher vertex index; the
global edge normal is the tangent rotated by -90 degrees, n = (t_y, -t_x).
"""

import io

import numpy as np


class Mesh:
    """Immutable triangle mesh with connectivity.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array
        Counterclockwise; newest vertex first, refinement edge (v1, v2).
    generation : (nt,) int array
        Bisection depth of each triangle.
    edges : (ne, 2) int array
        Unique vertex pairs (a, b) with a < b, lexicographically sorted.
    tri_edges : (nt, 3) int array
        tri_edges[t, i] is the global index of the edge opposite local
        vertex i.
    tri_edge_signs : (nt, 3) int array
        +1 where the triangle traverses the edge in its global (low-to-high)
        direction, else -1.  For a +1 edge the global normal points out of
        the triangle.
    edge_tris : (ne, 2) int array
        edge_tris[e, 0] is the triangle whose outward normal matches the
        global edge normal (-1 if none); edge_tris[e, 1] the other side
        (-1 on the boundary).
    """

    def __init__(self, vertices, triangles, generation=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        nt = len(self.triangles)
        if generation is None:
            generation = np.zeros(nt, dtype=np.int64)
        self.generation = np.asarray(generation, dtype=np.int64)
        self._build_connectivity()
        self._check_invariants()
        for arr in (self.vertices, self.triangles, self.generation,
                    self.edges, self.tri_edges, self.tri_edge_signs,
                    self.edge_tris):
            arr.setflags(write=False)

    # -- derived geometry ---------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_edges(self):
        return len(self.edges)

    def triangle_coords(self, t):
        return self.vertices[self.triangles[t]]

    def _build_connectivity(self):
        tris = self.triangles
        nt = len(tris)
        # local edge i is opposite local vertex i: (v_{i+1}, v_{i+2})
        pairs = np.stack(
            [tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]], axis=1
        )  # (nt, 3, 2)
        lo = pairs.min(axis=2)
        hi = pairs.max(axis=2)
        keyed = np.column_stack([lo.ravel(), hi.ravel()])
        edges, inverse = np.unique(keyed, axis=0, return_inverse=True)
        self.edges = edges
        self.tri_edges = inverse.reshape(nt, 3)
        # sign +1 when the triangle's traversal goes low -> high
        self.tri_edge_signs = np.where(
            pairs[:, :, 0] < pairs[:, :, 1], 1, -1
        ).astype(np.int64)
        ne = len(edges)
        edge_tris = -np.ones((ne, 2), dtype=np.int64)
        for t in range(nt):
            for i in range(3):
                e = self.tri_edges[t, i]
                side = 0 if self.tri_edge_signs[t, i] == 1 else 1
                if edge_tris[e, side] != -1:
                    raise ValueError("non-manifold edge %d" % e)
                edge_tris[e, side] = t
        self.edge_tris = edge_tris
        counts = (edge_tris >= 0).sum(axis=1)
        self.boundary_edge_flags = counts == 1
        bverts = np.zeros(self.num_vertices, dtype=bool)
        bverts[edges[self.boundary_edge_flags].ravel()] = True
        self.boundary_vertex_flags = bverts

        v = self.vertices
        p = v[tris]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        self.areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        elens = np.linalg.norm(v[edges[:, 1]] - v[edges[:, 0]], axis=1)
        self.edge_lengths = elens
        self.diameters = elens[self.tri_edges].max(axis=1)

    def _check_invariants(self):
        if np.any(self.areas <= 0):
            raise ValueError("triangle with nonpositive signed area")
        counts = (self.edge_tris >= 0).sum(axis=1)
        if np.any(counts < 1) or np.any(counts > 2):
            raise ValueError("hanging node or isolated edge")

    def refinement_edges(self):
        """Global edge index of each triangle's refinement edge (v1, v2)."""
        return self.tri_edges[:, 0]

    def vertex_patches(self):
        """Map vertex index -> list of incident triangle indices."""
        patches = [[] for _ in range(self.num_vertices)]
        for t, tri in enumerate(self.triangles):
            for z in tri:
                patches[z].append(t)
        return patches

    def min_angle(self):
        p = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosv = (a * b).sum(axis=1) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            angles.append(np.arccos(np.clip(cosv, -1.0, 1.0)))
        return float(np.min(angles))

    def dump(self, fh=None):
        """Write the text form: counts line "V E T", vertices, triangles."""
        out = fh if fh is not None else io.StringIO()
        out.write("%d %d %d\n" % (self.num_vertices, self.num_edges,
                                  self.num_triangles))
        for x, y in self.vertices:
            out.write("%.17g %.17g\n" % (x, y))
        for v0, v1, v2 in self.triangles:
            out.write("%d %d %d\n" % (v0, v1, v2))
        if fh is None:
            return out.getvalue()
        return None


def _normalize_initial(vertices, triangles):
    """Orient CCW and rotate so the refinement edge is the longest edge.

    Ties in edge length are broken by the smallest global edge index, which
    makes neighboring triangles agree on shared longest edges.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64).copy()
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    flip = area2 < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    tmp = Mesh(vertices, triangles)
    out = triangles.copy()
    for t in range(len(triangles)):
        lens = tmp.edge_lengths[tmp.tri_edges[t]]
        idxs = tmp.tri_edges[t]
        # choose local edge: longest, ties by smallest global edge index
        order = sorted(range(3), key=lambda i: (-lens[i], idxs[i]))
        i = order[0]
        out[t] = np.roll(triangles[t], -i)
    return vertices, out


_DOMAINS = {}


def _register(name):
    def deco(fn):
        _DOMAINS[name] = fn
        return fn
    return deco


@_register("unit_square")
def _unit_square():
    v = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    t = [(0, 1, 2), (0, 2, 3)]
    return v, t


@_register("square_m1_1")
def _square_m1_1():
    v = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
    t = [(0, 1, 2), (0, 2, 3)]
    return v, t


@_register("lshape_paper")
def _lshape_paper():
    # (-1, 1)^2 minus the closed square [-1, 0]^2; reentrant corner at 0
    v = [(0.0, -1.0), (1.0, -1.0), (1.0, 0.0), (1.0, 1.0),
         (0.0, 1.0), (-1.0, 1.0), (-1.0, 0.0), (0.0, 0.0)]
    t = [(0, 1, 2), (0, 2, 7), (7, 2, 3), (7, 3, 4),
         (6, 7, 4), (6, 4, 5)]
    return v, t


@_register("lshape_small")
def _lshape_small():
    # (-1/2, 1/2)^2 minus [0, 1/2]^2; reentrant corner at the origin
    v = [(-0.5, -0.5), (0.0, -0.5), (0.5, -0.5), (0.5, 0.0),
         (0.0, 0.0), (0.0, 0.5), (-0.5, 0.5), (-0.5, 0.0)]
    t = [(0, 1, 4), (1, 2, 3), (1, 3, 4), (0, 4, 7),
         (7, 4, 5), (7, 5, 6)]
    return v, t


def make_domain(domain_id, initial_subdivisions=0):
    """Build the initial mesh of a named polygon, uniformly refined."""
    if domain_id not in _DOMAINS:
        raise ValueError("unknown domain_id %r" % (domain_id,))
    v, t = _DOMAINS[domain_id]()
    v, t = _normalize_initial(v, t)
    m = Mesh(v, t)
    for _ in range(initial_subdivisions):
        m = refine_uniform(m)
    return m


def _split(mesh, split_edges):
    """Bisect every triangle whose refinement edge is in split_edges.

    split_edges must be closed: if any edge of a triangle is split, so is
    its refinement edge.
    """
    nv = mesh.num_vertices
    new_vertex = {}
    coords = [mesh.vertices]
    mid = []
    for e in sorted(split_edges):
        a, b = mesh.edges[e]
        mid.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
        new_vertex[e] = nv
        nv += 1
    if mid:
        coords.append(np.array(mid))
    vertices = np.vstack(coords)

    tris = []
    gens = []

    def bisect(tri, gen, depth):
        v0, v1, v2 = tri
        e = _edge_key_index(mesh, v1, v2)
        if e not in new_vertex or depth == 0:
            tris.append(tri)
            gens.append(gen)
            return
        m = new_vertex[e]
        bisect((m, v0, v1), gen + 1, depth - 1)
        bisect((m, v2, v0), gen + 1, depth - 1)

    for t in range(mesh.num_triangles):
        tri = tuple(mesh.triangles[t])
        bisect(tri, int(mesh.generation[t]), 2)
    return Mesh(vertices, np.array(tris, dtype=np.int64),
                np.array(gens, dtype=np.int64))


def _edge_key_index(mesh, a, b):
    lo, hi = (a, b) if a < b else (b, a)
    idx = np.searchsorted(mesh.edges[:, 0], lo)
    while idx < len(mesh.edges) and mesh.edges[idx, 0] == lo:
        if mesh.edges[idx, 1] == hi:
            return idx
        idx += 1
    return -1


def refine_nvb(mesh, marked):
    """Newest-vertex bisection of the marked triangles plus closure."""
    marked = set(int(t) for t in marked)
    if not marked:
        return mesh
    ref = mesh.refinement_edges()
    split = set(int(ref[t]) for t in marked)
    # closure: a triangle touching a split edge must split its ref edge
    changed = True
    while changed:
        changed = False
        split_arr = np.fromiter(split, dtype=np.int64)
        mask = np.isin(mesh.tri_edges, split_arr).any(axis=1)
        for t in np.nonzero(mask)[0]:
            if int(ref[t]) not in split:
                split.add(int(ref[t]))
                changed = True
    return _split(mesh, split)


def refine_uniform(mesh):
    """Bisect every triangle twice (all edges split); 4 children each."""
    return _split(mesh, set(range(mesh.num_edges)))
