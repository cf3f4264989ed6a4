"""Quadrature rules on triangles and edges.

Triangle rules come from a Duffy-type collapse of a tensor Gauss-Legendre
rule on the unit square onto the reference triangle
{(x, y): x >= 0, y >= 0, x + y <= 1}.  A rule built for polynomial degree d
uses ceil((d + 2) / 2) Gauss points per direction, which integrates all
bivariate polynomials of total degree <= d exactly (the collapse multiplies
one direction by the factor (1 - x), raising the needed 1D exactness by one).
"""

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Return (points, weights) exact for polynomials of total degree <= degree.

    points has shape (n, 2) in reference-triangle coordinates, weights sum
    to 1/2 (the reference area).
    """
    n = math.ceil((degree + 2) / 2)
    x, wx = np.polynomial.legendre.leggauss(n)
    # shift to [0, 1]
    x = 0.5 * (x + 1.0)
    wx = 0.5 * wx
    a, b = np.meshgrid(x, x, indexing="ij")
    wa, wb = np.meshgrid(wx, wx, indexing="ij")
    # Duffy map (a, b) -> (a, b (1 - a)); Jacobian is (1 - a)
    px = a.ravel()
    py = (b * (1.0 - a)).ravel()
    w = (wa * wb * (1.0 - a)).ravel()
    pts = np.column_stack([px, py])
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


@lru_cache(maxsize=None)
def edge_rule(degree):
    """Gauss-Legendre rule on [0, 1] exact for 1D degree <= degree."""
    n = math.ceil((degree + 1) / 2)
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def map_to_triangle(verts, pts, weights):
    """Map a reference rule to a physical triangle.

    verts is (3, 2).  Returns (phys_pts (n, 2), phys_weights (n,)).
    """
    v0, v1, v2 = np.asarray(verts, dtype=float)
    jac = np.column_stack([v1 - v0, v2 - v0])
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    phys = v0 + pts @ jac.T
    return phys, weights * abs(det)


def map_to_edge(a, b, pts, weights):
    """Map the [0, 1] rule to the segment a -> b; weights carry |b - a|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    phys = a[None, :] + pts[:, None] * (b - a)[None, :]
    return phys, weights * np.linalg.norm(b - a)
