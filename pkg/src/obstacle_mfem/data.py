"""Scalar data functions: value/gradient/Hessian callbacks for loads,
obstacles and exact solutions, with optional smoothness-interface flags."""

import numpy as np

# lower bound for data-integral quadrature degrees, settable by the CLI
_MIN_QUAD_DEGREE = 0


def set_min_quad_degree(degree):
    global _MIN_QUAD_DEGREE
    _MIN_QUAD_DEGREE = int(degree)


class ScalarData:
    """Scalar function with optional derivatives and interface marker.

    Parameters
    ----------
    value : callable
        value(points) with points of shape (n, 2) returning (n,).
    gradient : callable or None
        gradient(points) -> (n, 2).
    hessian : callable or None
        hessian(points) -> (n, 2, 2).
    interface_flag : callable or None
        interface_flag(tri_coords) -> bool; True if the triangle with the
        given (3, 2) vertex coordinates crosses a declared piecewise-
        smoothness interface (raises the quadrature degree there).
    """

    def __init__(self, value, gradient=None, hessian=None,
                 interface_flag=None, name=None):
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        self.interface_flag = interface_flag
        self.name = name

    def flags(self, mesh):
        """Boolean per-triangle interface flags (all False if unflagged)."""
        out = np.zeros(mesh.num_triangles, dtype=bool)
        if self.interface_flag is None:
            return out
        for t in range(mesh.num_triangles):
            out[t] = bool(self.interface_flag(mesh.triangle_coords(t)))
        return out

    def quad_degree(self, tri_coords, base=6, flagged=8):
        if self.interface_flag is not None and self.interface_flag(tri_coords):
            return max(flagged, _MIN_QUAD_DEGREE)
        return max(base, _MIN_QUAD_DEGREE)


def constant(c, name=None):
    c = float(c)
    return ScalarData(
        value=lambda p: np.full(len(p), c),
        gradient=lambda p: np.zeros((len(p), 2)),
        hessian=lambda p: np.zeros((len(p), 2, 2)),
        name=name,
    )


def fd_check(data, points, rel_tol=1e-5):
    """Verify gradient/Hessian against central differences of value.

    Returns the worst relative mismatch found; callers assert on it.
    """
    points = np.asarray(points, dtype=float)
    h = 1e-6
    worst = 0.0
    scale = max(1.0, float(np.max(np.abs(data.value(points)))))
    if data.gradient is not None:
        g = data.gradient(points)
        for k in range(2):
            dp = np.zeros(2)
            dp[k] = h
            fd = (data.value(points + dp) - data.value(points - dp)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(fd - g[:, k]))) / scale)
    if data.hessian is not None and data.gradient is not None:
        H = data.hessian(points)
        for k in range(2):
            dp = np.zeros(2)
            dp[k] = h
            fd = (data.gradient(points + dp) - data.gradient(points - dp)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(fd - H[:, :, k]))) / scale)
    return worst
