"""Registry of the built-in example configurations.

Each example bundles a domain, load f, obstacle g (with interface flags
for quadrature upgrading near data kinks) and, when available, the exact
solution for error computation.
"""

import numpy as np

from .data import ScalarData
from .mesh import make_domain


class Example:
    def __init__(self, name, kind, domain_id, f, g, exact_u=None,
                 exact_grad_u=None, exact_hess_u=None, exact_lambda=None):
        self.name = name
        self.kind = kind          # "membrane" | "plate"
        self.domain_id = domain_id
        self.f = f
        self.g = g
        self.exact_u = exact_u
        self.exact_grad_u = exact_grad_u
        self.exact_hess_u = exact_hess_u
        self.exact_lambda = exact_lambda

    def make_mesh(self, initial_subdivisions=0):
        return make_domain(self.domain_id, initial_subdivisions)


def _crosses_line_x(x0):
    def flag(tri_coords):
        return bool(tri_coords[:, 0].min() < x0 < tri_coords[:, 0].max())
    return flag


def _crosses_circle(cx, cy, r2):
    def flag(tri_coords):
        pts = np.vstack([tri_coords, tri_coords.mean(axis=0)])
        d = ((pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2)
        return bool(d.min() < r2 < d.max())
    return flag


def _any_flag(*flags):
    def flag(tri_coords):
        return any(fl(tri_coords) for fl in flags)
    return flag


# -- membrane, smooth solution on the unit square ---------------------------

# cubic blend for the obstacle on x >= 1/2, matching value and slope of
# x(1-x) at x = 1/2 and prescribing value -1/4 and slope -1 at x = 1
_GT = np.array([4.0, -10.0, 7.0, -1.25])       # coefficients of x^3..x^0
_GTP = np.polyder(_GT)


def _membrane_smooth():
    def uval(p):
        x, y = p[:, 0], p[:, 1]
        return x * (1 - x) * y * (1 - y)

    def ugrad(p):
        x, y = p[:, 0], p[:, 1]
        return np.column_stack([(1 - 2 * x) * y * (1 - y),
                                x * (1 - x) * (1 - 2 * y)])

    def fval(p):
        x, y = p[:, 0], p[:, 1]
        return np.where(x < 0.5, 0.0, 2 * (x * (1 - x) + y * (1 - y)))

    def gval(p):
        x, y = p[:, 0], p[:, 1]
        ax = np.where(x < 0.5, x * (1 - x), np.polyval(_GT, x))
        return ax * y * (1 - y)

    def ggrad(p):
        x, y = p[:, 0], p[:, 1]
        ax = np.where(x < 0.5, x * (1 - x), np.polyval(_GT, x))
        axp = np.where(x < 0.5, 1 - 2 * x, np.polyval(_GTP, x))
        return np.column_stack([axp * y * (1 - y), ax * (1 - 2 * y)])

    def lamval(p):
        x, y = p[:, 0], p[:, 1]
        return np.where(x < 0.5, 2 * (x * (1 - x) + y * (1 - y)), 0.0)

    iface = _crosses_line_x(0.5)
    return Example(
        "smooth-square", "membrane", "unit_square",
        f=ScalarData(fval, interface_flag=iface, name="f"),
        g=ScalarData(gval, gradient=ggrad, interface_flag=iface, name="g"),
        exact_u=ScalarData(uval, gradient=ugrad, name="u"),
        exact_grad_u=ugrad,
        exact_lambda=ScalarData(lamval, interface_flag=iface, name="lambda"))


# -- membrane, pyramid obstacle on the L-shaped domain ----------------------

def _membrane_lshape():
    def _branches(p):
        x, y = p[:, 0], p[:, 1]
        cand = np.column_stack([x, 1 - x, y, 1 - y])
        inside = (x > 0) & (x < 1) & (y > 0) & (y < 1)
        dist = cand.min(axis=1)
        return inside, dist, cand.argmin(axis=1)

    def gval(p):
        inside, dist, _ = _branches(p)
        return np.where(inside, np.maximum(0.0, dist - 0.25), 0.0)

    def ggrad(p):
        inside, dist, br = _branches(p)
        grads = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        g = grads[br]
        g[~inside | (dist <= 0.25)] = 0.0
        return g

    def iface(tri_coords):
        # flag elements meeting the square where the pyramid is active;
        # g is piecewise affine there with kinks on its diagonals/border
        pts = np.vstack([tri_coords, tri_coords.mean(axis=0)])
        hit = ((pts[:, 0] > 0.25 - 1e-12) & (pts[:, 0] < 0.75 + 1e-12)
               & (pts[:, 1] > 0.25 - 1e-12) & (pts[:, 1] < 0.75 + 1e-12))
        return bool(hit.any())

    return Example(
        "lshape-pyramid", "membrane", "lshape_paper",
        f=ScalarData(lambda p: np.ones(len(p)), name="f"),
        g=ScalarData(gval, gradient=ggrad, interface_flag=iface, name="g"))


# -- plate, known solution on (-1,1)^2 --------------------------------------

def _plate_smooth():
    def _s(p):
        return p[:, 0] ** 2 + p[:, 1] ** 2

    def uval(p):
        s = _s(p)
        return np.where(s < 1.0, (1 - np.minimum(s, 1.0)) ** 4, 0.0)

    def ugrad(p):
        s = np.minimum(_s(p), 1.0)
        c = -8 * (1 - s) ** 3
        return c[:, None] * p

    def uhess(p):
        s = np.minimum(_s(p), 1.0)
        H = np.zeros((len(p), 2, 2))
        a = -8 * (1 - s) ** 3
        b = 48 * (1 - s) ** 2
        H[:, 0, 0] = a + b * p[:, 0] ** 2
        H[:, 0, 1] = H[:, 1, 0] = b * p[:, 0] * p[:, 1]
        H[:, 1, 1] = a + b * p[:, 1] ** 2
        return H

    def bilap(p):
        s = _s(p)
        return np.where(s < 1.0, 2304 * s ** 2 - 2304 * s + 384, 0.0)

    def fval(p):
        return bilap(p) - 100.0 * (_s(p) < 1.0 / 16.0)

    def gval(p):
        s = _s(p)
        outer = (-(100697.0 / 36864.0) * s - (20803.0 / 73728.0) * np.sqrt(s)
                 + 74741.0 / 73728.0)
        return np.where(s < 1.0 / 16.0, (1 - s) ** 4, outer)

    def ggrad(p):
        s = _s(p)
        r = np.sqrt(np.maximum(s, 1e-300))
        inner = -8 * (1 - s) ** 3
        outer = -2 * (100697.0 / 36864.0) - (20803.0 / 73728.0) / r
        c = np.where(s < 1.0 / 16.0, inner, outer)
        return c[:, None] * p

    def ghess(p):
        s = _s(p)
        x, y = p[:, 0], p[:, 1]
        r = np.sqrt(np.maximum(s, 1e-300))
        H = np.zeros((len(p), 2, 2))
        inner = s < 1.0 / 16.0
        a = np.where(inner, -8 * (1 - s) ** 3,
                     -2 * (100697.0 / 36864.0) - (20803.0 / 73728.0) / r)
        b = np.where(inner, 48 * (1 - s) ** 2,
                     (20803.0 / 73728.0) / r ** 3)
        H[:, 0, 0] = a + b * x ** 2
        H[:, 0, 1] = H[:, 1, 0] = b * x * y
        H[:, 1, 1] = a + b * y ** 2
        return H

    def lamval(p):
        return 100.0 * (_s(p) < 1.0 / 16.0)

    ifc = _any_flag(_crosses_circle(0.0, 0.0, 1.0 / 16.0),
                    _crosses_circle(0.0, 0.0, 1.0))
    return Example(
        "smooth", "plate", "square_m1_1",
        f=ScalarData(fval, interface_flag=ifc, name="f"),
        g=ScalarData(gval, gradient=ggrad, hessian=ghess,
                     interface_flag=ifc, name="g"),
        exact_u=ScalarData(uval, gradient=ugrad, interface_flag=ifc, name="u"),
        exact_hess_u=uhess,
        exact_lambda=ScalarData(lamval, interface_flag=ifc, name="lambda"))


# -- plate, smooth elliptic obstacle on the small L-shape -------------------

def _plate_ellipse():
    ax2 = 0.2 ** 2
    ay2 = 0.35 ** 2

    def gval(p):
        x, y = p[:, 0], p[:, 1]
        return 1.0 - ((x + 0.25) ** 2 / ax2 + y ** 2 / ay2)

    def ggrad(p):
        x, y = p[:, 0], p[:, 1]
        return np.column_stack([-2 * (x + 0.25) / ax2, -2 * y / ay2])

    def ghess(p):
        H = np.zeros((len(p), 2, 2))
        H[:, 0, 0] = -2.0 / ax2
        H[:, 1, 1] = -2.0 / ay2
        return H

    return Example(
        "ellipse-lshape", "plate", "lshape_small",
        f=ScalarData(lambda p: np.zeros(len(p)), name="f"),
        g=ScalarData(gval, gradient=ggrad, hessian=ghess, name="g"))


# -- plate, non-smooth radial obstacle on the L-shaped domain ---------------

def _plate_nonsmooth():
    def _r2(p):
        return (p[:, 0] - 0.5) ** 2 + (p[:, 1] - 0.5) ** 2

    def gval(p):
        return 0.25 - _r2(p) ** 0.75

    def ggrad(p):
        r2 = np.maximum(_r2(p), 1e-300)
        c = -1.5 * r2 ** (-0.25)
        return c[:, None] * (p - 0.5)

    def ghess(p):
        d = p - 0.5
        r2 = np.maximum(_r2(p), 1e-300)
        H = np.zeros((len(p), 2, 2))
        a = -1.5 * r2 ** (-0.25)
        b = 0.75 * r2 ** (-1.25)
        H[:, 0, 0] = a + b * d[:, 0] ** 2
        H[:, 0, 1] = H[:, 1, 0] = b * d[:, 0] * d[:, 1]
        H[:, 1, 1] = a + b * d[:, 1] ** 2
        return H

    def iface(tri_coords):
        # derivative singularity at (1/2, 1/2)
        pts = np.vstack([tri_coords, tri_coords.mean(axis=0)])
        d = np.sqrt((pts[:, 0] - 0.5) ** 2 + (pts[:, 1] - 0.5) ** 2)
        diam = np.linalg.norm(tri_coords[1] - tri_coords[0])
        return bool(d.min() < max(diam, 1e-3))

    return Example(
        "nonsmooth-lshape", "plate", "lshape_paper",
        f=ScalarData(lambda p: np.zeros(len(p)), name="f"),
        g=ScalarData(gval, gradient=ggrad, hessian=ghess,
                     interface_flag=iface, name="g"))


_REGISTRY = {
    ("membrane", "smooth-square"): _membrane_smooth,
    ("membrane", "lshape-pyramid"): _membrane_lshape,
    ("plate", "smooth"): _plate_smooth,
    ("plate", "ellipse-lshape"): _plate_ellipse,
    ("plate", "nonsmooth-lshape"): _plate_nonsmooth,
}

# stable identifiers used programmatically
ALIASES = {
    "membrane_smooth": ("membrane", "smooth-square"),
    "membrane_lshape": ("membrane", "lshape-pyramid"),
    "plate_smooth": ("plate", "smooth"),
    "plate_ellipse_lshape": ("plate", "ellipse-lshape"),
    "plate_nonsmooth_lshape": ("plate", "nonsmooth-lshape"),
}


def example_names(kind):
    return sorted(n for k, n in _REGISTRY if k == kind)


def get_example(kind, name):
    try:
        return _REGISTRY[(kind, name)]()
    except KeyError:
        raise KeyError("unknown %s example %r; available: %s"
                       % (kind, name, ", ".join(example_names(kind))))


def get_example_by_id(ident):
    kind, name = ALIASES[ident]
    return get_example(kind, name)
