"""Primal-dual active-set solver for complementarity saddle systems.

The discrete problems reduce to: find x with

    E x = b                       (equality block, any active set)
    lambda_i >= 0, r_i(x) >= 0, lambda_i r_i(x) = 0   for i = 1..m

where lambda_i = x[lambda_idx[i]] and r_i(x) = (R x)_i - shift_i.  The
active-set iteration guesses the contact set A, solves the square system
with rows r_i = 0 (i in A) and lambda_i = 0 (i not in A), and updates
A <- { i : lambda_i - c r_i > 0 }.  Ties are declared inactive.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linsys import factor_solve, SingularSystem


class NoConvergence(Exception):
    pass


@dataclass
class ComplementaritySystem:
    eq_matrix: sp.spmatrix          # (n_eq, n)
    eq_rhs: np.ndarray              # (n_eq,)
    lambda_idx: np.ndarray          # (m,) column indices of the multipliers
    r_matrix: sp.spmatrix           # (m, n)
    r_shift: np.ndarray             # (m,)
    pair_elements: np.ndarray = None  # (m,) owning triangle of each pair
    scale: float = 1.0              # magnitude reference for tolerances
    col_scale: np.ndarray = None    # (n,) expected magnitude of each unknown

    @property
    def num_unknowns(self):
        return self.eq_matrix.shape[1]

    @property
    def num_pairs(self):
        return len(self.lambda_idx)

    def residuals(self, x):
        lam = x[self.lambda_idx]
        r = self.r_matrix @ x - self.r_shift
        return lam, r


@dataclass
class PdasConfig:
    c: float = 1.0
    max_iterations: int = 1000
    residual_tol: float = 1e-10
    verbose: bool = False


@dataclass
class PdasResult:
    x: np.ndarray
    lam: np.ndarray
    r: np.ndarray
    active: np.ndarray   # bool mask over pairs
    iterations: int
    trace: list = field(default_factory=list)


def _solve_for_active(sys, active, cfg):
    n = sys.num_unknowns
    m = sys.num_pairs
    R = sp.csr_matrix(sys.r_matrix)
    act = np.nonzero(active)[0]
    inact = np.nonzero(~active)[0]
    sel = sp.csr_matrix((np.ones(len(act)), (act, act)), shape=(m, m))
    comp = sel @ R
    comp = comp + sp.csr_matrix(
        (np.ones(len(inact)), (inact, sys.lambda_idx[inact])), shape=(m, n))
    comp_rhs = np.where(active, sys.r_shift, 0.0)
    A = sp.vstack([sys.eq_matrix, comp], format="csc")
    b = np.concatenate([sys.eq_rhs, comp_rhs])
    if sys.col_scale is None:
        return factor_solve(A, b, residual_tol=cfg.residual_tol, label="pdas")
    # solve in variables of comparable magnitude: unknowns whose expected
    # size spans many orders (multiplier densities on strongly graded
    # meshes) otherwise lose all absolute accuracy in the small components
    d = sys.col_scale
    y = factor_solve(A @ sp.diags(d), b, residual_tol=cfg.residual_tol,
                     label="pdas")
    return d * y


def solve_pdas(sys, cfg=None):
    """Run the primal-dual active-set iteration from the empty active set."""
    if cfg is None:
        cfg = PdasConfig()
    if cfg.c <= 0 or cfg.max_iterations < 1:
        raise ValueError("invalid PdasConfig")
    m = sys.num_pairs
    active = np.zeros(m, dtype=bool)
    history = [active.tobytes()]
    trace = []
    c = cfg.c
    single_index = False
    absR = abs(sp.csr_matrix(sys.r_matrix))
    for k in range(cfg.max_iterations):
        x = _solve_for_active(sys, active, cfg)
        lam, r = sys.residuals(x)
        # per-pair activation threshold at the round-off level of the
        # computed constraint residuals; a strict zero test chatters on
        # noise-level violations
        noise = absR @ np.abs(x) + np.abs(sys.r_shift)
        nxt = (lam - c * r) > 1e-10 * c * noise
        trace.append((k, int(active.sum()), float(np.abs(lam * r).max(initial=0.0))))
        if cfg.verbose:
            print("pdas iter %d |A|=%d comp=%.3e" % trace[-1])
        if np.array_equal(nxt, active):
            return PdasResult(x=x, lam=lam, r=r, active=active,
                              iterations=k + 1, trace=trace)
        if single_index:
            flip = int(np.nonzero(nxt != active)[0][0])
            active = active.copy()
            active[flip] = not active[flip]
            continue
        key = nxt.tobytes()
        if key in history:
            # a revisited active set would repeat forever; near-degenerate
            # pairs can chatter in groups under the simultaneous update.
            # Fall back to flipping one pair per solve, lowest index first
            # (least-index rule), which cannot cycle on definite problems
            single_index = True
            continue
        history.append(key)
        active = nxt
    raise NoConvergence("max_iterations (%d) reached" % cfg.max_iterations)
