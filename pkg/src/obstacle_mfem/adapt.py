"""Bulk (Doerfler) marking and the solve-estimate-mark-refine loop."""

import numpy as np

from .mesh import refine_nvb, refine_uniform


def mark_bulk(indicator_squares, theta):
    """Minimal prefix of elements, sorted by decreasing squared indicator
    (ties broken by ascending element index), whose indicator mass reaches
    the fraction theta of the total."""
    ind = np.asarray(indicator_squares, dtype=float)
    if not (0.0 < theta <= 1.0):
        raise ValueError("theta must lie in (0, 1]")
    order = np.lexsort((np.arange(len(ind)), -ind))
    csum = np.cumsum(ind[order])
    total = csum[-1]
    if total <= 0.0:
        return np.array([order[0]], dtype=np.int64)
    k = int(np.searchsorted(csum, theta * total - 1e-14 * total)) + 1
    return np.sort(order[:min(k, len(ind))])


class ConvergenceRecord(dict):
    """Per-level convergence data (plain dict with attribute access)."""

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError as exc:
            raise AttributeError(key) from exc


def adaptive_loop(step, mesh, mode="adaptive", theta=0.5, levels=None,
                  max_elements=None):
    """Run the refinement loop.

    step(mesh) -> (record_dict, element_indicator_squares); the loop
    appends level/nelems to the record, refines (uniform or bulk-marked
    newest-vertex bisection) and stops after `levels` iterations or once
    the mesh exceeds `max_elements`.  On a step failure, the records
    gathered so far are attached to the raised exception as
    `partial_records`.
    """
    if mode not in ("uniform", "adaptive"):
        raise ValueError("mode must be 'uniform' or 'adaptive'")
    records = []
    level = 0
    while True:
        try:
            rec, ind2 = step(mesh)
        except Exception as exc:
            exc.partial_records = records
            raise
        rec = ConvergenceRecord(rec)
        rec.setdefault("level", level)
        rec.setdefault("nelems", mesh.num_triangles)
        records.append(rec)
        level += 1
        if levels is not None and level >= levels:
            break
        if max_elements is not None and mesh.num_triangles >= max_elements:
            break
        if mode == "uniform":
            mesh = refine_uniform(mesh)
        else:
            mesh = refine_nvb(mesh, mark_bulk(ind2, theta))
    return records
