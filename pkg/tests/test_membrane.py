import numpy as np
import pytest

from obstacle_mfem.data import ScalarData, constant
from obstacle_mfem.membrane import (BoundaryCompatibilityError,
                                    MembraneProblem, check_membrane_properties,
                                    membrane_errors, solve_membrane)
from obstacle_mfem.mesh import make_domain, refine_uniform
from obstacle_mfem.problems import get_example


def test_boundary_incompatible_obstacle_raises():
    m = make_domain("unit_square", 1)
    with pytest.raises(BoundaryCompatibilityError):
        MembraneProblem(m, constant(1.0), constant(0.5))


def test_structural_identities_smooth_example():
    ex = get_example("membrane", "smooth-square")
    m = ex.make_mesh(3)
    p = MembraneProblem(m, ex.f, ex.g)
    s = solve_membrane(p)
    props = check_membrane_properties(s, p)
    scale = max(1.0, np.abs(s.u.values).max(), np.abs(s.lam.values).max())
    assert props["balance"] <= 1e-9 * scale
    assert props["rt0_orthogonality"] <= 1e-9 * scale
    assert props["complementarity"] <= 1e-9 * scale
    assert props["feasibility_min"] >= -1e-10
    assert s.lam.values.min() >= -1e-10


def test_checker_detects_perturbation():
    ex = get_example("membrane", "smooth-square")
    m = ex.make_mesh(2)
    p = MembraneProblem(m, ex.f, ex.g)
    s = solve_membrane(p)
    clean = check_membrane_properties(s, p)
    s.sigma.coeffs[0] += 1e-3
    dirty = check_membrane_properties(s, p)
    assert dirty["balance"] > 100 * max(clean["balance"], 1e-9)
    assert dirty["rt0_orthogonality"] > 100 * max(
        clean["rt0_orthogonality"], 1e-9)


def test_inactive_obstacle_gives_zero_multiplier():
    m = refine_uniform(refine_uniform(make_domain("unit_square")))
    p = MembraneProblem(m, constant(1.0), constant(-100.0))
    s = solve_membrane(p)
    assert not s.active.any()
    assert np.abs(s.lam.values).max() < 1e-12
    # unconstrained Poisson with f = 1: u > 0 in the interior
    assert s.u.values.min() > 0.0


def test_errors_shrink_under_refinement():
    ex = get_example("membrane", "smooth-square")
    errs = []
    for lv in (2, 3, 4):
        m = ex.make_mesh(lv)
        p = MembraneProblem(m, ex.f, ex.g)
        s = solve_membrane(p)
        e = membrane_errors(s, p, ex.exact_u, ex.exact_grad_u)
        errs.append((e["err_u"], e["err_sigma"]))
    for k in (0, 1):
        assert errs[1][k] < 0.65 * errs[0][k]
        assert errs[2][k] < 0.65 * errs[1][k]


def test_multiplier_matches_exact_on_contact_region():
    # the active region of the discrete multiplier concentrates where the
    # exact multiplier is supported (left half of the square)
    ex = get_example("membrane", "smooth-square")
    m = ex.make_mesh(4)
    p = MembraneProblem(m, ex.f, ex.g)
    s = solve_membrane(p)
    centroids = m.vertices[m.triangles].mean(axis=1)
    act = np.nonzero(s.active)[0]
    assert len(act) > 0
    assert centroids[act, 0].max() < 0.5 + m.diameters.max()
