import numpy as np
import pytest

from obstacle_mfem.data import ScalarData, constant
from obstacle_mfem.estimate import estimate_membrane, estimate_plate
from obstacle_mfem.membrane import MembraneProblem, solve_membrane
from obstacle_mfem.mesh import make_domain, refine_uniform
from obstacle_mfem.plate import PlateProblem, solve_plate
from obstacle_mfem.problems import get_example


def test_membrane_oscillation_vanishes_for_constant_load():
    m = refine_uniform(refine_uniform(make_domain("unit_square")))
    p = MembraneProblem(m, constant(1.0), constant(-10.0))
    s = solve_membrane(p)
    rep = estimate_membrane(s, p)
    assert rep.totals["osc"] < 1e-12
    # no contact: both obstacle indicators vanish
    assert rep.totals["est_p"] < 1e-10
    assert rep.totals["est_c"] < 1e-12


def test_membrane_indicators_nonnegative_and_consistent():
    ex = get_example("membrane", "smooth-square")
    m = ex.make_mesh(3)
    p = MembraneProblem(m, ex.f, ex.g)
    s = solve_membrane(p)
    rep = estimate_membrane(s, p)
    for name, arr in rep.parts.items():
        assert arr.min() >= -1e-14, name
    total2 = sum(v.sum() for v in rep.parts.values())
    assert abs(rep.total - np.sqrt(total2)) < 1e-12
    assert np.abs(rep.element_squares
                  - sum(rep.parts.values())).max() < 1e-15


def test_membrane_estimator_decreases_under_refinement():
    ex = get_example("membrane", "smooth-square")
    totals = []
    for lv in (2, 3, 4):
        m = ex.make_mesh(lv)
        p = MembraneProblem(m, ex.f, ex.g)
        s = solve_membrane(p)
        totals.append(estimate_membrane(s, p).total)
    assert totals[1] < 0.65 * totals[0]
    assert totals[2] < 0.65 * totals[1]


def test_plate_oscillation_vanishes_for_affine_load():
    m = refine_uniform(make_domain("square_m1_1"))
    f = ScalarData(lambda p: 1.0 + p[:, 0] - 2 * p[:, 1])
    p = PlateProblem(m, f, constant(-100.0))
    s = solve_plate(p)
    rep = estimate_plate(s, p)
    assert rep.totals["osc"] < 1e-10
    assert rep.totals["est_p"] < 1e-8
    assert rep.totals["est_c"] < 1e-10
    assert rep.extras["lambda_h_omega"] < 1e-10


def test_plate_indicators_nonnegative_and_extras_present():
    ex = get_example("plate", "smooth")
    m = ex.make_mesh(2)
    p = PlateProblem(m, ex.f, ex.g)
    s = solve_plate(p)
    rep = estimate_plate(s, p)
    for name, arr in rep.parts.items():
        assert arr.min() >= -1e-12, name
    assert rep.extras["xi_inf"] >= 0.0
    assert rep.extras["lambda_h_omega"] >= -1e-12


def test_plate_estimator_decreases_under_refinement():
    ex = get_example("plate", "smooth")
    vals = []
    for lv in (2, 3, 4):
        m = ex.make_mesh(lv)
        p = PlateProblem(m, ex.f, ex.g)
        s = solve_plate(p)
        rep = estimate_plate(s, p)
        vals.append(rep.totals["est_r"])
    assert vals[1] < 0.8 * vals[0]
    assert vals[2] < 0.8 * vals[1]
