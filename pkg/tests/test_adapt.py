import numpy as np
import pytest

from obstacle_mfem.adapt import ConvergenceRecord, adaptive_loop, mark_bulk
from obstacle_mfem.mesh import make_domain


def test_theta_one_marks_all_nonzero():
    ind = np.array([0.0, 1.0, 2.0, 0.0, 3.0])
    marked = mark_bulk(ind, 1.0)
    assert set(marked) == {1, 2, 4}


def test_small_theta_marks_argmax():
    ind = np.array([0.5, 4.0, 1.0])
    assert list(mark_bulk(ind, 1e-12)) == [1]


def test_equal_indicators_mark_minimal_prefix():
    ind = np.ones(10)
    assert list(mark_bulk(ind, 0.5)) == list(range(5))
    assert list(mark_bulk(ind, 0.55)) == list(range(6))


def test_marking_reaches_requested_mass():
    rng = np.random.default_rng(0)
    for _ in range(20):
        ind = rng.random(50) ** 2
        theta = rng.uniform(0.1, 0.9)
        marked = mark_bulk(ind, theta)
        assert ind[marked].sum() >= theta * ind.sum() - 1e-12
        # minimality: dropping the smallest marked indicator breaks it
        smallest = marked[np.argmin(ind[marked])]
        rest = [i for i in marked if i != smallest]
        assert ind[rest].sum() < theta * ind.sum() + 1e-12


def test_invalid_theta_raises():
    with pytest.raises(ValueError):
        mark_bulk(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        mark_bulk(np.ones(3), 1.5)


def test_marking_deterministic():
    rng = np.random.default_rng(1)
    ind = rng.random(100)
    assert np.array_equal(mark_bulk(ind, 0.4), mark_bulk(ind.copy(), 0.4))


def test_record_attribute_access():
    r = ConvergenceRecord({"est": 1.5})
    assert r.est == 1.5
    with pytest.raises(AttributeError):
        r.missing


def _step(mesh):
    h2 = mesh.diameters ** 2
    return {"val": float(h2.sum())}, h2


def test_loop_levels_and_metadata():
    recs = adaptive_loop(_step, make_domain("unit_square"), "uniform",
                         levels=3)
    assert len(recs) == 3
    assert [r.level for r in recs] == [0, 1, 2]
    assert [r.nelems for r in recs] == [2, 8, 32]


def test_loop_adaptive_grows_and_stops_on_max_elements():
    recs = adaptive_loop(_step, make_domain("lshape_paper"), "adaptive",
                         theta=0.5, max_elements=100)
    assert recs[-2].nelems < 100 <= 4 * recs[-1].nelems
    nel = [r.nelems for r in recs]
    assert all(b > a for a, b in zip(nel, nel[1:]))


def test_loop_invalid_mode():
    with pytest.raises(ValueError):
        adaptive_loop(_step, make_domain("unit_square"), "both", levels=1)


def test_loop_attaches_partial_records_on_failure():
    calls = []

    def failing(mesh):
        if len(calls) >= 2:
            raise RuntimeError("boom")
        calls.append(1)
        h2 = mesh.diameters ** 2
        return {"val": 1.0}, h2

    with pytest.raises(RuntimeError) as info:
        adaptive_loop(failing, make_domain("unit_square"), "uniform",
                      levels=5)
    assert len(info.value.partial_records) == 2
