import numpy as np
import pytest

from qcqpdual.errors import DimensionTooLarge, InfeasibleEverywhere, NoCompactConstraint
from qcqpdual.instance import constraint_values, is_feasible, make_instance
from qcqpdual.oracle import (
    count_distinct_minimizers,
    global_min_brute,
    kkt_residual,
    sample_feasible,
    search_box,
)

from conftest import EX3_PRIMAL_OPT, random_convex_instance


def test_search_box(ex2, ex3):
    lo, hi = search_box(ex2)
    # x^2/2 + x <= 0  <=>  x in [-2, 0]
    assert lo[0] < -2.0 < 0.0 < hi[0]
    assert hi[0] - lo[0] == pytest.approx(2.0 * 1.01)
    lo, hi = search_box(ex3)
    assert np.allclose(hi, -lo) and hi[0] == pytest.approx(np.sqrt(26) * 1.01)


def test_no_compact_constraint():
    inst = make_instance(1.0, 1.0, [(-1.0, 0.0, 1.0)])
    with pytest.raises(NoCompactConstraint):
        global_min_brute(inst)
    res = global_min_brute(inst, box=([-3.0], [3.0]))
    # -x^2/2 <= 1 holds everywhere, so the unconstrained minimum x = 1 is found
    assert res.best_value == pytest.approx(-0.5, abs=1e-12)
    assert res.minimizers[0] == pytest.approx([1.0], abs=1e-8)


def test_dimension_too_large():
    inst = make_instance(np.eye(5), np.ones(5), [(np.eye(5), np.zeros(5), 1.0)])
    with pytest.raises(DimensionTooLarge):
        global_min_brute(inst)


def test_grid_too_small(ex2):
    with pytest.raises(ValueError):
        global_min_brute(ex2, grid_points_per_axis=10)


def test_infeasible_everywhere():
    inst = make_instance(1.0, 1.0, [(1.0, 0.0, 1e-14)])
    with pytest.raises(InfeasibleEverywhere):
        global_min_brute(inst, grid_points_per_axis=64, box=([0.3], [1.0]))


def test_example1(ex1):
    res = global_min_brute(ex1)
    assert res.best_value == pytest.approx(0.0, abs=1e-8)
    assert res.count == 2
    xs = sorted(float(x[0]) for x in res.minimizers)
    assert xs == pytest.approx([0.0, 2.0], abs=1e-6)
    assert count_distinct_minimizers(ex1) == 2


def test_example2(ex2):
    res = global_min_brute(ex2)
    assert res.best_value == pytest.approx(-2.0, abs=1e-8)
    assert res.count == 1 and res.minimizers[0] == pytest.approx([-2.0], abs=1e-6)


def test_example3(ex3):
    res = global_min_brute(ex3)
    assert res.best_value == pytest.approx(EX3_PRIMAL_OPT, abs=1e-8)
    assert res.count == 1
    x = res.minimizers[0]
    assert abs(constraint_values(ex3, x).max) <= 1e-9
    lam, resid, _ = kkt_residual(ex3, x)
    assert resid <= 1e-8 and lam[0] > 0


def test_grid_refinement_consistent(ex3):
    coarse = global_min_brute(ex3, grid_points_per_axis=513)
    fine = global_min_brute(ex3, grid_points_per_axis=1025)
    assert coarse.best_value == pytest.approx(fine.best_value, abs=1e-8)


def test_minimizers_feasible_and_kkt():
    rng = np.random.default_rng(21)
    for k in range(6):
        inst = random_convex_instance(rng, 1 + k % 3, 1 + k % 2)
        res = global_min_brute(inst)
        for x in res.minimizers:
            assert is_feasible(inst, x, 1e-9)
            assert kkt_residual(inst, x)[1] <= 1e-6


def test_sample_feasible(ex3):
    rng = np.random.default_rng(0)
    xs = sample_feasible(ex3, 200, rng)
    assert xs.shape == (200, 2)
    assert np.all(0.5 * 4 * np.sum(xs**2, axis=1) <= 52.0)
