import csv
import math

import numpy as np
import pytest

from qcqpdual.dual import classify
from qcqpdual.errors import MNotOne
from qcqpdual.instance import make_instance
from qcqpdual.regions import (
    INF,
    Interval,
    IntervalUnion,
    evaluate_many,
    phi_value,
    psi_roots,
    psi_value,
    s_regions,
    singularities,
    variation_table,
    write_curve_csv,
    y_regions,
)

from conftest import EX3_PHI_SIGMA2, EX3_SIGMA2, EX3_SIGMA3, EX3_SIGMA4, ex3_psi


def test_interval_union_merging():
    u = IntervalUnion([Interval(1, True, 2, False), Interval(0, True, 1, False), Interval(3, False, 4, True)])
    assert str(u) == "[0, 2) U (3, 4]"
    assert 1.0 in u and 3.0 not in u and 4.0 in u
    assert str(IntervalUnion([Interval(0, True, 1, False), Interval(1, False, 2, True)])) == "[0, 1) U (1, 2]"
    assert not IntervalUnion([Interval(1, False, 1, False)])
    assert u.endpoints() == [0, 2, 3, 4]


def test_singularities(ex1, ex2, ex3):
    assert singularities(ex1) == pytest.approx([1.0], abs=1e-12)
    assert singularities(ex2) == pytest.approx([2.0], abs=1e-12)
    assert singularities(ex3) == pytest.approx([0.25], abs=1e-12)
    no_sing = make_instance(1.0, 1.0, [(1.0, 0.0, 1.0)])
    assert singularities(no_sing) == []


def test_m_not_one():
    inst = make_instance(np.eye(2), [1.0, 0.0], [(np.eye(2), [0.0, 0.0], 1.0), (np.eye(2), [1.0, 0.0], 1.0)])
    for fn in (singularities, s_regions, psi_roots, y_regions, variation_table):
        with pytest.raises(MNotOne):
            fn(inst)


def test_s_regions(ex1, ex2, ex3):
    S, S_plus = s_regions(ex3)
    assert str(S) == "[0, 0.25) U (0.25, inf)"
    assert str(S_plus) == "(0.25, inf)"
    S, S_plus = s_regions(ex2)
    assert str(S) == "[0, 2) U (2, inf)"
    assert str(S_plus) == "(2, inf)"
    S, S_plus = s_regions(ex1)
    assert str(S) == "[0, 1) U (1, inf)"
    assert str(S_plus) == "(1, inf)"


def test_psi_roots_example3(ex3):
    roots = psi_roots(ex3)
    assert roots == pytest.approx([EX3_SIGMA2, EX3_SIGMA3, EX3_SIGMA4], abs=1e-11)
    for r in roots:
        assert abs(ex3_psi(r)) <= 1e-8


def test_psi_roots_stable_under_doubling(ex2, ex3):
    for inst in (ex2, ex3):
        assert psi_roots(inst, samples=8192) == pytest.approx(psi_roots(inst), abs=1e-11)


def test_psi_roots_example2(ex2):
    assert psi_roots(ex2) == pytest.approx([0.0, 1.0, 3.0], abs=1e-9) or psi_roots(ex2) == pytest.approx(
        [1.0, 3.0], abs=1e-9
    )


def test_y_regions_examples(ex1, ex2, ex3):
    assert str(y_regions(ex1)) == "[0, 1) U (1, inf)"
    Y2 = y_regions(ex2)
    assert len(Y2) == 2
    (a, b) = Y2
    assert (a.lo, a.lo_closed, a.hi_closed) == (0.0, True, True)
    assert a.hi == pytest.approx(1.0, abs=1e-9)
    assert b.lo == pytest.approx(3.0, abs=1e-9) and b.lo_closed and b.hi == INF
    Y3 = y_regions(ex3)
    assert len(Y3) == 2
    assert Y3.intervals[0].lo == pytest.approx(EX3_SIGMA2, abs=1e-11)
    assert Y3.intervals[0].hi == pytest.approx(EX3_SIGMA3, abs=1e-11)
    assert Y3.intervals[1].lo == pytest.approx(EX3_SIGMA4, abs=1e-11)


@pytest.mark.parametrize("which", [2, 3])
def test_y_regions_agree_with_classify(which, ex2, ex3):
    inst = ex2 if which == 2 else ex3
    Y = y_regions(inst)
    ends = Y.endpoints()
    rng = np.random.default_rng(which)
    samples = np.concatenate([rng.uniform(0, 1, 5000), np.exp(rng.uniform(-8, 6, 5000))])
    for s in samples:
        if any(abs(s - e) < 1e-7 for e in ends):
            continue
        p = classify(inst, [s])
        if not p.in_S:
            continue
        assert (s in Y) == p.in_Y, s


def test_sign_pattern_example3(ex3):
    table = variation_table(ex3)
    assert table.sign_of_psi == [1, -1, 1, 1, -1]
    assert table.singular == pytest.approx([0.25])
    s2 = table.breakpoints[0]
    assert s2 == pytest.approx(EX3_SIGMA2, abs=1e-11)
    assert table.phi_values[s2] == pytest.approx(EX3_PHI_SIGMA2, abs=1e-10)
    assert table.phi_values[0.0] == pytest.approx(-13.0, abs=1e-12)
    lim = table.limits
    assert lim["psi_at_infinity_analytic"] == pytest.approx(-52.0, abs=1e-12)
    assert abs(lim["psi_at_infinity"] + 52.0) <= 1e-3
    assert lim["phi_at_infinity"] == -INF
    sing = lim["singularities"][0]
    # phi ~ -1/(2(4 sigma - 1)) and psi ~ 2/(4 sigma - 1)^2 near the puncture
    assert sing["phi_left"] == INF and sing["phi_right"] == -INF
    assert sing["psi_left"] == INF and sing["psi_right"] == INF
    assert any(row.startswith("sigma=0.25: |") for row in table.rows())


def test_removable_singularity_example1(ex1):
    sing = variation_table(ex1).limits["singularities"][0]
    assert sing["phi_left"] == pytest.approx(0.0, abs=1e-5)
    assert sing["phi_right"] == pytest.approx(0.0, abs=1e-5)
    assert phi_value(ex1, 3.0) == pytest.approx(-2.0, abs=1e-12)
    assert psi_value(ex1, 0.5) == pytest.approx(-1.0, abs=1e-12)


def test_evaluate_many(ex3):
    phi, psi, _ = evaluate_many(ex3, [-1.0, 0.0, 0.125, 0.25])
    assert phi[0] == -INF
    assert phi[1] == pytest.approx(-13.0) and psi[2] == pytest.approx(-20.0)
    assert math.isnan(phi[3]) and math.isnan(psi[3])


def test_curve_csv(tmp_path, ex3):
    path = tmp_path / "curve.csv"
    n = write_curve_csv(ex3, np.linspace(0.0, 0.5, 5), path)
    assert n == 5
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["sigma", "phi", "psi"]
    assert float(rows[1][1]) == pytest.approx(-13.0)
    assert rows[3][0] == "0.25" and rows[3][1] == "nan" and rows[3][2] == "nan"
