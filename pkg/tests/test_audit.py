import math

import numpy as np
import pytest

from qcqpdual.audit import (
    FALSIFIED,
    HYPOTHESIS_FAILED,
    VERIFIED,
    audit_theorem1,
    audit_theorem2,
    audit_uniqueness_remark,
    check_c1,
    check_c2,
    full_audit,
    psd_sqrt,
    report_to_json,
)
from qcqpdual.instance import make_instance

from conftest import EX3_PRIMAL_OPT, EX3_SIGMA2, random_convex_instance

SQRT7 = math.sqrt(7.0)
SQRT26 = math.sqrt(26.0)


def _scaled_f(inst, t):
    return make_instance(inst.A, t * inst.f, [(c.Q, c.b, c.c) for c in inst.constraints])


def _convex_active():
    # x(sigma) = f / (1 + sigma) is feasible iff sigma >= 9; optimum x = (1, 0)
    return make_instance(np.eye(2), [10.0, 0.0], [(np.eye(2), [0.0, 0.0], 0.5)])


def test_c1_examples(ex2, ex3):
    res = check_c1(ex3)
    assert res.holds and res.min_eigenvalue == pytest.approx(3.0, abs=1e-12)
    singular = make_instance(np.diag([1.0, -1.0]), [1.0, 1.0], [(np.eye(2), [0.0, 0.0], 1.0)])
    assert not check_c1(singular).holds
    res = check_c1(ex2)
    assert not res.holds and res.min_eigenvalue == pytest.approx(-1.0)


def test_c2_examples(ex3):
    res = check_c2(ex3)
    assert not res.ill_posed and res.holds
    (rec,) = res.records
    assert rec.q_pd and rec.a_plus_q_pd
    assert rec.lhs == pytest.approx(4 * SQRT7, abs=1e-10)
    assert rec.rhs == pytest.approx(2 * SQRT26, abs=1e-10)
    assert rec.eq24_holds and rec.margin == pytest.approx(4 * SQRT7 - 2 * SQRT26, abs=1e-10)

    rec = check_c2(_scaled_f(ex3, 0.1)).records[0]
    assert rec.lhs == pytest.approx(0.4 * SQRT7, rel=1e-12)
    assert not rec.eq24_holds

    zero_rhs = make_instance(np.eye(2), [0.3, -0.2], [(np.diag([2.0, 5.0]), [0.0, 0.0], 0.0)])
    rec = check_c2(zero_rhs).records[0]
    assert rec.rhs == 0.0 and rec.eq24_holds


def test_c2_ill_posed(ex1):
    inst = make_instance(np.diag([1.0, 0.0]), [1.0, 1.0], [(np.eye(2), [0.0, 0.0], 1.0)])
    res = check_c2(inst)
    assert res.ill_posed and not res.holds
    assert audit_theorem2(inst).verdict == HYPOTHESIS_FAILED


@pytest.mark.parametrize("t", [-3.0, -0.5, 0.25, 2.0, 17.0])
def test_c2_lhs_scales_with_f(ex3, t):
    base = check_c2(ex3).records[0]
    rec = check_c2(_scaled_f(ex3, t)).records[0]
    assert rec.lhs == pytest.approx(abs(t) * base.lhs, rel=1e-12)
    assert rec.rhs == base.rhs


def test_psd_sqrt():
    rng = np.random.default_rng(4)
    for n in (1, 2, 3, 4):
        for _ in range(10):
            M = rng.normal(size=(n, n))
            Q = M @ M.T + 0.1 * np.eye(n)
            D, Dinv = psd_sqrt(Q)
            assert np.allclose(D, D.T, atol=1e-12)
            assert np.linalg.norm(D @ D - Q) <= 1e-10 * np.linalg.norm(Q)
            assert np.linalg.norm(D @ Dinv - np.eye(n)) <= 1e-8
    assert np.allclose(psd_sqrt(4 * np.eye(2))[0], 2 * np.eye(2))


def test_theorem1_example2(ex2):
    v = audit_theorem1(ex2)
    assert v.verdict == FALSIFIED
    assert v.sigma_bar == pytest.approx([0.0], abs=1e-12)
    assert v.x_bar == pytest.approx([-0.5], abs=1e-12)
    assert v.value_agreement and abs(v.primal_value - v.dual_value) <= 1e-12
    assert v.oracle_best == pytest.approx(-2.0, abs=1e-8)
    assert v.gap == pytest.approx(2.25, abs=1e-6)


def test_theorem1_example3(ex3):
    v = audit_theorem1(ex3)
    assert v.verdict == FALSIFIED
    assert v.sigma_bar[0] == pytest.approx(EX3_SIGMA2, abs=1e-11)
    assert v.value_agreement
    assert v.oracle_best == pytest.approx(EX3_PRIMAL_OPT, abs=1e-8)
    assert v.gap > 10 * 1e-7


def test_theorem1_convex_interior():
    inst = make_instance(np.diag([2.0, 1.0]), [0.2, 0.1], [(np.eye(2), [0.0, 0.0], 5.0)])
    v = audit_theorem1(inst)
    assert v.verdict == VERIFIED
    assert v.sigma_bar == [0.0]
    assert v.x_bar == pytest.approx([0.1, 0.1], abs=1e-14)


def test_theorem1_empty_Y():
    inst = make_instance(1.0, 1.0, [(1.0, 0.0, -1.0)])
    assert audit_theorem1(inst).verdict == HYPOTHESIS_FAILED


def test_theorem2_examples(ex2, ex3):
    v = audit_theorem2(ex3)
    assert v.verdict == FALSIFIED and v.reason == "no_maximizer_in_S_plus"
    assert v.in_S_plus == [False]
    assert audit_theorem2(ex2).verdict == HYPOTHESIS_FAILED

    v = audit_theorem2(_convex_active())
    assert v.verdict == VERIFIED
    assert v.maximizers[0] == pytest.approx([9.0], abs=1e-9)
    assert v.in_S_plus == [True]
    t1 = audit_theorem1(_convex_active())
    assert t1.verdict == VERIFIED and t1.x_bar == pytest.approx([1.0, 0.0], abs=1e-9)


def test_theorem2_gating(random_corpus):
    for inst in random_corpus[:60]:
        c1, c2 = check_c1(inst), check_c2(inst)
        v = audit_theorem2(inst, starts=8, c1=c1, c2=c2)
        if not (c1.holds and c2.holds):
            assert v.verdict == HYPOTHESIS_FAILED


def test_uniqueness(ex1, ex2):
    v = audit_uniqueness_remark(ex1)
    assert v.verdict == "counterexample"
    assert sorted(x[0] for x in v.minimizers) == pytest.approx([0.0, 2.0], abs=1e-6)
    assert audit_uniqueness_remark(ex2).verdict == "consistent"
    assert audit_uniqueness_remark(_convex_active()).verdict == "consistent"
    zero_f = make_instance(1.0, 0.0, [(1.0, 0.0, 1.0)])
    assert audit_uniqueness_remark(zero_f).verdict == HYPOTHESIS_FAILED


def test_full_audit_examples(ex1, ex2, ex3):
    r1 = full_audit(ex1)
    assert r1.uniqueness.verdict == "counterexample"
    assert r1.theorem1.verdict == FALSIFIED and r1.theorem1.gap == pytest.approx(1.0, abs=1e-6)
    r2 = full_audit(ex2)
    assert r2.theorem1.verdict == FALSIFIED
    r3 = full_audit(ex3)
    assert r3.c1.holds and r3.c2.records[0].eq24_holds
    assert r3.theorem2.verdict == FALSIFIED
    assert r3.slater["status"] == "strict"


def test_report_json_deterministic(ex3):
    a = report_to_json(full_audit(ex3, seed=7))
    b = report_to_json(full_audit(ex3, seed=7))
    assert a == b
    assert a.startswith('{\n  "report_version": "1"')


def test_convex_regime_never_falsified():
    rng = np.random.default_rng(8)
    for k in range(6):
        inst = random_convex_instance(rng, 1 + k % 3, 1)
        assert audit_theorem1(inst).verdict == VERIFIED
        assert audit_theorem2(inst).verdict in (VERIFIED, HYPOTHESIS_FAILED)
