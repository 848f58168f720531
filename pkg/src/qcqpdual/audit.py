"""Hypothesis checks and conclusion tests for the two duality theorems.

Theorem 1 claims that a maximizer of P^d over Y yields a global primal
minimizer x = G^{-1} F with P(x) = P^d(sigma). Theorem 2 claims that, under
C1 (A + sum Q_i > 0) and C2 (some Q_k > 0 with A + Q_k > 0 and
||D_k A^{-1} f|| > ||D_k^{-1} b_k|| + sqrt(||D_k^{-1} b_k||^2 + 2|c_k|), D_k = Q_k^{1/2}),
the maximizer over Y is unique, nonzero and lies in S_plus.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import oracle as _oracle
from .dual import classify, dual_value, recover_x
from .errors import DimensionTooLarge, EmptyY, InfeasibleEverywhere, NoCompactConstraint, QCQPDualError
from .instance import ProblemInstance, is_positive_definite, objective_value, slater_check, validate
from .solver import maximize_over_Y

REPORT_VERSION = "1"
AGREEMENT_TOL = 1e-6
OPTIMALITY_TOL = 1e-6
NONZERO_TOL = 1e-9
SINGULAR_RATIO = 1e-10

VERIFIED = "verified"
FALSIFIED = "falsified"
HYPOTHESIS_FAILED = "hypothesis_failed"
INCONCLUSIVE = "inconclusive"


@dataclass
class C1Result:
    holds: bool
    min_eigenvalue: float


@dataclass
class C2Record:
    k: int
    q_pd: bool
    a_plus_q_pd: bool
    lhs: float | None
    rhs: float | None
    margin: float | None
    eq24_holds: bool

    @property
    def holds(self) -> bool:
        return self.q_pd and self.a_plus_q_pd and self.eq24_holds


@dataclass
class C2Result:
    ill_posed: bool
    records: list[C2Record]

    @property
    def holds(self) -> bool:
        return not self.ill_posed and any(r.holds for r in self.records)


@dataclass
class Theorem1Verdict:
    verdict: str
    reason: str = ""
    sigma_bar: list | None = None
    x_bar: list | None = None
    primal_value: float | None = None
    dual_value: float | None = None
    value_agreement: bool | None = None
    oracle_best: float | None = None
    oracle_minimizers: list | None = None
    gap: float | None = None
    solver_method: str | None = None


@dataclass
class Theorem2Verdict:
    verdict: str
    reason: str = ""
    maximizers: list = field(default_factory=list)
    in_S_plus: list = field(default_factory=list)
    solver_method: str | None = None


@dataclass
class UniquenessVerdict:
    verdict: str
    minimizers: list = field(default_factory=list)
    reason: str = ""


@dataclass
class AuditReport:
    report_version: str
    n: int
    m: int
    violations: list[str]
    slater: dict
    c1: C1Result
    c2: C2Result
    theorem1: Theorem1Verdict
    theorem2: Theorem2Verdict
    uniqueness: UniquenessVerdict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c2"]["holds"] = self.c2.holds
        return _plain(d)

    def verdicts(self):
        return {
            "theorem1": self.theorem1.verdict,
            "theorem2": self.theorem2.verdict,
            "uniqueness": self.uniqueness.verdict,
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# -- hypotheses -----------------------------------------------------------------


def check_c1(inst: ProblemInstance) -> C1Result:
    M = inst.A + inst.Qs.sum(axis=0)
    w = np.linalg.eigvalsh(M)
    return C1Result(holds=bool(w[0] > 1e-10 * (1.0 + np.max(np.abs(w)))), min_eigenvalue=float(w[0]))


def psd_sqrt(Q):
    """Symmetric positive definite square root and its inverse by spectral decomposition."""
    w, V = np.linalg.eigh(Q)
    r = np.sqrt(w)
    return (V * r) @ V.T, (V / r) @ V.T


def check_c2(inst: ProblemInstance) -> C2Result:
    wA = np.abs(np.linalg.eigvalsh(inst.A))
    ill_posed = bool(np.max(wA) == 0 or np.min(wA) <= SINGULAR_RATIO * np.max(wA))
    Ainv_f = None if ill_posed else np.linalg.solve(inst.A, inst.f)
    records = []
    for k, con in enumerate(inst.constraints, start=1):
        q_pd = is_positive_definite(con.Q)
        a_plus_q_pd = is_positive_definite(inst.A + con.Q)
        lhs = rhs = margin = None
        holds = False
        if q_pd and Ainv_f is not None:
            D, Dinv = psd_sqrt(con.Q)
            lhs = float(np.linalg.norm(D @ Ainv_f))
            nb = float(np.linalg.norm(Dinv @ con.b))
            rhs = nb + math.sqrt(nb * nb + 2.0 * abs(con.c))
            margin = lhs - rhs
            holds = lhs > rhs
        records.append(C2Record(k, q_pd, a_plus_q_pd, lhs, rhs, margin, holds))
    return C2Result(ill_posed, records)


def _slater_dict(inst, seed):
    res = slater_check(inst, seed=seed)
    if res.found:
        return {"status": "strict", "x0": res.x.tolist(), "margin": res.margin}
    return {"status": "inconclusive", "best_margin": res.best_margin, "attempts": res.attempts}


# -- conclusions ------------------------------------------------------------------


def _run_oracle(inst, grid):
    try:
        return _oracle.global_min_brute(inst, grid), ""
    except (NoCompactConstraint, DimensionTooLarge, InfeasibleEverywhere) as exc:
        return None, f"oracle unavailable: {exc}"


def audit_theorem1(inst: ProblemInstance, seed: int = 0, starts: int = 32, oracle_grid=None, oracle_result=None):
    """Solve max P^d over Y, recover x and compare with the brute-force optimum."""
    try:
        sol = maximize_over_Y(inst, starts=starts, seed=seed)
    except EmptyY:
        return Theorem1Verdict(HYPOTHESIS_FAILED, reason="Y is empty")
    if not sol.attained:
        return Theorem1Verdict(
            HYPOTHESIS_FAILED,
            reason=f"dual problem has no solution (supremum {sol.sup_estimate:.17g} not attained)",
            solver_method=sol.method,
        )
    if oracle_result is None:
        oracle_result, why = _run_oracle(inst, oracle_grid)
    else:
        why = ""

    worst = None
    for sigma, _ in sol.maximizers:
        x = recover_x(inst, sigma)
        p = objective_value(inst, x)
        d = dual_value(inst, sigma)
        rec = Theorem1Verdict(
            verdict=INCONCLUSIVE,
            sigma_bar=sigma.tolist(),
            x_bar=x.tolist(),
            primal_value=p,
            dual_value=d,
            value_agreement=bool(abs(p - d) <= AGREEMENT_TOL),
            solver_method=sol.method,
        )
        if oracle_result is None:
            rec.reason = why
        else:
            rec.oracle_best = oracle_result.best_value
            rec.oracle_minimizers = [m.tolist() for m in oracle_result.minimizers]
            rec.gap = p - oracle_result.best_value
            optimal = p <= oracle_result.best_value + OPTIMALITY_TOL
            if rec.value_agreement and optimal:
                rec.verdict = VERIFIED
            else:
                rec.verdict = FALSIFIED
                rec.reason = "value disagreement" if not rec.value_agreement else "recovered x is not a global minimizer"
        rank = {FALSIFIED: 2, INCONCLUSIVE: 1, VERIFIED: 0}[rec.verdict]
        if worst is None or rank > worst[0] or (rank == worst[0] and (rec.gap or 0) > (worst[1].gap or 0)):
            worst = (rank, rec)
    return worst[1]


def audit_theorem2(inst: ProblemInstance, seed: int = 0, starts: int = 32, c1=None, c2=None):
    """Gate on C1 and C2, then test uniqueness, nonzeroness and S_plus membership."""
    c1 = check_c1(inst) if c1 is None else c1
    c2 = check_c2(inst) if c2 is None else c2
    if not c1.holds:
        return Theorem2Verdict(HYPOTHESIS_FAILED, reason="C1 fails")
    if c2.ill_posed:
        return Theorem2Verdict(HYPOTHESIS_FAILED, reason="A is singular, C2 is ill-posed")
    if not c2.holds:
        return Theorem2Verdict(HYPOTHESIS_FAILED, reason="C2 fails")
    try:
        sol = maximize_over_Y(inst, starts=starts, seed=seed)
    except EmptyY:
        return Theorem2Verdict(FALSIFIED, reason="no_maximizer_in_S_plus")
    if not sol.attained:
        return Theorem2Verdict(FALSIFIED, reason="no_maximizer_in_S_plus", solver_method=sol.method)
    maxs = [s.tolist() for s, _ in sol.maximizers]
    flags = [classify(inst, s).in_S_plus for s, _ in sol.maximizers]
    out = Theorem2Verdict(VERIFIED, maximizers=maxs, in_S_plus=flags, solver_method=sol.method)
    if not any(flags):
        out.verdict, out.reason = FALSIFIED, "no_maximizer_in_S_plus"
    elif len(maxs) > 1:
        out.verdict, out.reason = FALSIFIED, "multiple_maximizers"
    elif np.max(np.abs(sol.maximizers[0][0])) <= NONZERO_TOL:
        out.verdict, out.reason = FALSIFIED, "zero_maximizer"
    return out


def audit_uniqueness_remark(inst: ProblemInstance, oracle_grid=None, oracle_result=None):
    """Does f != 0 make the global minimizer unique? Counterexample iff >= 2 clusters."""
    if not np.linalg.norm(inst.f) > 0:
        return UniquenessVerdict(HYPOTHESIS_FAILED, reason="f is zero")
    if oracle_result is None:
        oracle_result, why = _run_oracle(inst, oracle_grid)
        if oracle_result is None:
            return UniquenessVerdict(INCONCLUSIVE, reason=why)
    mins = [m.tolist() for m in oracle_result.minimizers]
    if len(mins) >= 2:
        return UniquenessVerdict("counterexample", mins)
    return UniquenessVerdict("consistent", mins)


def full_audit(inst: ProblemInstance, seed: int = 0, starts: int = 32, oracle_grid=None) -> AuditReport:
    """Run every check; failures become verdict states, never exceptions."""
    c1 = check_c1(inst)
    c2 = check_c2(inst)
    oracle_result, _ = _run_oracle(inst, oracle_grid)
    try:
        t1 = audit_theorem1(inst, seed, starts, oracle_grid, oracle_result)
    except QCQPDualError as exc:
        t1 = Theorem1Verdict(INCONCLUSIVE, reason=str(exc))
    try:
        t2 = audit_theorem2(inst, seed, starts, c1, c2)
    except QCQPDualError as exc:
        t2 = Theorem2Verdict(INCONCLUSIVE, reason=str(exc))
    uq = audit_uniqueness_remark(inst, oracle_grid, oracle_result)
    return AuditReport(
        report_version=REPORT_VERSION,
        n=inst.n,
        m=inst.m,
        violations=validate(inst),
        slater=_slater_dict(inst, seed),
        c1=c1,
        c2=c2,
        theorem1=t1,
        theorem2=t2,
        uniqueness=uq,
    )


# -- serialization -------------------------------------------------------------------


def _json_value(v, level):
    pad = "  " * (level + 1)
    end = "  " * level
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return '"nan"'
        if math.isinf(v):
            return '"inf"' if v > 0 else '"-inf"'
        return format(v, ".17g")
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, list):
        if not v:
            return "[]"
        if all(not isinstance(x, (list, dict)) for x in v):
            return "[" + ", ".join(_json_value(x, level) for x in v) + "]"
        return "[\n" + ",\n".join(pad + _json_value(x, level + 1) for x in v) + "\n" + end + "]"
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + _json_value(x, level + 1) for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def report_to_json(report: AuditReport) -> str:
    """UTF-8 JSON text with declaration key order and 17 significant digits."""
    return _json_value(report.to_dict(), 0) + "\n"
