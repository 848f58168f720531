"""Maximization of the canonical dual over Y (and over S_plus).

For m = 1 the maximum over Y is exact: psi = dP^d/dsigma is <= 0 on Y, so
P^d is non-increasing on every interval of Y and the supremum sits at a left
endpoint (or is a one-sided limit at an open one). For m >= 2 a deterministic
multistart projected ascent gives a best-effort lower bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from . import regions
from .dual import RCOND_GATE, classify
from .errors import EmptySPlus, EmptyY
from .instance import FEAS_TOL, ProblemInstance

TIE_TOL = 1e-8
CLUSTER_TOL = 1e-6
UNBOUNDED = 1e12
# an ascent ending this close to det G = 0 is chasing a supremum outside S
BOUNDARY_RCOND = 1e-8
# psi_i within this (relative) distance of 0 counts as an active Y constraint
ACTIVE_TOL = 1e-7


@dataclass
class DualSolveResult:
    maximizers: list[tuple[np.ndarray, float]]
    attained: bool
    sup_estimate: float
    method: str
    in_S_plus_flags: list[bool] = field(default_factory=list)
    note: str = ""

    @property
    def best(self):
        return self.maximizers[0] if self.maximizers else None


def _finish(inst, candidates, unattained, method, note=""):
    """Assemble a result from attained (sigma, value) candidates and unattained sup values."""
    best_att = max((v for _, v in candidates), default=-math.inf)
    best_sup = max(unattained, default=-math.inf)
    if best_sup > best_att + TIE_TOL:
        return DualSolveResult([], False, best_sup, method, [], note or "supremum not attained")
    ranked = sorted(candidates, key=lambda sv: (-sv[1], tuple(sv[0])))
    maximizers = []
    for s, v in ranked:
        if v < best_att - TIE_TOL:
            break
        if any(np.linalg.norm(s - t) <= CLUSTER_TOL for t, _ in maximizers):
            continue
        maximizers.append((s, v))
    flags = [classify(inst, s).in_S_plus for s, _ in maximizers]
    return DualSolveResult(maximizers, True, best_att, method, flags, note)


# -- exact m = 1 -------------------------------------------------------------------


def _open_left_limit(inst, lo):
    lim = regions._side_limit(inst, lo, +1, "phi")
    return lim if not math.isnan(lim) else -math.inf


def maximize_over_Y_1d(inst: ProblemInstance) -> DualSolveResult:
    """Exact maximization of P^d over Y for a single constraint."""
    Y = regions.y_regions(inst)
    if not Y:
        raise EmptyY("Y is empty: no sigma in S recovers a feasible x(sigma)")
    candidates, unattained = [], []
    for iv in Y:
        ends = [iv.lo] if iv.lo_closed else []
        if iv.hi_closed and math.isfinite(iv.hi):
            ends.append(iv.hi)
        for s in ends:
            candidates.append((np.array([s]), regions.phi_value(inst, s)))
        # psi <= 0 on Y, so an unbounded piece never beats its own left end
        if not iv.lo_closed:
            unattained.append(_open_left_limit(inst, iv.lo))
    return _finish(inst, candidates, unattained, "exact_1d")


def maximize_over_S_plus_1d(inst: ProblemInstance) -> DualSolveResult:
    """Exact maximization of P^d over S_plus (m = 1); P^d is concave on each cell."""
    _, S_plus = regions.s_regions(inst)
    if not S_plus:
        raise EmptySPlus("G(sigma) is not positive definite for any sigma >= 0")
    roots = regions.psi_roots(inst)
    candidates, unattained = [], []
    for iv in S_plus:
        inside = [r for r in roots if r in iv]
        if inside:
            candidates.extend((np.array([r]), regions.phi_value(inst, r)) for r in inside)
            continue
        probe = regions._probe(iv.lo, iv.hi)
        slope = regions.psi_value(inst, probe)
        if slope <= 0:
            if iv.lo_closed:
                candidates.append((np.array([iv.lo]), regions.phi_value(inst, iv.lo)))
            else:
                unattained.append(_open_left_limit(inst, iv.lo))
        elif math.isfinite(iv.hi):
            lim = regions._side_limit(inst, iv.hi, -1, "phi")
            unattained.append(lim if not math.isnan(lim) else -math.inf)
        else:
            table = regions.variation_table(inst)
            unattained.append(table.limits["phi_at_infinity"])
    return _finish(inst, candidates, unattained, "exact_1d")


# -- multistart ---------------------------------------------------------------------


@dataclass
class _State:
    sigma: np.ndarray
    value: float
    grad: np.ndarray
    x: np.ndarray
    w: np.ndarray
    V: np.ndarray
    rcond: float

    @property
    def inertia(self):
        return int(np.sum(self.w < 0))


class _Data:
    """Flattened arrays and norms reused by every _state call of one solve."""

    def __init__(self, inst):
        n = inst.n
        self.n, self.m = n, inst.m
        self.A = inst.A
        self.f = inst.f
        self.Qs = inst.Qs
        self.Qflat = inst.Qs.reshape(inst.m, n * n)
        self.bs = inst.bs
        self.cs = inst.cs
        self.A_norm = float(np.linalg.norm(inst.A))
        self.Q_norms = np.linalg.norm(self.Qflat, axis=1)


def _state(data, sigma):
    """One eigendecomposition of G(sigma) serving the gate, inertia, x(sigma) and P^d."""
    G = data.A + (sigma @ data.Qflat).reshape(data.n, data.n)
    w, V = np.linalg.eigh(G)
    absw = np.abs(w)
    scale = data.A_norm + float(np.abs(sigma) @ data.Q_norms)
    rcond = float(np.min(absw) / max(np.max(absw), scale))
    if not rcond > RCOND_GATE:
        return None
    F = data.f - sigma @ data.bs
    x = V @ ((V.T @ F) / w)
    grad = 0.5 * np.einsum("j,ijk,k->i", x, data.Qs, x) + data.bs @ x - data.cs
    value = float(-0.5 * F @ x - data.cs @ sigma)
    return _State(sigma, value, grad, x, w, V, rcond)


def _member(kind, st):
    if st is None or np.any(st.sigma < 0):
        return False
    if kind == "Y":
        # half the slack classify() allows, so the two always agree on members
        return bool(np.max(st.grad) <= 0.5 * FEAS_TOL)
    return bool(st.w[0] > 1e-10 * (1.0 + np.max(np.abs(st.w))))


def _sigma_scale(inst):
    num = np.linalg.norm(inst.A) + np.linalg.norm(inst.f) + np.max(np.abs(inst.cs)) + 1.0
    den = min(np.linalg.norm(con.Q) for con in inst.constraints)
    return num / max(den, 1e-12)


def _sample_sigma(rng, m, scale):
    sigma = scale * np.exp(rng.uniform(np.log(1e-4), np.log(1e3), size=m))
    zero = rng.random(m) < 0.25
    sigma[zero] = 0.0
    return sigma


def _hessian(data, st, rows=None):
    J = (data.Qs @ st.x + data.bs).T
    Jr = J if rows is None else J[:, rows]
    return -Jr.T @ (st.V @ ((st.V.T @ J) / st.w[:, None]))


def _boundary_direction(data, st):
    """Projection of grad P^d onto the cone {d : H_A d <= 0, d_B >= 0}.

    A holds the near-active Y constraints psi_i <= 0 and B the coordinates at
    sigma_i = 0. By Moreau's decomposition the projection is g - C lam with
    lam = argmin_{lam >= 0} |g - C lam|, C = [H_A^T, -e_B].
    """
    grad = st.grad
    act = np.flatnonzero(grad >= -ACTIVE_TOL * (1.0 + np.max(np.abs(grad))))
    bound = np.flatnonzero(st.sigma <= 0.0)
    if not len(act):
        return None, act
    cols = [_hessian(data, st, act).T] + [-np.eye(data.m)[:, bound]]
    C = np.concatenate(cols, axis=1)
    lam, _ = nnls(C, grad)
    return grad - C @ lam, act


def _restore(data, cand, act, inertia):
    """Gauss-Newton pull of the active psi_i back to just inside Y."""
    for _ in range(4):
        if cand is None or cand.inertia != inertia:
            return None
        if _member("Y", cand):
            return cand
        H_A = _hessian(data, cand, act)
        target = cand.grad[act] + 0.25 * FEAS_TOL
        delta, *_ = np.linalg.lstsq(H_A, -target, rcond=None)
        cand = _state(data, np.maximum(cand.sigma + delta, 0.0))
    return cand if _member("Y", cand) and cand.inertia == inertia else None


def _boundary_step(data, st, inertia, t):
    """One projected-gradient step along the active boundary of Y, or None."""
    d, act = _boundary_direction(data, st)
    if d is None or np.linalg.norm(d) <= 1e-13 * (1.0 + np.linalg.norm(st.grad)):
        return None, t
    for _ in range(60):
        cand = _restore(data, _state(data, np.maximum(st.sigma + t * d, 0.0)), act, inertia)
        if cand is not None and cand.value >= st.value + 1e-4 * (st.grad @ (cand.sigma - st.sigma)):
            if cand.value > st.value:
                return cand, t
        t *= 0.5
    return None, t


def _ascend(data, st, kind, max_iter=500):
    """Projected Newton/gradient ascent on P^d that stays in the member set.

    Trial points that change the inertia of G(sigma) are rejected, which keeps
    every iterate inside the cell of S it started in. On Y with m >= 2 the
    ascent also slides along active psi_i = 0 faces when those block it.
    Returns (sigma, value, ended_at_pole).
    """
    inertia = st.inertia
    step, newton_step, bstep = 1.0, 1.0, 1.0
    for _ in range(max_iter):
        sigma, grad = st.sigma, st.grad
        free = (sigma > 0) | (grad > 0)
        pg = np.where(free, grad, 0.0)
        if np.linalg.norm(pg) <= 1e-13 * (1.0 + abs(st.value)):
            break
        if st.value > UNBOUNDED or np.max(sigma) > UNBOUNDED:
            return st.sigma, math.inf, False
        direction, newton = pg, False
        if np.any(free):
            J = (data.Qs @ st.x + data.bs).T[:, free]
            H = -J.T @ (st.V @ ((st.V.T @ J) / st.w[:, None]))
            try:
                hw, hV = np.linalg.eigh(H)
                # shift a non-concave or flat block so the step is still an ascent direction
                shift = 0.0 if hw[-1] < 0 else hw[-1] + 1e-6 * max(1.0, np.max(np.abs(hw)))
                nd = np.zeros_like(sigma)
                nd[free] = -hV @ ((hV.T @ grad[free]) / (hw - shift))
                if np.all(np.isfinite(nd)) and nd @ pg > 0:
                    direction, newton = nd, True
            except np.linalg.LinAlgError:
                pass
        t = min(1.0, newton_step * 4.0) if newton else min(step * 4.0, 1e6)
        # after the full step, try the step that lands exactly on sigma >= 0
        neg = direction < 0
        t_wall = float(np.min(sigma[neg] / -direction[neg])) if np.any(neg) else math.inf
        new = None
        for _ in range(80):
            cand = _state(data, np.maximum(sigma + t * direction, 0.0))
            if _member(kind, cand) and cand.inertia == inertia:
                if cand.value >= st.value + 1e-4 * (grad @ (cand.sigma - sigma)):
                    new = cand
                    break
            t = t_wall if 0.0 < t_wall < 0.5 * t else 0.5 * t
            t_wall = math.inf
        near_face = bool(np.max(grad) >= -ACTIVE_TOL * (1.0 + np.max(np.abs(grad))))
        if kind == "Y" and data.m > 1 and near_face:
            # the plain step is blocked by an active psi_i = 0 face; slide along it
            slide, bstep = _boundary_step(data, st, inertia, min(bstep * 4.0, 1e6))
            if slide is not None and (new is None or slide.value > new.value):
                st = slide
                continue
        if new is None:
            break
        if newton:
            newton_step = t
        else:
            step = t
        moved = np.linalg.norm(new.sigma - sigma)
        st = new
        if moved <= 1e-15 * (1.0 + np.linalg.norm(sigma)):
            break
    return st.sigma, st.value, st.rcond < BOUNDARY_RCOND


def _multistart(inst, starts, seed, kind, empty_error):
    if starts < 1:
        raise ValueError("starts must be >= 1")
    rng = np.random.default_rng(seed)
    data = _Data(inst)
    scale = _sigma_scale(inst)
    found = []
    tries = 0
    while len(found) < starts and tries < starts * 100:
        sigma = np.zeros(inst.m) if tries == 0 else _sample_sigma(rng, inst.m, scale)
        tries += 1
        st = _state(data, sigma)
        if _member(kind, st):
            found.append(st)
    if not found:
        raise empty_error(f"no feasible start after {tries} samples")
    results, unattained = [], []
    for st in found:
        s, v, at_pole = _ascend(data, st, kind)
        if math.isinf(v) or at_pole:
            unattained.append(v)
        else:
            results.append((s, v))
    return _finish(inst, results, unattained, "multistart", note="best-effort lower bound")


def maximize_over_Y_multistart(inst: ProblemInstance, starts: int = 32, seed: int = 0) -> DualSolveResult:
    """Best-effort maximization of P^d over Y for any m; deterministic given seed."""
    return _multistart(inst, starts, seed, "Y", EmptyY)


def maximize_over_S_plus_multistart(inst: ProblemInstance, starts: int = 32, seed: int = 0) -> DualSolveResult:
    return _multistart(inst, starts, seed, "S_plus", EmptySPlus)


def maximize_over_Y(inst: ProblemInstance, starts: int = 32, seed: int = 0) -> DualSolveResult:
    if inst.m == 1:
        return maximize_over_Y_1d(inst)
    return maximize_over_Y_multistart(inst, starts, seed)


def maximize_over_S_plus(inst: ProblemInstance, starts: int = 32, seed: int = 0) -> DualSolveResult:
    if inst.m == 1:
        return maximize_over_S_plus_1d(inst)
    return maximize_over_S_plus_multistart(inst, starts, seed)
