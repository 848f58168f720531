"""Brute-force global primal minimizer used as ground truth (n <= 4).

The feasible set is enclosed in a box, P is evaluated on a full tensor grid,
the best well-separated feasible grid points are polished by SLSQP, and the
polished points are clustered. Nothing here touches the dual machinery.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, nnls

from .errors import DimensionTooLarge, InfeasibleEverywhere, NoCompactConstraint
from .instance import ProblemInstance, compact_box, constraint_values, objective_value

MAX_N = 4
MIN_GRID = 64
DEFAULT_GRID = {1: 20001, 2: 1025, 3: 129, 4: 64}
N_SEEDS = 100
CLUSTER_RADIUS = 1e-6
VALUE_TOL = 1e-7
FEAS_TOL = 1e-7
CHUNK = 1 << 20


@dataclass(frozen=True)
class OracleResult:
    best_value: float
    minimizers: list[np.ndarray]
    resolution: float
    certified_box: tuple[np.ndarray, np.ndarray]

    @property
    def count(self) -> int:
        return len(self.minimizers)


def search_box(inst: ProblemInstance):
    """Box enclosing the feasible set, from every positive definite Q_k, inflated by 1%."""
    box = compact_box(inst)
    if box is None:
        raise NoCompactConstraint("no positive definite Q_k; pass an explicit box")
    lo, hi = box
    pad = 0.005 * (hi - lo)
    return lo - pad, hi + pad


def _grid_eval(inst, axes):
    """Yield (points, P, max g) over the tensor grid in index order, in chunks."""
    n = inst.n
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape))
    Qs, bs, cs = inst.Qs, inst.bs, inst.cs
    for start in range(0, total, CHUNK):
        idx = np.unravel_index(np.arange(start, min(start + CHUNK, total)), shape)
        X = np.stack([axes[j][idx[j]] for j in range(n)], axis=1)
        P = X @ (0.5 * inst.A)
        P = np.sum(P * X, axis=1) - X @ inst.f
        gmax = np.full(len(X), -np.inf)
        for Q, b, c in zip(Qs, bs, cs):
            np.maximum(gmax, np.sum((X @ (0.5 * Q)) * X, axis=1) + X @ b - c, out=gmax)
        yield X, P, gmax


def _seeds(inst, axes, pitch, n_seeds):
    """Best feasible grid points, greedily kept at least three pitches apart."""
    best_X, best_P = [], []
    for X, P, gmax in _grid_eval(inst, axes):
        feas = gmax <= 0.0
        if not np.any(feas):
            continue
        Xf, Pf = X[feas], P[feas]
        keep = np.argsort(Pf, kind="stable")[: 50 * n_seeds]
        best_X.append(Xf[keep])
        best_P.append(Pf[keep])
    if not best_X:
        return np.empty((0, inst.n))
    X = np.concatenate(best_X)
    P = np.concatenate(best_P)
    order = np.argsort(P, kind="stable")
    chosen = np.empty((n_seeds, inst.n))
    count = 0
    sep = 3.0 * pitch
    for k in order:
        if count == 0 or np.abs(chosen[:count] - X[k]).max(axis=1).min() > sep:
            chosen[count] = X[k]
            count += 1
            if count == n_seeds:
                break
    return chosen[:count]


def _kkt_newton(inst, x, active_tol=1e-5, iters=30):
    """Newton on the KKT system of the near-active constraints; None if it fails."""
    g = constraint_values(inst, x).g
    active = [i for i in range(inst.m) if g[i] >= -active_tol]
    n, k = inst.n, len(active)
    cons = [inst.constraints[i] for i in active]
    lam = np.zeros(k)
    if k:
        J = np.stack([c.Q @ x + c.b for c in cons], axis=1)
        lam, _ = nnls(J, -(inst.A @ x - inst.f))
    for _ in range(iters):
        J = np.stack([c.Q @ x + c.b for c in cons], axis=1) if k else np.zeros((n, 0))
        H = inst.A + sum(l * c.Q for l, c in zip(lam, cons))
        r = np.concatenate([inst.A @ x - inst.f + J @ lam, [0.5 * x @ c.Q @ x + c.b @ x - c.c for c in cons]])
        if np.linalg.norm(r) <= 1e-15 * (1.0 + np.linalg.norm(inst.f)):
            break
        K = np.block([[H, J], [J.T, np.zeros((k, k))]])
        try:
            d = np.linalg.solve(K, -r)
        except np.linalg.LinAlgError:
            return None
        x, lam = x + d[:n], lam + d[n:]
        if np.linalg.norm(d) <= 1e-16 * (1.0 + np.linalg.norm(x)):
            break
    if not np.all(np.isfinite(x)) or np.any(lam < -1e-8):
        return None
    return x


def _polish(inst, x0, lo, hi):
    """SLSQP from a grid seed, then an exact KKT Newton refinement."""
    Qs, bs, cs = inst.Qs, inst.bs, inst.cs
    cons = {
        "type": "ineq",
        "fun": lambda x: cs - (0.5 * np.einsum("j,ijk,k->i", x, Qs, x) + bs @ x),
        "jac": lambda x: -(Qs @ x + bs),
    }
    res = minimize(
        lambda x: 0.5 * x @ inst.A @ x - inst.f @ x,
        x0,
        jac=lambda x: inst.A @ x - inst.f,
        method="SLSQP",
        bounds=list(zip(lo, hi)),
        constraints=[cons],
        options={"maxiter": 500, "ftol": 1e-15},
    )
    best, best_v = x0, objective_value(inst, x0)
    for x in (res.x, _kkt_newton(inst, res.x)):
        if x is None or constraint_values(inst, x).max > 1e-12:
            continue
        v = objective_value(inst, x)
        if v <= best_v + 1e-9 * (1.0 + abs(best_v)):
            best, best_v = x, v
    return best


def global_min_brute(
    inst: ProblemInstance,
    grid_points_per_axis: int | None = None,
    polish_iters: int = N_SEEDS,
    value_tol: float = VALUE_TOL,
    box=None,
) -> OracleResult:
    """Grid search plus local polish; returns every minimizer cluster within value_tol."""
    n = inst.n
    if n > MAX_N:
        raise DimensionTooLarge(f"brute force limited to n <= {MAX_N}, got n = {n}")
    grid = DEFAULT_GRID[n] if grid_points_per_axis is None else int(grid_points_per_axis)
    if grid < MIN_GRID:
        raise ValueError(f"grid_points_per_axis must be >= {MIN_GRID}")
    lo, hi = search_box(inst) if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))

    for attempt in range(2):
        axes = [np.linspace(lo[j], hi[j], grid) for j in range(n)]
        pitch = float(np.max(hi - lo)) / (grid - 1)
        seeds = _seeds(inst, axes, pitch, polish_iters)
        if len(seeds):
            break
        grid = 2 * grid - 1
    else:
        raise InfeasibleEverywhere("no feasible grid point found after one refinement")

    polished = [_polish(inst, x0, lo, hi) for x0 in seeds]
    values = [objective_value(inst, x) for x in polished]
    order = sorted(range(len(polished)), key=lambda k: (values[k], tuple(polished[k])))
    clusters: list[tuple[np.ndarray, float]] = []
    for k in order:
        x, v = polished[k], values[k]
        if any(np.linalg.norm(x - c) <= CLUSTER_RADIUS for c, _ in clusters):
            continue
        clusters.append((x, v))
    best = clusters[0][1]
    minimizers = [x for x, v in clusters if v - best <= value_tol]
    return OracleResult(best_value=best, minimizers=minimizers, resolution=pitch, certified_box=(lo, hi))


def count_distinct_minimizers(inst: ProblemInstance, value_tol: float = VALUE_TOL, **kwargs) -> int:
    return global_min_brute(inst, value_tol=value_tol, **kwargs).count


def kkt_residual(inst: ProblemInstance, x, active_tol: float = 1e-6):
    """Best nonnegative multipliers on the active constraints and the stationarity residual."""
    x = np.asarray(x, dtype=float)
    g = constraint_values(inst, x).g
    grad = inst.A @ x - inst.f
    active = [i for i in range(inst.m) if g[i] >= -active_tol]
    lam = np.zeros(inst.m)
    if active:
        J = np.stack([inst.constraints[i].Q @ x + inst.constraints[i].b for i in active], axis=1)
        coef, _ = nnls(J, -grad)
        lam[active] = coef
    resid = grad + sum(lam[i] * (inst.constraints[i].Q @ x + inst.constraints[i].b) for i in range(inst.m))
    return lam, float(np.linalg.norm(resid)), g


def sample_feasible(inst: ProblemInstance, count: int, rng, box=None, max_tries: int = 200):
    """Uniform rejection samples from the feasible set inside a box."""
    if box is None:
        try:
            lo, hi = search_box(inst)
        except NoCompactConstraint:
            lo, hi = -5.0 * np.ones(inst.n), 5.0 * np.ones(inst.n)
    else:
        lo, hi = box
    if np.any(np.asarray(hi) < np.asarray(lo)):
        # disjoint ellipsoid boxes: the feasible set is empty
        return np.empty((0, inst.n))
    out = []
    for _ in range(max_tries):
        X = rng.uniform(lo, hi, size=(max(count, 64), inst.n))
        G = 0.5 * np.einsum("pj,ijk,pk->pi", X, inst.Qs, X) + X @ inst.bs.T - inst.cs
        out.extend(X[G.max(axis=1) <= 0.0])
        if len(out) >= count:
            break
    return np.array(out[:count]).reshape(-1, inst.n)

