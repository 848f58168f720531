"""Primal problem data for quadratically constrained quadratic minimization.

The problem is

    min  P(x) = 1/2 x^T A x - f^T x
    s.t. g_i(x) = 1/2 x^T Q_i x + b_i^T x - c_i <= 0,   i = 1..m

with symmetric ``A`` (typically indefinite) and symmetric nonsingular ``Q_i``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import InputError

ASYMMETRY_TOL = 1e-12
SINGULAR_RATIO = 1e-10
FEAS_TOL = 1e-9


def _frozen(arr):
    arr.setflags(write=False)
    return arr


def _symmetrize(M, name):
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {M.shape}")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > ASYMMETRY_TOL:
        raise InputError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class Constraint:
    """One quadratic constraint ``1/2 x^T Q x + b^T x <= c``."""

    Q: np.ndarray
    b: np.ndarray
    c: float


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable datum ``(A, f, [(Q_i, b_i, c_i)])``.

    Symmetry is enforced at construction. Nonsingularity of the ``Q_i`` and
    ``f != 0`` are *not* enforced here; :func:`validate` reports them so that
    deliberately degenerate instances can still be built and inspected.
    """

    A: np.ndarray
    f: np.ndarray
    constraints: tuple[Constraint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        A = _symmetrize(self.A, "A")
        n = A.shape[0]
        if n < 1:
            raise InputError("n must be positive")
        f = np.array(self.f, dtype=float).reshape(-1)
        if f.shape != (n,):
            raise InputError(f"f must have length {n}, got {f.shape[0]}")
        cons = []
        for i, con in enumerate(self.constraints, start=1):
            if not isinstance(con, Constraint):
                con = Constraint(*con)
            Q = _symmetrize(con.Q, f"Q{i}")
            b = np.array(con.b, dtype=float).reshape(-1)
            if Q.shape != (n, n):
                raise InputError(f"Q{i} must be {n}x{n}, got {Q.shape}")
            if b.shape != (n,):
                raise InputError(f"b{i} must have length {n}, got {b.shape[0]}")
            c = float(con.c)
            for arr in (Q, b):
                arr.setflags(write=False)
            cons.append(Constraint(Q, b, c))
        if not cons:
            raise InputError("at least one constraint is required (m >= 1)")
        for arr in (A, f):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "constraints", tuple(cons))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return len(self.constraints)

    @cached_property
    def Qs(self) -> np.ndarray:
        """Stacked constraint matrices, shape (m, n, n)."""
        return _frozen(np.stack([con.Q for con in self.constraints]))

    @cached_property
    def bs(self) -> np.ndarray:
        return _frozen(np.stack([con.b for con in self.constraints]))

    @cached_property
    def cs(self) -> np.ndarray:
        return _frozen(np.array([con.c for con in self.constraints]))

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.f, other.f)
            and np.array_equal(self.Qs, other.Qs)
            and np.array_equal(self.bs, other.bs)
            and np.array_equal(self.cs, other.cs)
        )

    __hash__ = None


@dataclass(frozen=True)
class ConstraintValues:
    """Constraint residuals ``g_i(x)``; x is feasible iff ``max g <= 0``.

    ``eps`` holds ``1/2 x^T Q_i x + b_i^T x`` (the residual without ``-c_i``),
    the quantity that pairs with sigma in the Lagrangian.
    """

    g: np.ndarray
    eps: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(self.g))


def _as_point(inst: ProblemInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (inst.n,):
        raise InputError(f"x must have length {inst.n}, got {x.shape[0]}")
    return x


def objective_value(inst: ProblemInstance, x) -> float:
    x = _as_point(inst, x)
    return float(0.5 * x @ inst.A @ x - inst.f @ x)


def objective_gradient(inst: ProblemInstance, x) -> np.ndarray:
    x = _as_point(inst, x)
    return inst.A @ x - inst.f


def constraint_values(inst: ProblemInstance, x) -> ConstraintValues:
    x = _as_point(inst, x)
    eps = np.array([0.5 * x @ con.Q @ x + con.b @ x for con in inst.constraints])
    return ConstraintValues(g=eps - inst.cs, eps=eps)


def is_feasible(inst: ProblemInstance, x, tol: float = FEAS_TOL) -> bool:
    if tol < 0:
        raise InputError("tol must be nonnegative")
    return constraint_values(inst, x).max <= tol


def is_positive_definite(M, rel_tol: float = 1e-10) -> bool:
    """Strict positive definiteness with a margin scaled by ``1 + ||M||``."""
    w = np.linalg.eigvalsh(M)
    return bool(w[0] > rel_tol * (1.0 + np.max(np.abs(w))))


def ellipsoid_box(Q, b, c):
    """Axis-aligned box enclosing ``{x : 1/2 x^T Q x + b^T x <= c}`` for Q > 0.

    Returns ``(lo, hi)``; if the set is empty the returned box is degenerate
    (``lo > hi`` is avoided by clamping the radius at zero).
    """
    Qinv = np.linalg.inv(Q)
    center = -Qinv @ b
    # 1/2 (x - center)^T Q (x - center) <= c + 1/2 b^T Q^-1 b
    r = max(c + 0.5 * b @ Qinv @ b, 0.0)
    half = np.sqrt(2.0 * r * np.clip(np.diag(Qinv), 0.0, None))
    return center - half, center + half


def compact_box(inst: ProblemInstance):
    """Intersection of the ellipsoid boxes of all positive definite Q_k, or None."""
    lo = hi = None
    for con in inst.constraints:
        if not is_positive_definite(con.Q):
            continue
        l, h = ellipsoid_box(con.Q, con.b, con.c)
        lo = l if lo is None else np.maximum(lo, l)
        hi = h if hi is None else np.minimum(hi, h)
    if lo is None:
        return None
    return lo, hi


@dataclass(frozen=True)
class StrictPoint:
    """A point with every constraint strictly satisfied."""

    x: np.ndarray
    margin: float
    found = True


@dataclass(frozen=True)
class NotFound:
    """The search found no strictly feasible point.

    This is inconclusive: it does not prove the interior is empty.
    """

    attempts: int
    best_margin: float
    found = False


def _max_residual_min(inst, x0, lo, hi):
    """Locally minimize ``max_i g_i`` as ``min t s.t. g_i(x) <= t`` inside a box."""
    n = inst.n
    Qs, bs, cs = inst.Qs, inst.bs, inst.cs

    def residuals(z):
        x = z[:n]
        return 0.5 * np.einsum("j,ijk,k->i", x, Qs, x) + bs @ x - cs

    def cons_fun(z):
        return z[n] - residuals(z)

    def cons_jac(z):
        x = z[:n]
        J = np.empty((len(cs), n + 1))
        J[:, :n] = -(Qs @ x + bs)
        J[:, n] = 1.0
        return J

    t0 = float(np.max(residuals(np.append(x0, 0.0))))
    z0 = np.append(x0, t0)
    bounds = [(l, h) for l, h in zip(lo, hi)] + [(None, None)]
    res = minimize(
        lambda z: z[n],
        z0,
        jac=lambda z: np.eye(n + 1)[n],
        method="SLSQP",
        bounds=bounds,
        constraints=[{"type": "ineq", "fun": cons_fun, "jac": cons_jac}],
        options={"maxiter": 200, "ftol": 1e-14},
    )
    x = np.clip(res.x[:n], lo, hi)
    return x, float(np.max(residuals(np.append(x, 0.0))))


def slater_check(inst: ProblemInstance, attempts: int = 16, seed: int = 0, tol: float = FEAS_TOL):
    """Search for a strictly feasible point by multistart local minimization.

    Starts are the origin, the centers ``-Q_i^{-1} b_i`` of the constraint
    quadrics, then uniform random points in a heuristic box. Returns the
    best :class:`StrictPoint` (margin ``-max g > tol``) or :class:`NotFound`.
    """
    if attempts < 1:
        raise InputError("attempts must be >= 1")
    n = inst.n
    box = compact_box(inst)
    if box is None:
        radius = 10.0 * (1.0 + max(max(abs(con.c), np.linalg.norm(con.b)) for con in inst.constraints))
        lo, hi = -radius * np.ones(n), radius * np.ones(n)
    else:
        lo, hi = box
        pad = 0.01 * (hi - lo) + 1e-12
        lo, hi = lo - pad, hi + pad

    starts = [np.zeros(n)]
    for con in inst.constraints:
        try:
            starts.append(-np.linalg.solve(con.Q, con.b))
        except np.linalg.LinAlgError:
            pass
    rng = np.random.default_rng(seed)
    while len(starts) < attempts:
        starts.append(rng.uniform(lo, hi))
    starts = [np.clip(s, lo, hi) for s in starts[:attempts]]

    best_x, best_max = None, np.inf
    for x0 in starts:
        x, gmax = _max_residual_min(inst, x0, lo, hi)
        g0 = constraint_values(inst, x0).max
        if g0 <= gmax:
            x, gmax = x0, g0
        if gmax < best_max:
            best_x, best_max = x, gmax
    if -best_max > tol:
        return StrictPoint(x=best_x, margin=-best_max)
    return NotFound(attempts=attempts, best_margin=-best_max)


def validate(inst: ProblemInstance) -> list[str]:
    """List violated instance invariants; empty when all hold."""
    violations = []
    fnorm = float(np.linalg.norm(inst.f))
    if not fnorm > 0:
        violations.append("f is zero")
    for i, con in enumerate(inst.constraints, start=1):
        w = np.abs(np.linalg.eigvalsh(con.Q))
        wmax = float(np.max(w))
        if wmax == 0 or np.min(w) <= SINGULAR_RATIO * wmax:
            ratio = float(np.min(w) / wmax) if wmax > 0 else 0.0
            violations.append(f"Q{i} singular (min/max |eigenvalue| = {ratio:.3e})")
    for name, arr in [("A", inst.A), ("f", inst.f)] + [
        (f"constraint {i}", np.append(con.Q.ravel(), [*con.b, con.c]))
        for i, con in enumerate(inst.constraints, start=1)
    ]:
        if not np.all(np.isfinite(arr)):
            violations.append(f"{name} has non-finite entries")
    return violations


# -- JSON instance files -----------------------------------------------------

_KEYS = {"n", "m", "A", "f", "constraints"}
_OPTIONAL_KEYS = {"comment"}
_CON_KEYS = {"Q", "b", "c"}


def _matrix(value, n, name):
    if not isinstance(value, list) or len(value) != n:
        raise InputError(f"{name} must be an array of {n} rows")
    for row in value:
        if not isinstance(row, list) or len(row) != n:
            raise InputError(f"{name} must be exactly {n}x{n}")
    return np.array(value, dtype=float)


def _vector(value, n, name):
    if not isinstance(value, list) or len(value) != n:
        raise InputError(f"{name} must be an array of {n} numbers")
    return np.array(value, dtype=float)


def instance_from_dict(data: dict) -> ProblemInstance:
    if not isinstance(data, dict):
        raise InputError("instance must be a JSON object")
    keys = set(data)
    missing = _KEYS - keys
    extra = keys - _KEYS - _OPTIONAL_KEYS
    if missing:
        raise InputError(f"missing keys: {sorted(missing)}")
    if extra:
        raise InputError(f"unexpected keys: {sorted(extra)}")
    n, m = data["n"], data["m"]
    if not (isinstance(n, int) and isinstance(m, int)) or isinstance(n, bool) or n < 1 or m < 1:
        raise InputError("n and m must be positive integers")
    cons = data["constraints"]
    if not isinstance(cons, list) or len(cons) != m:
        raise InputError(f"constraints must be an array of {m} objects")
    parsed = []
    for i, con in enumerate(cons, start=1):
        if not isinstance(con, dict) or set(con) != _CON_KEYS:
            raise InputError(f"constraint {i} must have exactly the keys Q, b, c")
        if not isinstance(con["c"], (int, float)) or isinstance(con["c"], bool):
            raise InputError(f"constraint {i}: c must be a number")
        parsed.append(Constraint(_matrix(con["Q"], n, f"Q{i}"), _vector(con["b"], n, f"b{i}"), float(con["c"])))
    return ProblemInstance(_matrix(data["A"], n, "A"), _vector(data["f"], n, "f"), tuple(parsed))


def instance_to_dict(inst: ProblemInstance, comment: str | None = None) -> dict:
    data = {
        "n": inst.n,
        "m": inst.m,
        "A": inst.A.tolist(),
        "f": inst.f.tolist(),
        "constraints": [{"Q": con.Q.tolist(), "b": con.b.tolist(), "c": con.c} for con in inst.constraints],
    }
    if comment:
        data["comment"] = comment
    return data


def load_instance(path) -> ProblemInstance:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    return instance_from_dict(data)


def save_instance(inst: ProblemInstance, path, comment: str | None = None) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst, comment), indent=2) + "\n", encoding="utf-8")


def make_instance(A, f, constraints: Sequence) -> ProblemInstance:
    """Convenience constructor accepting scalars for n = 1 data."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    f = np.atleast_1d(np.asarray(f, dtype=float))
    cons = tuple(
        Constraint(np.atleast_2d(np.asarray(Q, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float)), float(c))
        for Q, b, c in constraints
    )
    return ProblemInstance(A, f, cons)
