"""Canonical dual function and the recovered primal point.

For sigma >= 0 with G(sigma) nonsingular,

    G(sigma) = A + sum_i sigma_i Q_i
    F(sigma) = f - sum_i sigma_i b_i
    x(sigma) = G(sigma)^{-1} F(sigma)
    P^d(sigma) = -1/2 F^T G^{-1} F - c^T sigma

and P^d = -inf whenever some sigma_i < 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, SingularG
from .instance import FEAS_TOL, ProblemInstance, constraint_values

NEG_INFINITY = float("-inf")
RCOND_GATE = 1e-12


def _as_sigma(inst: ProblemInstance, sigma) -> np.ndarray:
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float)).reshape(-1)
    if sigma.shape != (inst.m,):
        raise InputError(f"sigma must have length {inst.m}, got {sigma.shape[0]}")
    return sigma


def g_matrix(inst: ProblemInstance, sigma) -> np.ndarray:
    sigma = _as_sigma(inst, sigma)
    return inst.A + np.einsum("i,ijk->jk", sigma, inst.Qs)


def f_vector(inst: ProblemInstance, sigma) -> np.ndarray:
    sigma = _as_sigma(inst, sigma)
    return inst.f - sigma @ inst.bs


def _data_scale(inst, sigma):
    return np.linalg.norm(inst.A) + float(np.abs(sigma) @ np.linalg.norm(inst.Qs, axis=(1, 2)))


def reciprocal_condition(inst: ProblemInstance, sigma) -> float:
    """``min |eig G| / max(max |eig G|, ||A|| + sum |sigma_i| ||Q_i||)``.

    Measuring against the data scale keeps the gate meaningful for n = 1,
    where the plain eigenvalue ratio of a nonzero scalar is always one.
    """
    sigma = _as_sigma(inst, sigma)
    w = np.abs(np.linalg.eigvalsh(g_matrix(inst, sigma)))
    denom = max(float(np.max(w)), _data_scale(inst, sigma))
    if denom == 0.0:
        return 0.0
    return float(np.min(w)) / denom


def recover_x(inst: ProblemInstance, sigma) -> np.ndarray:
    """Solve ``G(sigma) x = F(sigma)``; raises :class:`SingularG` at det G = 0."""
    sigma = _as_sigma(inst, sigma)
    rc = reciprocal_condition(inst, sigma)
    if not rc > RCOND_GATE:
        raise SingularG(sigma.tolist(), rc)
    return scipy.linalg.solve(g_matrix(inst, sigma), f_vector(inst, sigma), assume_a="sym")


def dual_value(inst: ProblemInstance, sigma) -> float:
    sigma = _as_sigma(inst, sigma)
    if np.any(sigma < 0):
        return NEG_INFINITY
    x = recover_x(inst, sigma)
    return float(-0.5 * f_vector(inst, sigma) @ x - inst.cs @ sigma)


def dual_gradient(inst: ProblemInstance, sigma) -> np.ndarray:
    """dP^d/dsigma_i = g_i(x(sigma)), the constraint residual at the recovered point."""
    x = recover_x(inst, sigma)
    return constraint_values(inst, x).g


def dual_hessian(inst: ProblemInstance, sigma) -> np.ndarray:
    """``-J^T G^{-1} J`` with columns ``J_i = Q_i x + b_i``; used by the ascent solver."""
    sigma = _as_sigma(inst, sigma)
    x = recover_x(inst, sigma)
    J = (inst.Qs @ x + inst.bs).T
    return -J.T @ scipy.linalg.solve(g_matrix(inst, sigma), J, assume_a="sym")


def lagrangian_value(inst: ProblemInstance, x, sigma) -> float:
    sigma = _as_sigma(inst, sigma)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (inst.n,):
        raise InputError(f"x must have length {inst.n}, got {x.shape[0]}")
    return float(0.5 * x @ g_matrix(inst, sigma) @ x - f_vector(inst, sigma) @ x - inst.cs @ sigma)


@dataclass(frozen=True)
class DualEvaluation:
    value: float
    x_of_sigma: np.ndarray
    gradient: np.ndarray
    conditioning: float


def evaluate(inst: ProblemInstance, sigma) -> DualEvaluation:
    """Value, recovered point, gradient and conditioning in one factorization pass."""
    sigma = _as_sigma(inst, sigma)
    if np.any(sigma < 0):
        raise InputError("evaluate needs sigma >= 0")
    x = recover_x(inst, sigma)
    value = float(-0.5 * f_vector(inst, sigma) @ x - inst.cs @ sigma)
    return DualEvaluation(
        value=value,
        x_of_sigma=x,
        gradient=constraint_values(inst, x).g,
        conditioning=reciprocal_condition(inst, sigma),
    )


@dataclass(frozen=True)
class DualPoint:
    sigma: np.ndarray
    in_S: bool = False
    in_S_plus: bool = False
    in_Y: bool = False


def classify(inst: ProblemInstance, sigma, tol: float | None = None) -> DualPoint:
    """Membership of sigma in S, S_plus and Y.

    ``tol`` is the positive-definiteness margin and the feasibility
    tolerance; by default the margin is ``1e-10 (1 + ||G||)`` and the
    feasibility tolerance is 1e-9.
    """
    sigma = _as_sigma(inst, sigma)
    if np.any(sigma < 0) or not reciprocal_condition(inst, sigma) > RCOND_GATE:
        return DualPoint(sigma)
    w = np.linalg.eigvalsh(g_matrix(inst, sigma))
    pd_tol = 1e-10 * (1.0 + float(np.max(np.abs(w)))) if tol is None else tol
    feas_tol = FEAS_TOL if tol is None else tol
    x = recover_x(inst, sigma)
    return DualPoint(
        sigma,
        in_S=True,
        in_S_plus=bool(w[0] > pd_tol),
        in_Y=constraint_values(inst, x).max <= feas_tol,
    )
