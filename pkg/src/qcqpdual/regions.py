"""Exact one-constraint geometry of the dual sets S, S_plus and Y.

With a single constraint the dual variable is a scalar and every set of
interest is a finite union of intervals. Singularities of G(sigma) come from
the matrix pencil (A, Q); the boundary of Y consists of roots of

    psi(sigma) = g(x(sigma)) = d/dsigma P^d(sigma),

which are isolated by a sign scan on each cell of S and refined by bisection.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from .dual import RCOND_GATE
from .errors import MNotOne
from .instance import FEAS_TOL, ProblemInstance

INF = math.inf
SCAN_SAMPLES = 4096
DEDUP_TOL = 1e-9
ROOT_WIDTH = 1e-12
TANGENT_TOL = 1e-10
TAIL_SIGMA = 1e8
LIMIT_SIGMA = 1e8


@dataclass(frozen=True, order=True)
class Interval:
    lo: float
    lo_closed: bool
    hi: float
    hi_closed: bool

    def __contains__(self, s) -> bool:
        above = s > self.lo or (self.lo_closed and s == self.lo)
        below = s < self.hi or (self.hi_closed and s == self.hi)
        return above and below

    def __str__(self):
        def fmt(v):
            return "inf" if v == INF else ("-inf" if v == -INF else f"{v:.12g}")

        return f"{'[' if self.lo_closed else '('}{fmt(self.lo)}, {fmt(self.hi)}{']' if self.hi_closed else ')'}"


class IntervalUnion:
    """Sorted, disjoint, maximally merged union of real intervals."""

    def __init__(self, intervals=()):
        items = sorted(iv for iv in intervals if not _is_empty(iv))
        merged = []
        for iv in items:
            if merged:
                last = merged[-1]
                touching = iv.lo < last.hi or (iv.lo == last.hi and (iv.lo_closed or last.hi_closed))
                if touching:
                    if (iv.hi, iv.hi_closed) > (last.hi, last.hi_closed):
                        merged[-1] = Interval(last.lo, last.lo_closed, iv.hi, iv.hi_closed)
                    continue
            merged.append(iv)
        self.intervals = tuple(merged)

    def __contains__(self, s) -> bool:
        return any(s in iv for iv in self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def __eq__(self, other):
        return isinstance(other, IntervalUnion) and self.intervals == other.intervals

    def __repr__(self):
        return f"IntervalUnion({list(self.intervals)!r})"

    def __str__(self):
        return " U ".join(str(iv) for iv in self.intervals) if self.intervals else "{}"

    def endpoints(self):
        out = []
        for iv in self.intervals:
            out.extend(v for v in (iv.lo, iv.hi) if math.isfinite(v))
        return out

    def to_list(self):
        return [[iv.lo, iv.lo_closed, iv.hi, iv.hi_closed] for iv in self.intervals]


def _is_empty(iv: Interval) -> bool:
    return iv.lo > iv.hi or (iv.lo == iv.hi and not (iv.lo_closed and iv.hi_closed))


def _require_m1(inst):
    if inst.m != 1:
        raise MNotOne(f"region analysis needs m = 1, got m = {inst.m}")


# -- batched evaluation -------------------------------------------------------


def evaluate_many(inst: ProblemInstance, sigmas):
    """phi, psi and min eigenvalue of G on a 1-d array of sigma values (m = 1).

    Entries failing the conditioning gate are NaN; phi is -inf for sigma < 0.
    """
    _require_m1(inst)
    s = np.asarray(sigmas, dtype=float).reshape(-1)
    con = inst.constraints[0]
    G = inst.A[None, :, :] + s[:, None, None] * con.Q[None, :, :]
    F = inst.f[None, :] - s[:, None] * con.b[None, :]
    w = np.linalg.eigvalsh(G)
    scale = np.linalg.norm(inst.A) + np.abs(s) * np.linalg.norm(con.Q)
    absw = np.abs(w)
    rc = np.min(absw, axis=1) / np.maximum(np.max(absw, axis=1), scale)
    ok = (rc > RCOND_GATE) & np.isfinite(s)
    phi = np.full(s.shape, np.nan)
    psi = np.full(s.shape, np.nan)
    if np.any(ok):
        x = np.linalg.solve(G[ok], F[ok][:, :, None])[:, :, 0]
        phi[ok] = -0.5 * np.einsum("ij,ij->i", F[ok], x) - con.c * s[ok]
        psi[ok] = 0.5 * np.einsum("ij,jk,ik->i", x, con.Q, x) + x @ con.b - con.c
    phi[s < 0] = -INF
    psi[s < 0] = np.nan
    return phi, psi, w[:, 0]


def psi_value(inst, s) -> float:
    return float(evaluate_many(inst, [s])[1][0])


def phi_value(inst, s) -> float:
    return float(evaluate_many(inst, [s])[0][0])


# -- singularities and S ------------------------------------------------------


def _det_sign(inst, s):
    return np.linalg.slogdet(inst.A + s * inst.constraints[0].Q)[0]


def singularities(inst: ProblemInstance) -> list[float]:
    """Sorted sigma >= 0 where det(A + sigma Q) = 0."""
    _require_m1(inst)
    Q = inst.constraints[0].Q
    try:
        cand = -scipy.linalg.eigh(inst.A, Q, eigvals_only=True)
    except np.linalg.LinAlgError:
        lam = scipy.linalg.eigvals(inst.A, -Q)
        real = np.abs(lam.imag) <= 1e-9 * (1.0 + np.abs(lam.real))
        cand = lam.real[real & np.isfinite(lam.real)]
    cand = np.sort(cand[cand >= -1e-12])
    out: list[float] = []
    for s in cand:
        s = max(float(s), 0.0)
        if out and s - out[-1] <= DEDUP_TOL:
            continue
        out.append(_refine_singularity(inst, s))
    return out


def _refine_singularity(inst, s):
    """Bisect on the sign of det G when it changes across s; otherwise keep s."""
    w = 1e-8 * max(1.0, s)
    lo, hi = max(s - w, 0.0), s + w
    slo, shi = _det_sign(inst, lo), _det_sign(inst, hi)
    if slo * shi >= 0 or lo == s:
        return s
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        sm = _det_sign(inst, mid)
        if sm == 0:
            return float(mid)
        if sm == slo:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def _cells(inst, sing=None):
    """Cells of S = [0, inf) minus punctures as (lo, lo_closed, hi) with hi possibly inf."""
    sing = singularities(inst) if sing is None else sing
    cells = []
    lo, lo_closed = 0.0, True
    for s in sing:
        if s == 0.0:
            lo_closed = False
            continue
        cells.append((lo, lo_closed, s))
        lo, lo_closed = s, False
    cells.append((lo, lo_closed, INF))
    return cells


def _probe(lo, hi):
    return 0.5 * (lo + hi) if math.isfinite(hi) else lo + max(1.0, lo)


def s_regions(inst: ProblemInstance):
    """(S, S_plus) as interval unions.

    Inertia of G is constant on each cell, so a single probe decides S_plus.
    """
    _require_m1(inst)
    cells = _cells(inst)
    S = IntervalUnion(Interval(lo, lc, hi, False) for lo, lc, hi in cells)
    probes = [_probe(lo, hi) for lo, _, hi in cells]
    _, _, wmin = evaluate_many(inst, probes)
    S_plus = IntervalUnion(
        Interval(lo, lc, hi, False) for (lo, lc, hi), w in zip(cells, wmin) if w > 0
    )
    return S, S_plus


# -- psi roots ------------------------------------------------------------------


def _cell_grid(lo, lo_singular, hi, samples):
    """Sample points inside a cell, geometric within distance 1 of punctures."""
    parts = []
    if math.isfinite(hi):
        width = hi - lo
        reach = min(1.0, 0.5 * width)
        k = samples // 4
        near = np.geomspace(1e-13 * max(1.0, hi), reach, k)
        parts.append(hi - near)
        if lo_singular:
            parts.append(lo + np.geomspace(1e-13 * max(1.0, lo), reach, k))
            parts.append(np.linspace(lo, hi, samples - 2 * k)[1:-1])
        else:
            parts.append(np.linspace(lo, hi, samples - k)[:-1])
    else:
        k = samples // 4
        top = TAIL_SIGMA * max(1.0, lo)
        if lo_singular:
            parts.append(lo + np.geomspace(1e-13 * max(1.0, lo), 1.0, k))
        else:
            parts.append(np.array([lo]))
        parts.append(np.linspace(lo, lo + max(1.0, lo), k)[1:])
        parts.append(lo + np.geomspace(max(1.0, lo), top, samples - 2 * k))
    grid = np.unique(np.concatenate(parts))
    grid = grid[(grid > lo) | ((grid == lo) & (not lo_singular))]
    return grid[grid < hi]


def _bisect(inst, a, b, fa):
    for _ in range(400):
        mid = 0.5 * (a + b)
        if b - a <= max(ROOT_WIDTH, 4 * np.spacing(abs(mid))) or mid in (a, b):
            break
        fm = psi_value(inst, mid)
        if fm == 0.0:
            return float(mid)
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    return float(0.5 * (a + b))


@dataclass(frozen=True)
class _Root:
    sigma: float
    tangential: bool = False


def _cell_roots(inst, lo, lo_singular, hi, samples):
    grid = _cell_grid(lo, lo_singular, hi, samples)
    _, psi, _ = evaluate_many(inst, grid)
    keep = np.isfinite(psi)
    grid, psi = grid[keep], psi[keep]
    roots: list[_Root] = []
    nz = np.flatnonzero(psi != 0.0)
    # sign changes between consecutive nonzero samples
    for a, b in zip(nz[:-1], nz[1:]):
        if np.sign(psi[a]) == np.sign(psi[b]):
            if b - a > 1:
                roots.append(_Root(float(grid[a + 1]), tangential=True))
            continue
        if b - a > 1:
            roots.append(_Root(float(grid[a + 1])))
        else:
            roots.append(_Root(_bisect(inst, grid[a], grid[b], psi[a])))
    if nz.size == 0 and psi.size:
        roots.extend(_Root(float(g)) for g in grid[:1])
    elif nz.size:
        # exact zeros before the first / after the last nonzero sample
        if nz[0] > 0:
            roots.append(_Root(float(grid[nz[0] - 1])))
        if nz[-1] < psi.size - 1:
            roots.append(_Root(float(grid[nz[-1] + 1])))
    roots.extend(_tangential_roots(inst, grid, psi))
    return sorted(set(roots), key=lambda r: r.sigma)


def _tangential_roots(inst, grid, psi):
    """Even-multiplicity roots: local minima of |psi| that reach zero without a sign change."""
    out = []
    a = np.abs(psi)
    for k in range(1, len(grid) - 1):
        if not (a[k] <= a[k - 1] and a[k] <= a[k + 1]) or psi[k] == 0.0:
            continue
        if np.sign(psi[k - 1]) != np.sign(psi[k + 1]):
            continue
        if a[k] > 1e-3 * (1.0 + np.median(a)):
            continue
        res = minimize_scalar(
            lambda s: abs(psi_value(inst, s)),
            bounds=(grid[k - 1], grid[k + 1]),
            method="bounded",
            options={"xatol": 1e-14},
        )
        if res.fun <= TANGENT_TOL:
            out.append(_Root(float(res.x), tangential=True))
    return out


def _all_roots(inst, samples=SCAN_SAMPLES, sing=None):
    cells = _cells(inst, sing)
    return [
        (cell, _cell_roots(inst, cell[0], not cell[1], cell[2], samples))
        for cell in cells
    ]


def psi_roots(inst: ProblemInstance, samples: int = SCAN_SAMPLES) -> list[float]:
    """All roots of psi inside S, sorted."""
    _require_m1(inst)
    return [r.sigma for _, roots in _all_roots(inst, samples) for r in roots]


def y_regions(inst: ProblemInstance, samples: int = SCAN_SAMPLES) -> IntervalUnion:
    """Maximal pieces of S where psi <= 0 (x(sigma) primal feasible)."""
    _require_m1(inst)
    pieces = []
    for (lo, lo_closed, hi), roots in _all_roots(inst, samples):
        marks = [(lo, lo_closed)] + [(r.sigma, True) for r in roots] + [(hi, False)]
        for (a, ac), (b, bc) in zip(marks[:-1], marks[1:]):
            if a == b:
                continue
            if psi_value(inst, _probe(a, b)) <= FEAS_TOL:
                pieces.append(Interval(a, ac, b, bc and math.isfinite(b)))
        for r in roots:
            pieces.append(Interval(r.sigma, True, r.sigma, True))
    return IntervalUnion(pieces)


# -- variation table ------------------------------------------------------------


def _side_limit(inst, s, side, which):
    """Estimate lim f(sigma) as sigma -> s from one side; +-inf when it blows up."""
    idx = 0 if which == "phi" else 1
    d1, d2 = 1e-6 * max(1.0, s), 1e-9 * max(1.0, s)
    vals = evaluate_many(inst, [s + side * d1, s + side * d2])[idx]
    v1, v2 = float(vals[0]), float(vals[1])
    if not (math.isfinite(v1) and math.isfinite(v2)):
        return float("nan")
    if abs(v2) > 10.0 * abs(v1) and abs(v2) > 1e4:
        return math.copysign(INF, v2)
    return v2


@dataclass
class VariationTable:
    breakpoints: list[float]
    singular: list[float]
    cells: list[tuple[float, float, int]]
    phi_values: dict[float, float]
    psi_values: dict[float, float]
    limits: dict = field(default_factory=dict)

    @property
    def sign_of_psi(self) -> list[int]:
        return [sgn for _, _, sgn in self.cells]

    def rows(self):
        """Human-readable table lines."""
        out = ["cell                               sign(psi)"]
        for lo, hi, sgn in self.cells:
            out.append(f"({lo:.12g}, {hi:.12g})".ljust(35) + {1: "+", -1: "-", 0: "0"}[sgn])
        for s in self.breakpoints:
            tag = "|" if s in self.singular else f"phi={self.phi_values[s]:.12g}"
            out.append(f"sigma={s:.12g}: {tag}")
        return out


def variation_table(inst: ProblemInstance, samples: int = SCAN_SAMPLES) -> VariationTable:
    _require_m1(inst)
    sing = singularities(inst)
    roots = [r.sigma for _, rs in _all_roots(inst, samples, sing) for r in rs]
    breaks = sorted(set(sing) | set(roots))
    edges = [0.0] + [b for b in breaks if b > 0] + [INF]
    cells = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        v = psi_value(inst, _probe(lo, hi))
        cells.append((lo, hi, int(np.sign(v)) if math.isfinite(v) else 0))
    in_S = [0.0] + [b for b in breaks if b not in sing]
    phis, psis, _ = evaluate_many(inst, in_S)
    con = inst.constraints[0]
    Qinv_b = np.linalg.solve(con.Q, con.b)
    psi_inf_analytic = float(-0.5 * con.b @ Qinv_b - con.c)
    phi_big, psi_big, _ = evaluate_many(inst, [LIMIT_SIGMA])
    limits = {
        "singularities": [
            {
                "sigma": s,
                "phi_left": _side_limit(inst, s, -1, "phi") if s > 0 else float("nan"),
                "phi_right": _side_limit(inst, s, +1, "phi"),
                "psi_left": _side_limit(inst, s, -1, "psi") if s > 0 else float("nan"),
                "psi_right": _side_limit(inst, s, +1, "psi"),
            }
            for s in sing
        ],
        "psi_at_infinity": float(psi_big[0]),
        "psi_at_infinity_analytic": psi_inf_analytic,
        "phi_at_large_sigma": float(phi_big[0]),
        "phi_tail_slope": psi_inf_analytic,
        "phi_at_infinity": (
            -INF if psi_inf_analytic < 0 else INF if psi_inf_analytic > 0 else float(phi_big[0])
        ),
    }
    return VariationTable(
        breakpoints=breaks,
        singular=list(sing),
        cells=cells,
        phi_values={s: float(v) for s, v in zip(in_S, phis)},
        psi_values={s: float(v) for s, v in zip(in_S, psis)},
        limits=limits,
    )


# -- CSV curve dump ---------------------------------------------------------------


def write_curve_csv(inst: ProblemInstance, sigmas, path) -> int:
    """Write ``sigma,phi,psi`` rows; NaN at punctures, phi = -inf for sigma < 0."""
    sigmas = np.asarray(sigmas, dtype=float)
    phi, psi, _ = evaluate_many(inst, sigmas)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sigma", "phi", "psi"])
        for row in zip(sigmas, phi, psi):
            writer.writerow([format(float(v), ".17g") for v in row])
    return len(sigmas)
