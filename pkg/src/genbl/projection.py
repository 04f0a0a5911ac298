"""Projection of an adjusted expectation onto a polyhedron in the adjusted-variance metric.

The problem solved is

    minimise (e - q)' V^{-1} (e - q)   subject to   A q >= b,

with ``V`` the adjusted variance. Writing ``q = e + L w`` with ``L`` the
principal-axis square root of ``V`` turns the objective into ``|w|^2``, so
the work is a Euclidean projection of the origin onto ``{w : A L w >= b - A e}``.
That projection is solved exactly with a dual active-set method (the
Goldfarb-Idnani scheme with identity Hessian): start from the unconstrained
minimiser and repeatedly add the most violated constraint, dropping active
constraints whose multipliers would turn negative.

Directions in the null space of a singular ``V`` carry infinite cost, so
``q`` is pinned to ``e`` along them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import RTOL, EigenFactorisation, eigen_factorise, sym_pseudo_inverse, symmetrize
from .constraints import satisfies
from .errors import DimensionError, InfeasibleError, PinnedInfeasibleError

FEAS_TOL = 1e-9
KKT_TOL = 1e-8


@dataclass(frozen=True)
class ProjectionResult:
    q_star: np.ndarray
    active_set: tuple
    multipliers: np.ndarray
    kkt_residual: float
    iterations: int

    def to_dict(self):
        return {
            "q_star": self.q_star.tolist(),
            "active_set": list(self.active_set),
            "multipliers": self.multipliers.tolist(),
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


def objective(e, v, q, rtol=RTOL):
    """``(e - q)' V^+ (e - q)``, the squared distance being minimised."""
    diff = np.asarray(e, dtype=float) - np.asarray(q, dtype=float)
    return float(diff @ sym_pseudo_inverse(v, rtol) @ diff)


def _active_basis(N):
    """QR of the active normals (columns of N): orthonormal Q1, Q2 and triangular R."""
    r, k = N.shape
    if k == 0:
        return np.zeros((r, 0)), np.eye(r), np.zeros((0, 0))
    Q, R = np.linalg.qr(N, mode="complete")
    return Q[:, :k], Q[:, k:], R[:k, :k]


def _dual_active_set(G, h, tol, max_iter, labels):
    """Minimise ``0.5 |w|^2`` subject to ``G w >= h``; rows of G have unit norm.

    Returns ``(w, active, u, iterations)`` with ``u`` the multipliers of the
    active rows, in the order listed in ``active``.
    """
    r = G.shape[1]
    w = np.zeros(r)
    active = []
    u = np.zeros(0)
    iterations = 0
    eps = 1e-12
    while True:
        s = G @ w - h
        if active:
            s[active] = np.inf
        p = int(np.argmin(s))
        if s[p] >= -tol:
            return w, active, u, iterations
        n_p = G[p]
        u_p = 0.0
        while True:
            iterations += 1
            if iterations > max_iter:
                raise RuntimeError(f"active-set solver exceeded {max_iter} iterations")
            Q1, Q2, R = _active_basis(G[active].T)
            z = Q2 @ (Q2.T @ n_p)
            rv = np.linalg.solve(R, Q1.T @ n_p) if active else np.zeros(0)
            pos = np.flatnonzero(rv > eps)
            if pos.size:
                ratios = u[pos] / rv[pos]
                j = int(pos[np.argmin(ratios)])
                t1 = float(u[j] / rv[j])
            else:
                j, t1 = -1, np.inf
            zn = float(z @ n_p)
            if zn <= eps:
                # n_p lies in the span of the active normals: dual step only
                if j < 0:
                    raise InfeasibleError(
                        f"constraint set is infeasible (certified at row {labels[p]})",
                        row=p,
                        label=labels[p],
                    )
                u = u - t1 * rv
                u_p += t1
                del active[j]
                u = np.delete(u, j)
                continue
            t2 = -float(n_p @ w - h[p]) / zn
            t = min(t1, t2)
            w = w + t * z
            u = u - t * rv
            u_p += t
            if t2 <= t1:
                active.append(p)
                u = np.append(u, u_p)
                break
            del active[j]
            u = np.delete(u, j)


def _check_dims(e, c):
    e = np.asarray(e, dtype=float).reshape(-1)
    if e.shape[0] != c.n:
        raise DimensionError(f"expectation has length {e.shape[0]} but constraints act on {c.n} coordinates")
    return e


def whitened_project(e, factor, c, feas_tol=FEAS_TOL, max_iter=None):
    """Project ``e`` onto ``c`` in the metric whose square root is ``factor.sqrt``."""
    e = _check_dims(e, c)
    if factor.n != c.n:
        raise DimensionError(f"metric has size {factor.n} but constraints act on {c.n} coordinates")
    k = c.k
    if satisfies(c, e, feas_tol):
        return ProjectionResult(e.copy(), (), np.zeros(k), 0.0, 0)
    L = factor.q[:, : factor.rank] * np.sqrt(factor.lam[: factor.rank])
    G = c.a @ L
    h = c.b - c.a @ e
    gnorm = np.linalg.norm(G, axis=1)
    anorm = np.linalg.norm(c.a, axis=1)
    lscale = np.sqrt(factor.lam[0]) if factor.lam.size else 0.0
    pinned = gnorm <= 1e-12 * anorm * max(lscale, 1e-300)
    bad = np.flatnonzero(pinned & (h > feas_tol))
    if bad.size:
        i = int(bad[0])
        raise PinnedInfeasibleError(
            f"row {c.labels[i]} is violated along a zero-variance direction of the metric",
            row=i,
            label=c.labels[i],
        )
    rows = np.flatnonzero(~pinned)
    mu = np.zeros(k)
    if rows.size == 0:
        return ProjectionResult(e.copy(), (), mu, 0.0, 0)
    Gn = G[rows] / gnorm[rows, None]
    hn = h[rows] / gnorm[rows]
    # slack tolerance in whitened units, per row
    tol = 0.5 * feas_tol / gnorm[rows].max()
    if max_iter is None:
        max_iter = 100 * k
    w, act, u, iterations = _dual_active_set(Gn, hn, tol, max_iter, [c.labels[i] for i in rows])
    q = e + L @ w
    orig = rows[act]
    mu[orig] = 2.0 * np.clip(u, 0.0, None) / gnorm[orig]
    active = tuple(sorted(int(i) for i in orig))
    res = _kkt_from_factor(e, factor, c, q, mu)
    return ProjectionResult(q, active, mu, res, iterations)


def project(e, v, c, feas_tol=FEAS_TOL, rtol=RTOL, jitter=0.0, max_iter=None):
    """Metric projection of ``e`` onto the polyhedron ``c`` under ``v^{-1}``.

    ``jitter`` adds ``jitter * lambda_max * I`` to ``v`` before factorising,
    for callers who prefer regularising a singular metric to pinning.
    """
    v = symmetrize(v, name="v")
    e = _check_dims(e, c)
    if v.shape[0] != e.shape[0]:
        raise DimensionError(f"metric has size {v.shape[0]} but expectation has length {e.shape[0]}")
    if jitter:
        lmax = float(np.linalg.eigvalsh(v)[-1])
        v = v + jitter * max(lmax, 0.0) * np.eye(v.shape[0])
    factor = eigen_factorise(v, rtol)
    return whitened_project(e, factor, c, feas_tol=feas_tol, max_iter=max_iter)


def _kkt_from_factor(e, factor, c, q, mu):
    e = np.asarray(e, dtype=float)
    q = np.asarray(q, dtype=float)
    mu = np.asarray(mu, dtype=float)
    diff = q - e
    grad = 2.0 * factor.pinv() @ diff
    rhs = c.a.T @ mu
    rng = factor.range_basis
    null = factor.null_basis
    stat = rng @ (rng.T @ (grad - rhs))
    stat_res = np.max(np.abs(stat)) / (1.0 + max(np.max(np.abs(grad)), np.max(np.abs(rhs))))
    slack = c.a @ q - c.b
    prim_scale = 1.0 + max(np.max(np.abs(c.a @ q)), np.max(np.abs(c.b)))
    prim_res = max(0.0, -float(np.min(slack))) / prim_scale
    dual_res = max(0.0, -float(np.min(mu)))
    comp_res = float(np.max(np.abs(mu * slack))) / (prim_scale * (1.0 + float(np.max(np.abs(mu)))))
    pin_res = 0.0
    if null.shape[1]:
        pin_res = float(np.max(np.abs(null.T @ diff))) / (1.0 + float(np.max(np.abs(e))))
    return float(max(stat_res, prim_res, dual_res, comp_res, pin_res))


def kkt_residual(e, v, c, q, mu, rtol=RTOL):
    """Scaled optimality certificate for a candidate ``(q, mu)``.

    The maximum of stationarity ``|2 v^+ (q - e) - A' mu|`` (restricted to
    the range of ``v``), primal infeasibility, negative multipliers and
    complementary slackness, each divided by the magnitude of the terms
    involved. When ``v`` is singular the component of ``q - e`` in its null
    space is also counted, since those directions are fixed.
    """
    factor = eigen_factorise(v, rtol)
    return _kkt_from_factor(e, factor, c, q, mu)
