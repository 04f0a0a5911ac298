"""Generalised adjusted beliefs: projected expectation plus a shrunken variance.

The gap between the projected and the unconstrained expectation is
expressed in the principal-axis coordinates of the adjusted variance,
``z = L^+ (E^C - E)`` with ``L = Q sqrt(lambda)``. Each coordinate then
scales its axis of the variance by ``f(z_i)``, giving ``L diag(f(z)) L'``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import RTOL, eigen_factorise
from .errors import DimensionError, ValidationError
from .projection import FEAS_TOL, whitened_project


def cantelli(z):
    """``1 / (1 + z^2)``, the default shrink."""
    z = np.asarray(z, dtype=float)
    return 1.0 / (1.0 + z * z)


def gauss(z):
    """``exp(-z^2)``: lighter-tailed alternative to :func:`cantelli`."""
    z = np.asarray(z, dtype=float)
    return np.exp(-z * z)


_REGISTRY = {}


def check_shrink(f, grid_size=1000, z_max=1e6):
    """Raise unless ``f`` satisfies f(0)=1, f -> 0 at large |z| and is non-increasing in |z|.

    Monotonicity is read in |z|: shrink functions are expected to be even.
    """
    f0 = float(np.asarray(f(np.array([0.0])))[0])
    if f0 != 1.0:
        raise ValidationError(f"shrink function must equal 1 at z=0, got {f0!r}")
    tail = np.asarray(f(np.array([-z_max, z_max])), dtype=float)
    if np.any(tail > 1e-6):
        raise ValidationError(f"shrink function does not vanish at |z|={z_max:g}: {tail}")
    grid = np.concatenate([np.linspace(0.0, 10.0, grid_size // 2), np.geomspace(10.0, z_max, grid_size - grid_size // 2)])
    for sgn in (1.0, -1.0):
        vals = np.asarray(f(sgn * grid), dtype=float)
        if np.any(np.diff(vals) > 0.0):
            raise ValidationError("shrink function increases with |z|")
        if np.any((vals <= 0.0) & (grid <= 5.0)) or np.any(vals > 1.0):
            raise ValidationError("shrink function must take values in (0, 1]")


def register_shrink(name, f, validate=True):
    if validate:
        check_shrink(f)
    _REGISTRY[name] = f
    return f


def get_shrink(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValidationError(f"unknown shrink function {name!r}; known: {sorted(_REGISTRY)}") from None


def shrink_names():
    return sorted(_REGISTRY)


register_shrink("cantelli", cantelli)
register_shrink("gauss", gauss)


@dataclass(frozen=True)
class GeneralisedBeliefs:
    expectation: np.ndarray
    discrepancy: np.ndarray
    shrink: np.ndarray
    variance: np.ndarray

    def to_dict(self):
        return {
            "expectation": self.expectation.tolist(),
            "discrepancy": self.discrepancy.tolist(),
            "shrink": self.shrink.tolist(),
            "variance": self.variance.tolist(),
        }


def constraint_discrepancy(e_c, e, factor):
    """Coordinates of ``e_c - e`` in the orthonormalised principal axes; null axes get 0."""
    e_c = np.asarray(e_c, dtype=float).reshape(-1)
    e = np.asarray(e, dtype=float).reshape(-1)
    if e_c.shape != e.shape or e.shape[0] != factor.n:
        raise DimensionError(f"vectors of shape {e_c.shape}, {e.shape} do not match metric of size {factor.n}")
    z = np.zeros(factor.n)
    r = factor.rank
    z[:r] = (factor.q[:, :r].T @ (e_c - e)) / np.sqrt(factor.lam[:r])
    return z


def cantelli_shrink(z):
    return cantelli(z)


def generalised_variance(factor, shrink):
    shrink = np.asarray(shrink, dtype=float).reshape(-1)
    if shrink.shape[0] != factor.n:
        raise DimensionError(f"shrink has length {shrink.shape[0]}, expected {factor.n}")
    if np.any(shrink < 0.0) or np.any(shrink > 1.0):
        raise ValidationError("shrink entries must lie in (0, 1]")
    L = factor.sqrt
    out = (L * shrink) @ L.T
    return 0.5 * (out + out.T)


def generalise(adj, c, f=cantelli, feas_tol=FEAS_TOL, rtol=RTOL, max_iter=None):
    """Constrain adjusted beliefs to ``c``.

    ``f`` is a shrink function or the name of a registered one. When the
    adjusted expectation already lies in ``c`` the adjusted beliefs are
    returned unchanged.
    """
    if isinstance(f, str):
        f = get_shrink(f)
    factor = eigen_factorise(adj.variance, rtol)
    proj = whitened_project(adj.expectation, factor, c, feas_tol=feas_tol, max_iter=max_iter)
    n = factor.n
    if proj.iterations == 0:
        return GeneralisedBeliefs(adj.expectation.copy(), np.zeros(n), np.ones(n), adj.variance.copy())
    z = constraint_discrepancy(proj.q_star, adj.expectation, factor)
    s = np.ones(n)
    r = factor.rank
    s[:r] = np.asarray(f(z[:r]), dtype=float)
    return GeneralisedBeliefs(proj.q_star, z, s, generalised_variance(factor, s))
