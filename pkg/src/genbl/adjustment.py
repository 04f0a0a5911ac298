"""Bayes linear adjustment of a belief structure by data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import RTOL, BeliefStructure, require_valid, sym_pseudo_inverse
from .errors import DimensionError, ValidationError


@dataclass(frozen=True)
class AdjustedBeliefs:
    """Adjusted beliefs about X after observing ``d``.

    ``expectation`` is the observed adjusted expectation, ``variance`` the
    adjusted variance, and ``h0 + H0 @ D`` the affine adjusted expectation
    as a random quantity.
    """

    expectation: np.ndarray
    variance: np.ndarray
    h0: np.ndarray
    H0: np.ndarray

    def to_dict(self):
        return {
            "expectation": self.expectation.tolist(),
            "variance": self.variance.tolist(),
            "h0": self.h0.tolist(),
            "H0": self.H0.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(*(np.asarray(doc[k], dtype=float) for k in ("expectation", "variance", "h0", "H0")))


def _datum(bs, d):
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.shape[0] != bs.m:
        raise DimensionError(f"datum has length {d.shape[0]} but the belief structure has m={bs.m}")
    return d


def _gain(bs, rtol):
    return bs.cov_xd @ sym_pseudo_inverse(bs.var_d, rtol)


def _sym(m):
    return 0.5 * (m + m.T)


def adjusted_expectation(bs, d, rtol=RTOL):
    """``E[X] + cov[X,D] var[D]^+ (d - E[D])``."""
    d = _datum(bs, d)
    return bs.ex + _gain(bs, rtol) @ (d - bs.ed)


def adjusted_variance(bs, rtol=RTOL):
    """``var[X] - cov[X,D] var[D]^+ cov[D,X]``; does not depend on the observed data."""
    return _sym(bs.var_x - _gain(bs, rtol) @ bs.cov_xd.T)


def adjust(bs, d, rtol=RTOL, check=True):
    if check:
        require_valid(bs)
    d = _datum(bs, d)
    H0 = _gain(bs, rtol)
    h0 = bs.ex - H0 @ bs.ed
    expectation = bs.ex + H0 @ (d - bs.ed)
    variance = _sym(bs.var_x - H0 @ bs.cov_xd.T)
    return AdjustedBeliefs(expectation=expectation, variance=variance, h0=h0, H0=H0)


def orthogonality_residual(bs, adj):
    """``cov[X - E_D[X], D] = cov[X,D] - H0 var[D]``; zero when ``var[D]`` is full rank."""
    return bs.cov_xd - adj.H0 @ bs.var_d


def _check_partition(m, i1, i2):
    i1 = [int(i) for i in i1]
    i2 = [int(i) for i in i2]
    if sorted(i1 + i2) != list(range(m)):
        raise ValidationError(f"index sets {i1} and {i2} do not partition range({m})")
    return np.array(i1, dtype=int), np.array(i2, dtype=int)


def partial_structure(bs, d, i1, i2, rtol=RTOL):
    """Belief structure over (X, D[i2]) after adjusting everything by ``D[i1] = d[i1]``."""
    d = _datum(bs, d)
    v11 = bs.var_d[np.ix_(i1, i1)]
    v12 = bs.var_d[np.ix_(i1, i2)]
    v22 = bs.var_d[np.ix_(i2, i2)]
    p11 = sym_pseudo_inverse(v11, rtol)
    gx = bs.cov_xd[:, i1] @ p11
    gd = v12.T @ p11
    innov = d[i1] - bs.ed[i1]
    return BeliefStructure(
        ex=bs.ex + gx @ innov,
        ed=bs.ed[i2] + gd @ innov,
        var_x=_sym(bs.var_x - gx @ bs.cov_xd[:, i1].T),
        var_d=_sym(v22 - gd @ v12),
        cov_xd=bs.cov_xd[:, i2] - gx @ v12,
    ), gx, gd


def adjust_sequential(bs, partition, d, rtol=RTOL, check=True):
    """Adjust by ``D[I1]`` then by ``D[I2]`` using the intermediate adjusted structure.

    The result coincides with ``adjust(bs, d)``; ``h0`` and ``H0`` are
    recomposed so that they refer to the full data vector.
    """
    if check:
        require_valid(bs)
    d = _datum(bs, d)
    i1, i2 = _check_partition(bs.m, *partition)
    if i2.size == 0:
        sub = BeliefStructure(bs.ex, bs.ed[i1], bs.var_x, bs.var_d[np.ix_(i1, i1)], bs.cov_xd[:, i1])
        first = adjust(sub, d[i1], rtol, check=False)
        H0 = np.zeros((bs.n, bs.m))
        H0[:, i1] = first.H0
        return AdjustedBeliefs(first.expectation, first.variance, bs.ex - H0 @ bs.ed, H0)
    inter, gx, gd = partial_structure(bs, d, i1, i2, rtol)
    second = adjust(inter, d[i2], rtol, check=False)
    H0 = np.zeros((bs.n, bs.m))
    H0[:, i2] = second.H0
    H0[:, i1] = gx - second.H0 @ gd
    return AdjustedBeliefs(second.expectation, second.variance, bs.ex - H0 @ bs.ed, H0)
