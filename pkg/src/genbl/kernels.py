"""Covariance functions for building belief structures over spatial and regression inputs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .belief import eigen_factorise
from .errors import DimensionError, ValidationError

EARTH_RADIUS_KM = 6371.0
SQRT5 = np.sqrt(5.0)
FAMILIES = ("sqexp", "matern52", "product", "kronecker_separable")
_ALIASES = {"squared_exponential": "sqexp"}


def _check_ls(length_scale):
    ls = np.asarray(length_scale, dtype=float)
    if np.any(~(ls > 0.0)):
        raise ValidationError(f"length scales must be positive, got {length_scale}")
    return ls


def _dist(x1, x2):
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape:
        raise DimensionError(f"points of shape {x1.shape} and {x2.shape}")
    return float(np.sqrt(np.sum((x1 - x2) ** 2)))


def sqexp_corr(r):
    """Squared-exponential correlation at scaled distance ``r = |x - x'| / l``."""
    return np.exp(-np.asarray(r, dtype=float) ** 2)


def matern52_corr(r):
    r = np.abs(np.asarray(r, dtype=float))
    return (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * np.exp(-SQRT5 * r)


_CORR = {"sqexp": sqexp_corr, "matern52": matern52_corr}


def sqexp(x1, x2, amplitude=1.0, length_scale=1.0):
    """``amplitude * exp(-|x1 - x2|^2 / l^2)``."""
    ls = float(_check_ls(length_scale))
    return float(amplitude * sqexp_corr(_dist(x1, x2) / ls))


def sqexp_gamma(x1, x2, eta, gamma):
    """The ``eta * exp(-gamma |x1 - x2|^2)`` parameterisation; ``gamma = l^-2``."""
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    return sqexp(x1, x2, eta, gamma ** -0.5)


def matern52(x1, x2, amplitude=1.0, length_scale=1.0):
    """Matérn-5/2: ``amplitude * (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r)`` with ``r = |x1 - x2| / l``."""
    ls = float(_check_ls(length_scale))
    return float(amplitude * matern52_corr(_dist(x1, x2) / ls))


def product_kernel(x1, x2, length_scales, base="matern52"):
    """Product over dimensions of one-dimensional correlations (unit amplitude)."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    ls = _check_ls(length_scales).reshape(-1)
    if not (x1.shape == x2.shape == ls.shape):
        raise DimensionError(f"points {x1.shape}, {x2.shape} and length scales {ls.shape} disagree")
    return float(np.prod(_CORR[base](np.abs(x1 - x2) / ls)))


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in kilometres on a 6371 km sphere (vectorised)."""
    lat1, lon1, lat2, lon2 = (np.asarray(v, dtype=float) for v in (lat1, lon1, lat2, lon2))
    for lat in (lat1, lat2):
        if np.any(np.abs(lat) > 90.0):
            raise ValidationError("latitude outside [-90, 90]")
    for lon in (lon1, lon2):
        if np.any(np.abs(lon) > 180.0):
            raise ValidationError("longitude outside [-180, 180]")
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(lon2 - lon1)
    a = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    d = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    return d if d.ndim else float(d)


@dataclass(frozen=True)
class KernelSpec:
    """Covariance hyperparameters.

    ``metric`` is ``"euclidean"`` or ``"haversine"``; with haversine, points
    are ``(lat, lon)`` pairs in degrees and length scales are in km. For
    ``product``, ``base`` names the per-dimension correlation. For
    ``kronecker_separable``, the first length scale belongs to the time
    axis and the rest to the product correlation over inputs.
    """

    family: str = "sqexp"
    amplitude: float = 1.0
    length_scales: tuple = (1.0,)
    nugget: float = 0.0
    metric: str = "euclidean"
    base: str = "matern52"

    def __post_init__(self):
        family = _ALIASES.get(self.family, self.family)
        if family not in FAMILIES:
            raise ValidationError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", family)
        ls = tuple(float(v) for v in np.atleast_1d(self.length_scales))
        _check_ls(ls)
        object.__setattr__(self, "length_scales", ls)
        if not self.amplitude >= 0.0:
            raise ValidationError("amplitude must be non-negative")
        if not self.nugget >= 0.0:
            raise ValidationError("nugget must be non-negative")
        if self.metric not in ("euclidean", "haversine"):
            raise ValidationError(f"unknown metric {self.metric!r}")
        if self.base not in _CORR:
            raise ValidationError(f"unknown base family {self.base!r}")

    @classmethod
    def from_gamma(cls, eta, gamma, nugget=0.0):
        if gamma <= 0:
            raise ValidationError("gamma must be positive")
        return cls("sqexp", eta, (gamma ** -0.5,), nugget)

    def to_dict(self):
        return {
            "family": self.family,
            "amplitude": self.amplitude,
            "length_scales": list(self.length_scales),
            "nugget": self.nugget,
            "metric": self.metric,
            "base": self.base,
        }

    @classmethod
    def from_dict(cls, doc):
        known = {"family", "amplitude", "length_scales", "nugget", "metric", "base"}
        extra = set(doc) - known
        if extra:
            raise ValidationError(f"unknown kernel keys: {sorted(extra)}")
        return cls(**doc)


def _points(points):
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2 or p.shape[0] == 0:
        raise DimensionError("points must be a non-empty list")
    return p


def _distances(pa, pb, metric):
    if metric == "haversine":
        if pa.shape[1] != 2 or pb.shape[1] != 2:
            raise DimensionError("haversine points must be (lat, lon) pairs")
        return haversine_km(pa[:, None, 0], pa[:, None, 1], pb[None, :, 0], pb[None, :, 1])
    diff = pa[:, None, :] - pb[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def gram_cross(points_a, points_b, spec):
    """Cross-covariance between two point sets; no nugget."""
    if spec.family == "kronecker_separable":
        (ta, pa), (tb, pb) = points_a, points_b
        kt = gram_cross(ta, tb, KernelSpec("matern52", spec.amplitude, spec.length_scales[:1]))
        cphi = gram_cross(pa, pb, KernelSpec("product", 1.0, spec.length_scales[1:], base=spec.base))
        return np.kron(kt, cphi)
    pa, pb = _points(points_a), _points(points_b)
    if pa.shape[1] != pb.shape[1]:
        raise DimensionError("point sets differ in dimension")
    ls = np.asarray(spec.length_scales)
    if spec.family == "product":
        if ls.shape[0] != pa.shape[1]:
            raise DimensionError(f"{ls.shape[0]} length scales for {pa.shape[1]}-dimensional points")
        out = np.ones((pa.shape[0], pb.shape[0]))
        for k in range(pa.shape[1]):
            out *= _CORR[spec.base](np.abs(pa[:, None, k] - pb[None, :, k]) / ls[k])
        return spec.amplitude * out
    if ls.shape[0] != 1:
        raise DimensionError(f"{spec.family} takes a single length scale")
    r = _distances(pa, pb, spec.metric) / ls[0]
    return spec.amplitude * _CORR[spec.family](r)


def gram(points, spec):
    """Covariance matrix of a point set, with ``spec.nugget`` added on the diagonal."""
    k = gram_cross(points, points, spec)
    k = 0.5 * (k + k.T)
    return k + spec.nugget * np.eye(k.shape[0])


def kronecker_cov(k_t, c_phi):
    """``k_t ⊗ c_phi``; both factors must be symmetric PSD."""
    for name, m in (("k_t", k_t), ("c_phi", c_phi)):
        try:
            eigen_factorise(m)
        except ValidationError as err:
            raise ValidationError(f"{name}: {err}") from None
    return np.kron(np.asarray(k_t, dtype=float), np.asarray(c_phi, dtype=float))
