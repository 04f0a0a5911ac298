"""Belief structures and the symmetric-matrix utilities built on them.

A belief structure is the second-order prior specification
``E[X], E[D], var[X], var[D], cov[X, D]``. Everything downstream
(adjustment, projection, generalised variance) consumes these five
arrays plus a handful of eigen-based helpers defined here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ValidationError

SYM_TOL = 1e-10
PSD_TOL = 1e-8
RTOL = 1e-10


def _as_matrix(m, name="matrix"):
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def asymmetry(m):
    """Largest absolute entry of ``m - m.T`` relative to the largest entry of ``m``."""
    m = np.asarray(m, dtype=float)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.T)) / scale)


def symmetrize(m, sym_tol=SYM_TOL, name="matrix"):
    """Return ``(m + m.T) / 2``, refusing inputs whose asymmetry exceeds ``sym_tol``."""
    m = _as_matrix(m, name)
    asym = asymmetry(m)
    if asym > sym_tol:
        raise ValidationError(f"{name} is not symmetric (relative asymmetry {asym:.3g} > {sym_tol:g})")
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class EigenFactorisation:
    """Eigen-decomposition ``m = q @ diag(lam) @ q.T`` with a fixed convention.

    Eigenvalues are sorted in descending order and every eigenvector is
    signed so its largest-magnitude entry is non-negative, which makes the
    square root ``q * sqrt(lam)`` reproducible.
    """

    q: np.ndarray
    lam: np.ndarray
    rank: int

    @property
    def n(self):
        return self.lam.shape[0]

    @property
    def sqrt(self):
        """The principal-axis square root ``L = Q sqrt(lambda)`` (``L @ L.T`` recovers the matrix)."""
        return self.q * np.sqrt(self.lam)

    @property
    def range_basis(self):
        return self.q[:, : self.rank]

    @property
    def null_basis(self):
        return self.q[:, self.rank :]

    def reconstruct(self):
        return (self.q * self.lam) @ self.q.T

    def pinv(self):
        lam_inv = np.zeros_like(self.lam)
        lam_inv[: self.rank] = 1.0 / self.lam[: self.rank]
        return (self.q * lam_inv) @ self.q.T


def _eigh_sorted(m):
    lam, q = np.linalg.eigh(m)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    q = q[:, order]
    # largest-magnitude entry of each column made non-negative
    idx = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[idx, np.arange(q.shape[1])])
    signs[signs == 0] = 1.0
    return lam, q * signs


def _rank(lam, rtol):
    lmax = lam[0] if lam.size else 0.0
    if lmax <= 0.0:
        return 0
    return int(np.sum(lam > rtol * lmax))


def eigen_factorise(m, rtol=RTOL, psd_tol=PSD_TOL, sym_tol=SYM_TOL):
    """Factorise a symmetric PSD matrix.

    Eigenvalues below zero but within ``psd_tol * lambda_max`` are treated as
    rounding noise and clipped to zero; anything more negative raises.
    """
    m = symmetrize(m, sym_tol)
    lam, q = _eigh_sorted(m)
    lmax = max(lam[0], 0.0) if lam.size else 0.0
    if lam.size and lam[-1] < -psd_tol * lmax:
        raise ValidationError(f"matrix is not positive semi-definite: eigenvalue {lam[-1]:.6g}")
    lam = np.clip(lam, 0.0, None)
    return EigenFactorisation(q=q, lam=lam, rank=_rank(lam, rtol))


def sym_pseudo_inverse(m, rtol=RTOL, sym_tol=SYM_TOL):
    """Moore-Penrose inverse of a symmetric matrix.

    Eigenvalues with ``|lambda_i| <= rtol * max|lambda|`` are treated as zero.
    """
    m = symmetrize(m, sym_tol)
    lam, q = np.linalg.eigh(m)
    cutoff = rtol * np.max(np.abs(lam)) if lam.size else 0.0
    keep = np.abs(lam) > cutoff
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    out = (q * inv) @ q.T
    return 0.5 * (out + out.T)


def nearest_psd(m, sym_tol=SYM_TOL):
    """Closest PSD matrix in Frobenius norm, by clipping negative eigenvalues to zero."""
    m = symmetrize(m, sym_tol)
    lam, q = np.linalg.eigh(m)
    if lam.size == 0 or lam[0] >= 0.0:
        return m
    out = (q * np.clip(lam, 0.0, None)) @ q.T
    return 0.5 * (out + out.T)


def mahalanobis_sq(d1, d2, v, rtol=RTOL):
    """Squared distance ``(d1 - d2)' v^+ (d1 - d2)``."""
    diff = np.asarray(d1, dtype=float) - np.asarray(d2, dtype=float)
    v = _as_matrix(v, "v")
    if diff.ndim != 1 or diff.shape[0] != v.shape[0]:
        raise DimensionError(f"vectors of length {diff.shape} do not match metric of size {v.shape[0]}")
    val = float(diff @ sym_pseudo_inverse(v, rtol) @ diff)
    return max(val, 0.0)


@dataclass(frozen=True)
class BeliefStructure:
    ex: np.ndarray
    ed: np.ndarray
    var_x: np.ndarray
    var_d: np.ndarray
    cov_xd: np.ndarray

    def __post_init__(self):
        for name in ("ex", "ed", "var_x", "var_d", "cov_xd"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.ex.ndim != 1:
            raise DimensionError("ex must be a vector")
        if self.ed.ndim != 1:
            raise DimensionError("ed must be a vector")
        n, m = self.ex.shape[0], self.ed.shape[0]
        if self.var_x.shape != (n, n):
            raise DimensionError(f"var_x has shape {self.var_x.shape} but ex has length {n}")
        if self.var_d.shape != (m, m):
            raise DimensionError(f"var_d has shape {self.var_d.shape} but ed has length {m}")
        if self.cov_xd.shape != (n, m):
            raise DimensionError(
                f"cov_xd has shape {self.cov_xd.shape} but ex/ed imply ({n}, {m})"
            )

    @property
    def n(self):
        return self.ex.shape[0]

    @property
    def m(self):
        return self.ed.shape[0]

    def joint_variance(self):
        return np.block([[self.var_x, self.cov_xd], [self.cov_xd.T, self.var_d]])

    def to_dict(self):
        return {
            "ex": self.ex.tolist(),
            "ed": self.ed.tolist(),
            "var_x": self.var_x.tolist(),
            "var_d": self.var_d.tolist(),
            "cov_xd": self.cov_xd.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        keys = {"ex", "ed", "var_x", "var_d", "cov_xd"}
        unknown = set(doc) - keys
        if unknown:
            raise ValidationError(f"unknown keys in belief document: {sorted(unknown)}")
        missing = keys - set(doc)
        if missing:
            raise ValidationError(f"belief document is missing keys: {sorted(missing)}")
        return cls(**{k: doc[k] for k in keys})

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __bool__(self):
        return self.passed

    def summary(self):
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status} {c.name}: {c.detail}")
        return "\n".join(lines)


def _psd_check(name, m, psd_tol):
    lam = np.linalg.eigvalsh(0.5 * (m + m.T))
    lmax = max(float(lam[-1]), 0.0) if lam.size else 0.0
    lmin = float(lam[0]) if lam.size else 0.0
    ok = lmin >= -psd_tol * lmax if lmax > 0 else lmin >= 0.0
    return Check(name, ok, lmin, f"min eigenvalue {lmin:.6g} (max {lmax:.6g})")


def validate(bs, sym_tol=SYM_TOL, psd_tol=PSD_TOL):
    """Check symmetry, definiteness and joint coherence of a belief structure.

    Dimension consistency is enforced when the structure is built, so a
    mismatched structure never reaches this function.
    """
    checks = []
    for name in ("var_x", "var_d"):
        asym = asymmetry(getattr(bs, name))
        checks.append(Check(f"{name} symmetric", asym <= sym_tol, asym, f"relative asymmetry {asym:.3g}"))
    checks.append(_psd_check("var_x psd", bs.var_x, psd_tol))
    checks.append(_psd_check("var_d psd", bs.var_d, psd_tol))
    checks.append(_psd_check("joint psd", bs.joint_variance(), psd_tol))
    return ValidationReport(checks)


def require_valid(bs, sym_tol=SYM_TOL, psd_tol=PSD_TOL):
    report = validate(bs, sym_tol, psd_tol)
    if not report.passed:
        raise ValidationError("invalid belief structure:\n" + report.summary())
    return report
