"""Polyhedral constraint sets ``{q : A q >= b}``."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError


@dataclass(frozen=True)
class ConstraintSet:
    a: np.ndarray
    b: np.ndarray
    labels: tuple

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if a.ndim != 2:
            raise DimensionError(f"constraint matrix must be 2-d, got shape {a.shape}")
        k = a.shape[0]
        if k < 1:
            raise ValidationError("a constraint set needs at least one row")
        if b.shape[0] != k:
            raise DimensionError(f"{k} constraint rows but {b.shape[0]} bounds")
        labels = tuple(self.labels) if self.labels is not None else tuple(f"row[{i}]" for i in range(k))
        if len(labels) != k:
            raise DimensionError(f"{k} constraint rows but {len(labels)} labels")
        zero = np.flatnonzero(~np.any(a != 0.0, axis=1))
        if zero.size:
            raise ValidationError(f"constraint row {labels[zero[0]]} is all zero")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValidationError("constraint coefficients must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.a.shape[1]

    @property
    def k(self):
        return self.a.shape[0]

    def slack(self, q):
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape[0] != self.n:
            raise DimensionError(f"point has length {q.shape[0]} but constraints act on {self.n} coordinates")
        return self.a @ q - self.b

    def __add__(self, other):
        return concat(self, other)

    def to_dict(self):
        return {"a": self.a.tolist(), "b": self.b.tolist(), "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["a"], doc["b"], doc.get("labels"))


@dataclass(frozen=True)
class Membership:
    ok: bool
    worst_row: int
    worst_label: str
    worst_slack: float

    def __bool__(self):
        return self.ok


def satisfies(c, q, tol=1e-9):
    """Membership test ``min(A q - b) >= -tol`` with the most-violated row."""
    s = c.slack(q)
    i = int(np.argmin(s))
    return Membership(bool(s[i] >= -tol), i, c.labels[i], float(s[i]))


def concat(*sets):
    n = {c.n for c in sets}
    if len(n) != 1:
        raise DimensionError(f"cannot combine constraint sets over {sorted(n)} coordinates")
    return ConstraintSet(
        np.vstack([c.a for c in sets]),
        np.concatenate([c.b for c in sets]),
        sum((c.labels for c in sets), ()),
    )


def nonneg_cone(n):
    if n < 1:
        raise ValidationError("non-negative cone needs n >= 1")
    return ConstraintSet(np.eye(n), np.zeros(n), tuple(f"nonneg[{i}]" for i in range(n)))


def monotone_partial(edges, n=None):
    """One row ``q_j - q_i >= 0`` per edge ``(i, j)`` meaning ``q_i <= q_j``."""
    edges = [(int(i), int(j)) for i, j in edges]
    if not edges:
        raise ValidationError("monotone constraint needs at least one edge")
    for i, j in edges:
        if i == j:
            raise ValidationError(f"self-loop edge ({i}, {j})")
        if min(i, j) < 0:
            raise ValidationError(f"negative index in edge ({i}, {j})")
    if n is None:
        n = max(max(e) for e in edges) + 1
    if max(max(e) for e in edges) >= n:
        raise DimensionError(f"edge index out of range for n={n}")
    a = np.zeros((len(edges), n))
    for r, (i, j) in enumerate(edges):
        a[r, i] = -1.0
        a[r, j] = 1.0
    return ConstraintSet(a, np.zeros(len(edges)), tuple(f"mono[{i}->{j}]" for i, j in edges))


def monotone_chain(order):
    """Non-decreasing along ``order``: ``q[order[i+1]] >= q[order[i]]``."""
    order = [int(i) for i in order]
    n = len(order)
    if sorted(order) != list(range(n)):
        raise ValidationError(f"order is not a permutation of range({n})")
    if n < 2:
        raise ValidationError("a monotone chain needs at least two points")
    return monotone_partial(list(zip(order[:-1], order[1:])), n)


def grid_edges(shape):
    """Edges of the coordinatewise partial order on a row-major grid."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    edges = []
    for axis in range(len(shape)):
        lo = np.moveaxis(idx, axis, 0)[:-1].reshape(-1)
        hi = np.moveaxis(idx, axis, 0)[1:].reshape(-1)
        edges.extend(zip(lo.tolist(), hi.tolist()))
    return edges


def box(lower, upper):
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    if lower.shape != upper.shape:
        raise DimensionError("lower and upper bounds differ in length")
    bad = np.flatnonzero(lower > upper)
    if bad.size:
        raise ValidationError(f"lower bound exceeds upper bound at coordinate {bad[0]}")
    n = lower.shape[0]
    rows, b, labels = [], [], []
    for i in range(n):
        if np.isfinite(lower[i]):
            rows.append(np.eye(n)[i])
            b.append(lower[i])
            labels.append(f"lower[{i}]")
    for i in range(n):
        if np.isfinite(upper[i]):
            rows.append(-np.eye(n)[i])
            b.append(-upper[i])
            labels.append(f"upper[{i}]")
    if not rows:
        raise ValidationError("box with all bounds infinite has no constraints")
    return ConstraintSet(np.array(rows), np.array(b), tuple(labels))


def second_difference(n, sign="convex"):
    """Unit-spacing curvature rows ``+-(q[i] - 2 q[i+1] + q[i+2]) >= 0``."""
    if n < 3:
        raise ValidationError("second differences need n >= 3")
    if sign not in ("convex", "concave"):
        raise ValidationError(f"sign must be 'convex' or 'concave', got {sign!r}")
    s = 1.0 if sign == "convex" else -1.0
    a = np.zeros((n - 2, n))
    for i in range(n - 2):
        a[i, i : i + 3] = s * np.array([1.0, -2.0, 1.0])
    return ConstraintSet(a, np.zeros(n - 2), tuple(f"{sign}[{i}]" for i in range(n - 2)))


def _bound(value, default, n):
    """Scalar or list bound; JSON null (missing) means unbounded."""
    if value is None:
        value = default
    elif isinstance(value, list):
        value = [default if v is None else v for v in value]
    return np.broadcast_to(np.asarray(value, dtype=float), (n,))


def from_spec(spec, n):
    """Build a constraint set from a JSON document or shorthand over ``n`` coordinates.

    Accepted forms are ``{"a": ..., "b": ..., "labels": ...}`` and the
    shorthands ``nonneg``, ``monotone_chain`` (optional ``order``),
    ``monotone_partial`` (``edges``), ``box`` (``lower``/``upper``, scalars
    broadcast), ``convex`` and ``concave``. A list combines several.
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    if isinstance(spec, list):
        return concat(*(from_spec(s, n) for s in spec))
    if "a" in spec:
        c = ConstraintSet.from_dict(spec)
        if c.n != n:
            raise DimensionError(f"constraint matrix has {c.n} columns, expected {n}")
        return c
    kind = spec.get("type")
    allowed = {
        "nonneg": {"type"},
        "monotone_chain": {"type", "order"},
        "monotone_partial": {"type", "edges"},
        "box": {"type", "lower", "upper"},
        "convex": {"type"},
        "concave": {"type"},
    }
    if kind not in allowed:
        raise ValidationError(f"unknown constraint type {kind!r}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise ValidationError(f"unexpected keys for {kind}: {sorted(extra)}")
    if kind == "nonneg":
        return nonneg_cone(n)
    if kind == "monotone_chain":
        return monotone_chain(spec.get("order", range(n)))
    if kind == "monotone_partial":
        return monotone_partial(spec["edges"], n)
    if kind == "box":
        return box(_bound(spec.get("lower"), -np.inf, n), _bound(spec.get("upper"), np.inf, n))
    return second_difference(n, kind)
