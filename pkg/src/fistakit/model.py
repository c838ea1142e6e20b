"""Composite problem model: metric, prox toolbox, and the composite gradient map.

A problem is the sum of a smooth convex function ``h`` and a nonsmooth
closed convex term ``psi``, minimized over a constraint set ``X`` that is
either all of space or a box.  Smoothness is measured against a diagonal
positive definite metric ``R``::

    h(x) <= h(y) + <grad h(y), x - y> + 0.5 * ||x - y||_R^2

The central operation is the composite gradient map at a point ``y``: the
unique minimizer ``y_plus`` of ``psi(x) + <grad h(y), x - y> +
0.5 * ||x - y||_R^2`` over ``X``, together with ``g(y) = R (y - y_plus)``.
``g(y) = 0`` characterizes optimality, and ``||g(y)||_*`` (the R-inverse
weighted norm) is the natural residual for stopping rules.

Everything here is immutable after construction and safe to share across
concurrent solver runs; all operations are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Metric",
    "Box",
    "SmoothPart",
    "Zero",
    "WeightedL1",
    "BoxIndicator",
    "CompositeProblem",
    "ProxStep",
    "ProxCounter",
    "soft_threshold",
    "dual_norm",
    "composite_gradient_map",
    "objective",
    "check_descent_lemma",
    "check_convexity",
]


def _as_locked_vector(v, name: str) -> np.ndarray:
    arr = np.array(v, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got ndim={arr.ndim}")
    arr.setflags(write=False)
    return arr


def soft_threshold(t, lam):
    """Shrinkage operator ``sign(t) * max(|t| - lam, 0)``, elementwise.

    Ties at ``|t| == lam`` map to 0 exactly.  This is the closed-form prox
    of a (weighted) l1 term under a diagonal metric.
    """
    return np.sign(t) * np.maximum(np.abs(t) - lam, 0.0)


@dataclass(frozen=True)
class Metric:
    """Diagonal positive definite metric R.

    Defines the primal norm ``||x||_R = sqrt(sum R_ii x_i^2)`` and its dual
    ``||v||_* = sqrt(sum v_i^2 / R_ii)``.  Every diagonal entry must be
    strictly positive and finite; degenerate entries are rejected here
    rather than patched (generators are responsible for flooring).
    """

    diag: np.ndarray

    def __post_init__(self):
        arr = _as_locked_vector(self.diag, "diag")
        if arr.size == 0:
            raise ValueError("metric diagonal must be nonempty")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("metric diagonal entries must be finite and > 0")
        object.__setattr__(self, "diag", arr)

    @property
    def dim(self) -> int:
        return self.diag.size

    def norm(self, x) -> float:
        """Weighted norm ``||x||_R``."""
        x = np.asarray(x, dtype=np.float64)
        return float(np.sqrt(np.dot(self.diag * x, x)))

    def dual_norm(self, v) -> float:
        """Dual norm ``||v||_* = ||v||_{R^-1}``."""
        v = np.asarray(v, dtype=np.float64)
        return float(np.sqrt(np.dot(v / self.diag, v)))


def dual_norm(metric: Metric, v) -> float:
    """Dual norm of ``v`` under ``metric``; see :meth:`Metric.dual_norm`."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (metric.dim,):
        raise ValueError(f"vector has shape {v.shape}, metric has dim {metric.dim}")
    return metric.dual_norm(v)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower, upper]``; entries may be -inf/+inf."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=np.float64, copy=True)
        hi = np.array(self.upper, dtype=np.float64, copy=True)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-D vectors of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lo > hi):
            raise ValueError("empty box: some lower bound exceeds its upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def intersect(self, other: "Box") -> "Box":
        return Box(np.maximum(self.lower, other.lower), np.minimum(self.upper, other.upper))


@dataclass(frozen=True)
class SmoothPart:
    """Smooth convex term ``h`` given by value and gradient callables.

    The callables must be pure: ``value(x) -> float`` and
    ``grad(x) -> ndarray`` of length ``dim``.  Smoothness with respect to
    the problem metric is the caller's responsibility; see
    :func:`check_descent_lemma` for a diagnostic.
    """

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")


class Zero:
    """Nonsmooth term identically equal to zero."""

    def value(self, x) -> float:
        return 0.0

    def __repr__(self):
        return "Zero()"


@dataclass(frozen=True)
class WeightedL1:
    """Weighted l1 term ``sum_i w_i |x_i|`` with weights ``w >= 0``."""

    weights: np.ndarray

    def __post_init__(self):
        w = _as_locked_vector(self.weights, "weights")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValueError("l1 weights must be finite and >= 0")
        object.__setattr__(self, "weights", w)

    def value(self, x) -> float:
        return float(np.dot(self.weights, np.abs(x)))


@dataclass(frozen=True)
class BoxIndicator:
    """Indicator of a box: 0 inside, +inf outside."""

    box: Box

    def value(self, x) -> float:
        return 0.0 if self.box.contains(x) else np.inf


@dataclass(frozen=True)
class CompositeProblem:
    """The triple (h, psi, X) with its metric R.

    ``constraint is None`` means X is all of space.  The nonsmooth part is
    one of :class:`Zero`, :class:`WeightedL1`, :class:`BoxIndicator`; this
    family keeps the prox separable and closed form under the diagonal
    metric.  Construction validates dimension agreement and that the
    intersection of X with dom(psi) is a nonempty box (or all of space).
    """

    smooth: SmoothPart
    nonsmooth: object
    metric: Metric
    constraint: Box | None = None

    def __post_init__(self):
        n = self.smooth.dim
        if self.metric.dim != n:
            raise ValueError(f"metric dim {self.metric.dim} != problem dim {n}")
        if isinstance(self.nonsmooth, WeightedL1) and self.nonsmooth.weights.size != n:
            raise ValueError("l1 weight vector length disagrees with problem dim")
        if isinstance(self.nonsmooth, BoxIndicator) and self.nonsmooth.box.dim != n:
            raise ValueError("indicator box dim disagrees with problem dim")
        if self.constraint is not None and self.constraint.dim != n:
            raise ValueError("constraint box dim disagrees with problem dim")
        # Intersection of the constraint set with dom(psi); Box.intersect
        # raises on emptiness, which makes infeasibility a construction error.
        feasible = self.constraint
        if isinstance(self.nonsmooth, BoxIndicator):
            inner = self.nonsmooth.box
            feasible = inner if feasible is None else feasible.intersect(inner)
        object.__setattr__(self, "_feasible_box", feasible)

    @property
    def dim(self) -> int:
        return self.smooth.dim

    @property
    def feasible_box(self) -> Box | None:
        """Intersection of X with dom(psi), or None when it is all of space."""
        return self._feasible_box


@dataclass(frozen=True)
class ProxStep:
    """Result of one composite gradient map evaluation at a point y.

    ``g = R (y - y_plus)`` exactly, and ``y_plus`` is feasible (it lies in
    the intersection of X with dom(psi)).
    """

    y_plus: np.ndarray
    g: np.ndarray
    g_dual_norm: float


class ProxCounter:
    """Mutable counter threaded through solvers to audit prox-call totals."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, k: int = 1):
        self.count += k


def _validate_point(problem: CompositeProblem, x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.dim,):
        raise ValueError(f"{name} has shape {x.shape}, expected ({problem.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def composite_gradient_map(
    problem: CompositeProblem, y, counter: ProxCounter | None = None
) -> ProxStep:
    """Composite gradient map at ``y``.

    Returns the unique minimizer over X of
    ``psi(x) + <grad h(y), x - y> + 0.5 * ||x - y||_R^2`` together with the
    composite gradient ``g(y) = R (y - y_plus)`` and its dual norm.  The
    diagonal metric makes the problem separable, so the solution is closed
    form per coordinate: an R-scaled gradient step, soft thresholding for a
    weighted-l1 term, then clipping to the feasible box.

    Parameters
    ----------
    problem : CompositeProblem
    y : array_like of length ``problem.dim``, finite
    counter : ProxCounter, optional
        Incremented once per call when given.

    Raises
    ------
    ValueError
        On dimension mismatch or non-finite input/gradient.
    """
    y = _validate_point(problem, y, "y")
    grad = np.asarray(problem.smooth.grad(y), dtype=np.float64)
    if grad.shape != y.shape:
        raise ValueError("gradient shape disagrees with problem dim")
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient is non-finite at the query point")

    diag = problem.metric.diag
    u = y - grad / diag
    if isinstance(problem.nonsmooth, WeightedL1):
        u = soft_threshold(u, problem.nonsmooth.weights / diag)
    box = problem.feasible_box
    if box is not None:
        u = box.clip(u)
    g = diag * (y - u)
    step = ProxStep(y_plus=u, g=g, g_dual_norm=problem.metric.dual_norm(g))
    if counter is not None:
        counter.add()
    return step


def objective(problem: CompositeProblem, x) -> float:
    """Extended-real objective ``f(x) = h(x) + psi(x)``.

    Returns +inf when ``x`` violates an indicator term or the constraint
    set, following the convention that the constrained problem is the
    unconstrained minimization of ``f + I_X``.
    """
    x = _validate_point(problem, x, "x")
    if problem.constraint is not None and not problem.constraint.contains(x):
        return np.inf
    psi = problem.nonsmooth.value(x)
    if np.isposinf(psi):
        return np.inf
    return float(problem.smooth.value(x)) + float(psi)


def check_descent_lemma(
    problem: CompositeProblem,
    rng: np.random.Generator,
    samples: int = 50,
    scale: float = 1.0,
    rel_tol: float = 1e-9,
) -> float:
    """Spot-check the quadratic upper bound of ``h`` against the metric.

    Samples point pairs and returns the worst relative violation of
    ``h(x) <= h(y) + <grad h(y), x - y> + 0.5 ||x - y||_R^2`` (0.0 when the
    bound holds everywhere sampled).  A positive return larger than
    ``rel_tol`` means the metric does not dominate the curvature of ``h``;
    the check only diagnoses, it does not repair the metric.
    """
    n = problem.dim
    worst = 0.0
    for _ in range(samples):
        x = scale * rng.standard_normal(n)
        y = scale * rng.standard_normal(n)
        hx = problem.smooth.value(x)
        hy = problem.smooth.value(y)
        gy = problem.smooth.grad(y)
        d = x - y
        bound = hy + float(np.dot(gy, d)) + 0.5 * float(np.dot(problem.metric.diag * d, d))
        denom = max(abs(hx), abs(bound), 1.0)
        worst = max(worst, (hx - bound) / denom)
    return worst if worst > rel_tol else 0.0


def check_convexity(
    problem: CompositeProblem,
    rng: np.random.Generator,
    samples: int = 50,
    scale: float = 1.0,
    rel_tol: float = 1e-9,
) -> float:
    """Spot-check first-order convexity of ``h`` on sampled pairs.

    Returns the worst relative violation of
    ``h(x) >= h(y) + <grad h(y), x - y>`` (0.0 when none).
    """
    n = problem.dim
    worst = 0.0
    for _ in range(samples):
        x = scale * rng.standard_normal(n)
        y = scale * rng.standard_normal(n)
        hx = problem.smooth.value(x)
        hy = problem.smooth.value(y)
        gy = problem.smooth.grad(y)
        lower = hy + float(np.dot(gy, x - y))
        denom = max(abs(hx), abs(lower), 1.0)
        worst = max(worst, (lower - hx) / denom)
    return worst if worst > rel_tol else 0.0
