"""Randomized weighted-Lasso problem families and their serialization.

The generated problem is ``min_x ||A x - b||_2^2 / (2 N) + ||W x||_1`` with
a sparse Gaussian ``A`` (each entry zero with a configured probability,
standard normal otherwise), standard normal ``b``, and diagonal weights
drawn uniformly from ``[0, alpha]``.  The metric comes from Gershgorin row
sums of ``H = A^T A / N``, which dominates the curvature of the smooth
part by the circle theorem, so the descent inequality holds by
construction.

Generation is a pure function of the spec: a seeded PCG64 generator is
split into one named stream per ingredient (sparsity pattern, matrix
values, right-hand side, weights), so problems are reproducible across
platforms and processes.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.io import mmread, mmwrite

from .model import Box, CompositeProblem, Metric, SmoothPart, WeightedL1, Zero

__all__ = [
    "LassoSpec",
    "LassoProblem",
    "gershgorin_metric",
    "generate",
    "generate_least_squares",
    "save_problem",
    "load_problem",
]

# Relative floor applied to Gershgorin row sums so that an all-zero column
# of A cannot produce a zero metric entry.
METRIC_FLOOR_REL = 1e-12

_FORMAT_NAME = "fistakit-lasso"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LassoSpec:
    """Parameters of one randomized instance family member.

    ``alpha`` scales the weights (``W_ii ~ Uniform[0, alpha]``) and
    ``sparsity`` is the probability that an entry of ``A`` is zero.
    Requires an underdetermined shape, ``n > N >= 1``.
    """

    N: int
    n: int
    alpha: float
    sparsity: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not (self.n > self.N >= 1):
            raise ValueError(f"need n > N >= 1, got N={self.N}, n={self.n}")
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError("sparsity must lie in [0, 1)")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class LassoProblem:
    """A generated instance: data matrices plus the derived composite problem."""

    A: sparse.csc_array
    b: np.ndarray
    weights: np.ndarray | None
    metric: Metric
    problem: CompositeProblem
    spec: LassoSpec | None = None

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @classmethod
    def build(
        cls,
        A,
        b,
        weights=None,
        metric: Metric | None = None,
        constraint: Box | None = None,
        spec: LassoSpec | None = None,
    ) -> "LassoProblem":
        """Assemble the composite problem for given data.

        ``metric=None`` computes the Gershgorin metric from ``A``.
        ``weights=None`` drops the l1 term entirely (plain least squares).
        """
        A = sparse.csc_array(A, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        N, n = A.shape
        if b.shape != (N,):
            raise ValueError(f"b has shape {b.shape}, expected ({N},)")
        if metric is None:
            metric = gershgorin_metric(A, N)
        AT = A.T.tocsr()

        def value(x):
            r = A @ x - b
            return 0.5 * float(np.dot(r, r)) / N

        def grad(x):
            return (AT @ (A @ x - b)) / N

        smooth = SmoothPart(value=value, grad=grad, dim=n)
        if weights is None:
            nonsmooth = Zero()
            w = None
        else:
            w = np.asarray(weights, dtype=np.float64)
            nonsmooth = WeightedL1(w)
        problem = CompositeProblem(
            smooth=smooth, nonsmooth=nonsmooth, metric=metric, constraint=constraint
        )
        return cls(A=A, b=b, weights=w, metric=metric, problem=problem, spec=spec)


def gershgorin_metric(A, N: int, floor_rel: float = METRIC_FLOOR_REL) -> Metric:
    """Diagonal metric with ``R_ii = sum_j |H_ij|`` for ``H = A^T A / N``.

    ``H`` is symmetric, so the row sums equal the column sums, which are
    accumulated block-wise without ever materializing ``H``.  Entries are
    floored at ``floor_rel`` times the largest row sum so a fully zero
    column of ``A`` still yields a positive definite metric (an all-zero
    ``A`` falls back to the identity).
    """
    A = sparse.csc_array(A, dtype=np.float64)
    n = A.shape[1]
    AT = A.T.tocsr()
    sums = np.zeros(n)
    block = max(1, min(n, 4096))
    for j0 in range(0, n, block):
        j1 = min(j0 + block, n)
        cols = abs(AT @ A[:, j0:j1])
        sums[j0:j1] = np.asarray(cols.sum(axis=0)).ravel()
    sums /= N
    top = sums.max() if n else 0.0
    if top <= 0.0:
        return Metric(np.ones(n))
    return Metric(np.maximum(sums, floor_rel * top))


def _streams(seed: int, count: int):
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s) for s in children]


def generate(spec: LassoSpec) -> LassoProblem:
    """Draw one instance of the family described by ``spec``.

    Deterministic given the seed: the pattern, values, right-hand side and
    weights each consume their own child stream, in that order.
    """
    rng_mask, rng_vals, rng_b, rng_w = _streams(spec.seed, 4)
    keep = rng_mask.random((spec.N, spec.n)) >= spec.sparsity
    vals = rng_vals.standard_normal((spec.N, spec.n))
    A = sparse.csc_array(np.where(keep, vals, 0.0))
    b = rng_b.standard_normal(spec.N)
    w = rng_w.uniform(0.0, spec.alpha, spec.n)
    return LassoProblem.build(A, b, weights=w, spec=spec)


def generate_least_squares(N: int, n: int, seed: int, sparsity: float = 0.0) -> LassoProblem:
    """Strongly convex least-squares instance (no l1 term), ``N >= n``.

    Companion family used to measure growth parameters with the
    eigenvalue oracle; the overdetermined Gaussian design is full rank
    with probability one.
    """
    if not (N >= n >= 1):
        raise ValueError(f"need N >= n >= 1, got N={N}, n={n}")
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must lie in [0, 1)")
    rng_mask, rng_vals, rng_b = _streams(seed, 3)
    keep = rng_mask.random((N, n)) >= sparsity
    vals = rng_vals.standard_normal((N, n))
    A = sparse.csc_array(np.where(keep, vals, 0.0))
    b = rng_b.standard_normal(N)
    return LassoProblem.build(A, b, weights=None)


def save_problem(lp: LassoProblem, path) -> None:
    """Write an instance as a one-line JSON header plus a Matrix Market body.

    The header carries the spec (when present), dimensions, and the dense
    arrays ``b`` and ``W``; the body stores ``A``.  All reals keep 17
    significant digits, enough for an exact float64 round trip.
    """
    header = {
        "format": _FORMAT_NAME,
        "version": _FORMAT_VERSION,
        "N": lp.N,
        "n": lp.n,
        "b": lp.b.tolist(),
        "weights": None if lp.weights is None else lp.weights.tolist(),
        "spec": None
        if lp.spec is None
        else {
            "N": lp.spec.N,
            "n": lp.spec.n,
            "alpha": lp.spec.alpha,
            "sparsity": lp.spec.sparsity,
            "seed": lp.spec.seed,
        },
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("ascii"))
        fh.write(b"\n")
        mmwrite(fh, sparse.coo_array(lp.A), precision=17)


def load_problem(path) -> LassoProblem:
    """Read an instance written by :func:`save_problem`."""
    with open(path, "rb") as fh:
        first = fh.readline()
        try:
            header = json.loads(first.decode("ascii"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: not a problem file (bad header): {exc}") from exc
        if header.get("format") != _FORMAT_NAME:
            raise ValueError(f"{path}: unrecognized format {header.get('format')!r}")
        if header.get("version") != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {header.get('version')!r}")
        A = sparse.csc_array(mmread(io.BytesIO(fh.read())))
    b = np.asarray(header["b"], dtype=np.float64)
    weights = header.get("weights")
    spec_doc = header.get("spec")
    spec = None if spec_doc is None else LassoSpec(**spec_doc)
    if A.shape != (header["N"], header["n"]):
        raise ValueError(f"{path}: matrix shape {A.shape} disagrees with header")
    return LassoProblem.build(A, b, weights=weights, spec=spec)
