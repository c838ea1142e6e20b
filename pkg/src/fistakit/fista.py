"""Accelerated proximal gradient loop (FISTA) with pluggable exit conditions.

One solver call runs the classic momentum recursion from a start point
``z``::

    y_0 = x_0 = z_plus                      (one prox at z)
    repeat  k = 1, 2, ...
        x_k = prox step at y_{k-1}          (one prox per iteration)
        t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2
        y_k = x_k + ((t_{k-1} - 1) / t_k) (x_k - x_{k-1})
        evaluate the exit condition
    until exit is true and k >= k_min

Exit conditions are pure predicates over the iteration history; the
concrete restart conditions live in :mod:`fistakit.restart`.  The loop is
guarded by a hard iteration budget, and can optionally abort the moment
``||g(y_{k-1})||_*`` drops below a tolerance, reusing the prox already
computed in the x-update (the usual cheap stopping rule, and the one the
restart drivers use in early-exit mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import CompositeProblem, ProxCounter, ProxStep, composite_gradient_map, objective

__all__ = [
    "DEFAULT_ITERATION_BUDGET",
    "TSequence",
    "IterationState",
    "SolveTrace",
    "FistaResult",
    "ExitCondition",
    "gradient_norm_below",
    "fista",
]

DEFAULT_ITERATION_BUDGET = 10_000_000


class TSequence:
    """Momentum coefficient sequence t_0 = 1, t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2.

    Satisfies ``t_{k-1}^2 = t_k^2 - t_k`` and ``t_k >= (k + 2) / 2``.
    """

    __slots__ = ("t_prev", "t_curr", "k")

    def __init__(self):
        self.t_prev = 1.0
        self.t_curr = 1.0
        self.k = 0

    def step(self) -> None:
        t = self.t_curr
        self.t_prev = t
        self.t_curr = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        self.k += 1

    @property
    def momentum(self) -> float:
        """Extrapolation weight ``(t_{k-1} - 1) / t_k`` after ``k`` steps."""
        return (self.t_prev - 1.0) / self.t_curr

    @staticmethod
    def generate(k_max: int) -> np.ndarray:
        """Array ``[t_0, ..., t_{k_max}]``; loop kept tight for large k."""
        out = np.empty(k_max + 1)
        t = 1.0
        out[0] = t
        sqrt = math.sqrt
        for k in range(1, k_max + 1):
            t = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
            out[k] = t
        return out


@dataclass
class IterationState:
    """Read-only view of the loop state handed to exit conditions.

    ``f_history[i]`` is ``f(x_i)`` for ``i = 0..k`` (``x_0 = z_plus``), and
    ``last_prox`` is the prox step computed at ``y_{k-1}`` this iteration,
    so ``g(y_{k-1})`` is available without recomputation.  Conditions must
    not mutate any field.
    """

    k: int
    x_prev: np.ndarray
    x_curr: np.ndarray
    y_curr: np.ndarray
    f_history: list[float]
    last_prox: ProxStep


ExitCondition = Callable[[IterationState], bool]


def gradient_norm_below(eps: float) -> ExitCondition:
    """Exit condition ``||g(y_{k-1})||_* <= eps``."""
    if eps <= 0:
        raise ValueError("eps must be > 0")

    def condition(state: IterationState) -> bool:
        return state.last_prox.g_dual_norm <= eps

    return condition


@dataclass
class SolveTrace:
    """Per-iteration record of one solver call.

    ``f_vals[i]`` and ``g_norms[i]`` belong to iteration ``k = i + 1``:
    the objective at ``x_k`` and ``||g(y_{k-1})||_*``.  ``x0``/``f0``
    describe the post-prox start point ``x_0 = z_plus``.
    """

    x0: np.ndarray
    f0: float
    f_vals: list[float] = field(default_factory=list)
    g_norms: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.f_vals)

    @property
    def f_history(self) -> list[float]:
        """``[f(x_0), f(x_1), ..., f(x_n)]``."""
        return [self.f0, *self.f_vals]


@dataclass
class FistaResult:
    """Outcome of one solver call: ``x`` is the final iterate, ``n`` its index.

    ``prox_calls`` is always ``n + 1`` (the iterations plus the
    initialization prox at z).  ``aborted`` marks an early exit on the
    gradient tolerance; ``exhausted`` marks a budget stop.
    """

    x: np.ndarray
    n: int
    trace: SolveTrace
    aborted: bool
    exhausted: bool
    init_g_dual_norm: float
    prox_calls: int

    @property
    def f_final(self) -> float:
        return self.trace.f_vals[-1] if self.trace.f_vals else self.trace.f0

    @property
    def last_g_dual_norm(self) -> float:
        """Most recent ``||g||_*`` seen (the qualifying value on abort)."""
        return self.trace.g_norms[-1] if self.trace.g_norms else self.init_g_dual_norm


def fista(
    problem: CompositeProblem,
    z,
    k_min: int = 0,
    exit_condition: ExitCondition | None = None,
    budget: int = DEFAULT_ITERATION_BUDGET,
    abort_tol: float | None = None,
    counter: ProxCounter | None = None,
) -> FistaResult:
    """Run the accelerated proximal gradient loop from ``z``.

    The loop exits at the first ``k >= k_min`` with ``exit_condition``
    true, or when the iteration ``budget`` runs out (flagged, not an
    error).  With ``abort_tol`` set, the call additionally returns the
    moment any computed prox satisfies ``||g||_* <= abort_tol``, including
    the initialization prox; this abort bypasses both ``k_min`` and the
    exit condition.

    Parameters
    ----------
    problem : CompositeProblem
    z : array_like
        Start point; the loop actually starts at ``x_0 = z_plus``.
    k_min : int
        Minimum iteration count before the exit condition may fire.
    exit_condition : callable, optional
        Pure predicate over :class:`IterationState`; ``None`` never exits.
    budget : int
        Hard cap on iterations for this call.
    abort_tol : float, optional
        Gradient dual-norm tolerance for the early abort.
    counter : ProxCounter, optional
        Shared prox-call counter (one init prox plus one per iteration).
    """
    if k_min < 0:
        raise ValueError("k_min must be >= 0")
    if budget < 0:
        raise ValueError("budget must be >= 0")

    init = composite_gradient_map(problem, np.asarray(z, dtype=np.float64), counter)
    x = init.y_plus
    f0 = objective(problem, x)
    if not math.isfinite(f0):
        raise ValueError("non-finite objective at the start point")
    trace = SolveTrace(x0=x, f0=f0)

    if abort_tol is not None and init.g_dual_norm <= abort_tol:
        return FistaResult(
            x=x, n=0, trace=trace, aborted=True, exhausted=False,
            init_g_dual_norm=init.g_dual_norm, prox_calls=1,
        )

    f_history = [f0]
    state = IterationState(
        k=0, x_prev=x, x_curr=x, y_curr=x, f_history=f_history, last_prox=init
    )
    ts = TSequence()
    y = x
    x_prev = x
    k = 0
    aborted = False
    exhausted = False

    while True:
        if k >= budget:
            exhausted = True
            break
        k += 1
        prox = composite_gradient_map(problem, y, counter)
        x_prev, x = x, prox.y_plus
        fk = objective(problem, x)
        if not math.isfinite(fk):
            raise ValueError(f"non-finite objective at iteration {k}")
        f_history.append(fk)
        trace.f_vals.append(fk)
        trace.g_norms.append(prox.g_dual_norm)
        if abort_tol is not None and prox.g_dual_norm <= abort_tol:
            aborted = True
            break
        ts.step()
        y = x + ts.momentum * (x - x_prev)
        state.k = k
        state.x_prev = x_prev
        state.x_curr = x
        state.y_curr = y
        state.last_prox = prox
        if exit_condition is not None and k >= k_min and exit_condition(state):
            break

    return FistaResult(
        x=x, n=k, trace=trace, aborted=aborted, exhausted=exhausted,
        init_g_dual_norm=init.g_dual_norm, prox_calls=k + 1,
    )
