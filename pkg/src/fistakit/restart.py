"""Restart drivers and their exit conditions.

Restarting re-invokes the accelerated loop from its latest iterate, which
resets the momentum sequence to ``t_0 = 1`` and suppresses the oscillation
the momentum causes on ill-conditioned problems.  Four exit conditions are
shipped:

* function scheme: restart when the objective stops decreasing,
* gradient scheme: restart when the prox step opposes recent movement,
* optimal-value scheme: restart once the gap to a known optimum has
  contracted by a factor e^2,
* lcr scheme: a history-based contraction test (no optimum needed) that,
  combined with a doubling rule on the minimum inner iteration count,
  yields a linearly convergent method on problems with quadratic
  functional growth.

All drivers stop once the composite gradient dual norm reaches the run's
``epsilon``.  In early-exit mode (the default) every prox evaluation is
checked and the run returns immediately on success; in strict mode only
the between-restart check is performed, at the cost of one extra prox per
restart.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .fista import (
    FistaResult,
    IterationState,
    SolveTrace,
    fista,
    gradient_norm_below,
)
from .model import CompositeProblem, ProxCounter, composite_gradient_map, objective

__all__ = [
    "DEFAULT_PROX_BUDGET",
    "Scheme",
    "RestartRun",
    "RestartRecord",
    "RestartTrace",
    "RestartResult",
    "exit_function_scheme",
    "exit_gradient_scheme",
    "exit_optimal_value_scheme",
    "exit_lcr",
    "no_restart_fista",
    "restart_fista",
    "lcr_fista",
    "run_scheme",
]

DEFAULT_PROX_BUDGET = 10_000_000


class Scheme(enum.Enum):
    """The five solver configurations the experiment harness compares."""

    NO_RESTART = "none"
    FUNCTION = "func"
    GRADIENT = "grad"
    OPTIMAL_VALUE = "opt"
    LCR = "lcr"

    @classmethod
    def from_name(cls, name: str) -> "Scheme":
        for s in cls:
            if s.value == name:
                return s
        raise ValueError(f"unknown scheme {name!r}; expected one of "
                         f"{[s.value for s in cls]}")


def exit_function_scheme(state: IterationState) -> bool:
    """True iff the objective failed to decrease: ``f(x_k) >= f(x_{k-1})``."""
    return state.f_history[state.k] >= state.f_history[state.k - 1]


def exit_gradient_scheme(state: IterationState) -> bool:
    """True iff ``<g(y_{k-1}), x_{k-1} - x_k> <= 0``.

    The prox step has stopped being aligned with the recent movement, the
    telltale of momentum overshoot.
    """
    g = state.last_prox.g
    return float(np.dot(g, state.x_prev - state.x_curr)) <= 0.0


def exit_optimal_value_scheme(state: IterationState, f_star: float) -> bool:
    """True iff ``f(x_k) - f_star <= (f(x_0) - f_star) / e^2``.

    Requires the optimal value; the call contracts the optimality gap by
    at least e^2 before restarting.
    """
    return state.f_history[state.k] - f_star <= (state.f_history[0] - f_star) / (math.e ** 2)


def exit_lcr(state: IterationState) -> bool:
    """History-based contraction test with pivot ``m = floor(k/2) + 1``.

    True iff both ``f(x_m) - f(x_k) <= (f(x_0) - f(x_m)) / e`` and
    ``f(x_k) <= f(x_0)``.  At ``k = 1`` the pivot equals ``k`` and the
    first inequality degenerates to ``0 <= (f(x_0) - f(x_1)) / e``, so the
    condition can fire after a single decreasing iteration; the formula is
    applied literally.
    """
    fh = state.f_history
    k = state.k
    m = k // 2 + 1
    return (fh[m] - fh[k] <= (fh[0] - fh[m]) / math.e) and (fh[k] <= fh[0])


@dataclass(frozen=True)
class RestartRun:
    """Configuration of one restart-scheme run.

    ``early_exit`` selects the stopping style: when True every computed
    prox is tested against ``epsilon`` and the run aborts on success; when
    False the test happens only between restarts, via one extra counted
    prox at each restart point.  ``k_min`` applies to the inner calls of
    the function/gradient/optimal-value schemes (the lcr scheme manages
    its own minimum via the doubling rule).
    """

    scheme: Scheme
    epsilon: float
    r0: np.ndarray
    early_exit: bool = True
    k_min: int = 0
    f_star: float | None = None
    budget: int = DEFAULT_PROX_BUDGET

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.k_min < 0:
            raise ValueError("k_min must be >= 0")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.scheme is Scheme.OPTIMAL_VALUE:
            if self.f_star is None or not math.isfinite(self.f_star):
                raise ValueError("the optimal-value scheme requires a finite f_star")
        r0 = np.array(self.r0, dtype=np.float64, copy=True)
        if r0.ndim != 1:
            raise ValueError("r0 must be a 1-D vector")
        r0.setflags(write=False)
        object.__setattr__(self, "r0", r0)


@dataclass
class RestartRecord:
    """Per-restart summary row.

    ``j = 0`` describes the raw start point (zero iterations).  ``n_obs``
    is the iteration count the inner call actually ran; ``n_eff`` is the
    value carried to the next call's ``k_min`` (differs from ``n_obs``
    only for the lcr scheme after a doubling step).  ``g_dual_norm`` is
    ``||g(r_j)||_*`` and is NaN when the run ended before that prox was
    ever evaluated (the final record in early-exit mode).
    """

    j: int
    n_obs: int
    n_eff: int
    f_r: float
    g_dual_norm: float = math.nan


@dataclass
class RestartTrace:
    """Aggregate trace of one run: restart records plus inner traces."""

    records: list[RestartRecord] = field(default_factory=list)
    segments: list[SolveTrace] = field(default_factory=list)
    total_prox_calls: int = 0
    outer_checks: int = 0
    final_g_norm: float = math.nan
    exhausted: bool = False

    @property
    def total_iterations(self) -> int:
        """Sum of observed inner iteration counts (the benchmark quantity)."""
        return sum(rec.n_obs for rec in self.records)

    @property
    def calls(self) -> int:
        """Number of inner solver invocations (each costs one init prox)."""
        return len(self.segments)

    def iteration_rows(self):
        """Yield ``(k, f(x_k), ||g(y_{k-1})||_*)`` with a global k across restarts."""
        k = 0
        for seg in self.segments:
            for f_val, g_val in zip(seg.f_vals, seg.g_norms):
                k += 1
                yield k, f_val, g_val


@dataclass
class RestartResult:
    """Final iterate and trace of a restart run."""

    r_star: np.ndarray
    trace: RestartTrace

    @property
    def exhausted(self) -> bool:
        return self.trace.exhausted


def _inner_budget(run: RestartRun, counter: ProxCounter) -> int:
    # Reserve one prox for the initialization of the upcoming call.
    return max(run.budget - counter.count - 1, 0)


def _finish(run: RestartRun, r, trace: RestartTrace, counter: ProxCounter) -> RestartResult:
    trace.total_prox_calls = counter.count
    return RestartResult(r_star=r, trace=trace)


def _append_call(trace: RestartTrace, j: int, res: FistaResult, n_eff: int) -> RestartRecord:
    # The init prox of this call evaluates g at the previous restart point.
    trace.records[-1].g_dual_norm = res.init_g_dual_norm
    rec = RestartRecord(j=j, n_obs=res.n, n_eff=n_eff, f_r=res.f_final)
    trace.records.append(rec)
    trace.segments.append(res.trace)
    return rec


def no_restart_fista(problem: CompositeProblem, run: RestartRun) -> RestartResult:
    """Baseline: a single accelerated call stopped on the gradient norm."""
    counter = ProxCounter()
    trace = RestartTrace(records=[RestartRecord(j=0, n_obs=0, n_eff=0,
                                                f_r=objective(problem, run.r0))])
    res = fista(
        problem,
        run.r0,
        k_min=run.k_min,
        exit_condition=gradient_norm_below(run.epsilon),
        budget=_inner_budget(run, counter),
        abort_tol=run.epsilon if run.early_exit else None,
        counter=counter,
    )
    _append_call(trace, 1, res, res.n)
    trace.exhausted = res.exhausted
    if not res.exhausted:
        # Both stopping styles fire on g(y_{k-1}), whose norm is the last
        # recorded one (or the init value when the start was already good).
        trace.final_g_norm = res.last_g_dual_norm
    return _finish(run, res.x, trace, counter)


def restart_fista(problem: CompositeProblem, run: RestartRun) -> RestartResult:
    """Standard restart loop for the function/gradient/optimal-value schemes.

    Repeatedly calls the inner solver from the latest restart point with
    the scheme's exit condition until ``||g(r_j)||_* <= epsilon``.
    """
    if run.scheme is Scheme.FUNCTION:
        condition = exit_function_scheme
    elif run.scheme is Scheme.GRADIENT:
        condition = exit_gradient_scheme
    elif run.scheme is Scheme.OPTIMAL_VALUE:
        condition = partial(exit_optimal_value_scheme, f_star=run.f_star)
    else:
        raise ValueError(f"restart_fista does not drive scheme {run.scheme}")

    counter = ProxCounter()
    abort_tol = run.epsilon if run.early_exit else None
    r = np.asarray(run.r0, dtype=np.float64)
    trace = RestartTrace(records=[RestartRecord(j=0, n_obs=0, n_eff=0,
                                                f_r=objective(problem, r))])
    j = 0
    while True:
        if counter.count >= run.budget:
            trace.exhausted = True
            break
        j += 1
        res = fista(
            problem, r,
            k_min=run.k_min,
            exit_condition=condition,
            budget=_inner_budget(run, counter),
            abort_tol=abort_tol,
            counter=counter,
        )
        rec = _append_call(trace, j, res, res.n)
        r = res.x
        if res.aborted:
            trace.final_g_norm = res.last_g_dual_norm
            break
        if res.exhausted:
            trace.exhausted = True
            break
        if not run.early_exit:
            if counter.count >= run.budget:
                trace.exhausted = True
                break
            check = composite_gradient_map(problem, r, counter)
            trace.outer_checks += 1
            rec.g_dual_norm = check.g_dual_norm
            if check.g_dual_norm <= run.epsilon:
                trace.final_g_norm = check.g_dual_norm
                break
    return _finish(run, r, trace, counter)


def lcr_fista(problem: CompositeProblem, run: RestartRun) -> RestartResult:
    """Restart loop with the history-based exit condition and doubling rule.

    The first call runs with ``k_min = 0``.  Each later call ``j`` runs
    with ``k_min`` equal to the previous effective count ``n_{j-1}``;
    whenever the decrease achieved by call ``j`` exceeds 1/e of the
    previous call's decrease, the effective count doubles
    (``n_j = 2 n_{j-1}``), which is what steers the restart period toward
    the unknown optimal one.  Iteration counts actually observed are kept
    separately from the effective ones so traces stay truthful.
    """
    counter = ProxCounter()
    abort_tol = run.epsilon if run.early_exit else None
    r = np.asarray(run.r0, dtype=np.float64)
    f_prev_gap: float | None = None  # f(r_{j-2}) - f(r_{j-1}) of the previous pair
    trace = RestartTrace(records=[RestartRecord(j=0, n_obs=0, n_eff=0,
                                                f_r=objective(problem, r))])
    j = 0
    n_eff = 0
    while True:
        if counter.count >= run.budget:
            trace.exhausted = True
            break
        j += 1
        f_before = trace.records[-1].f_r
        res = fista(
            problem, r,
            k_min=n_eff,
            exit_condition=exit_lcr,
            budget=_inner_budget(run, counter),
            abort_tol=abort_tol,
            counter=counter,
        )
        decrease = f_before - res.f_final
        if res.aborted or res.exhausted:
            # Truncated final call: no doubling decision is taken.
            _append_call(trace, j, res, res.n)
            r = res.x
            if res.aborted:
                trace.final_g_norm = res.last_g_dual_norm
            else:
                trace.exhausted = True
            break
        if j >= 2 and f_prev_gap is not None and decrease > f_prev_gap / math.e:
            n_eff = 2 * n_eff
        else:
            n_eff = res.n
        rec = _append_call(trace, j, res, n_eff)
        r = res.x
        f_prev_gap = decrease
        if not run.early_exit and j >= 2:
            # The literal loop shape checks the restart point only from the
            # second call onward.
            if counter.count >= run.budget:
                trace.exhausted = True
                break
            check = composite_gradient_map(problem, r, counter)
            trace.outer_checks += 1
            rec.g_dual_norm = check.g_dual_norm
            if check.g_dual_norm <= run.epsilon:
                trace.final_g_norm = check.g_dual_norm
                break
    return _finish(run, r, trace, counter)


def run_scheme(problem: CompositeProblem, run: RestartRun) -> RestartResult:
    """Dispatch a run to the driver matching its scheme."""
    if run.scheme is Scheme.NO_RESTART:
        return no_restart_fista(problem, run)
    if run.scheme is Scheme.LCR:
        return lcr_fista(problem, run)
    return restart_fista(problem, run)
