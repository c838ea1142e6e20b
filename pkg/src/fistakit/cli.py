"""Batch experiment harness and command line interface.

Reproduces the scheme-comparison protocol at configurable scale: generate
a family of randomized instances, compute a high-accuracy reference value
per instance, run the selected schemes from the zero start, and emit
iteration statistics plus per-instance convergence traces as CSV.  A
separate ``verify`` command re-reads the emitted files and checks every
applicable convergence guarantee against them.

Commands::

    fistakit run    --config FILE [overrides]   # full experiment
    fistakit gen    --out FILE [--seed ...]     # emit one problem file
    fistakit solve  PROBLEM --scheme lcr ...    # one scheme on one file
    fistakit verify --out DIR                   # bound report from traces

Exit codes: 0 success, 1 any invalid trial or failed bound, 2 config
error.  All floats are serialized with 17 significant digits; outputs are
deterministic functions of the configuration, independent of --jobs.
"""

from __future__ import annotations

import argparse
import json
import math
import multiprocessing
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lasso import LassoProblem, LassoSpec, generate, generate_least_squares, load_problem, save_problem
from .model import composite_gradient_map, objective
from .oracles import OracleError, kkt_residual, oracle_fstar, oracle_mu
from .restart import DEFAULT_PROX_BUDGET, RestartRun, RestartTrace, Scheme, run_scheme

__all__ = [
    "ExperimentConfig",
    "SchemeStats",
    "run_experiment",
    "export_trace",
    "verify_bounds",
    "main",
]

ALL_SCHEMES = tuple(Scheme)

# Tolerance policy for rate checks: a relative factor on the bound plus an
# absolute allowance for float evaluation noise.
BOUND_REL = 1e-8
BOUND_ABS = 1e-12


def fmt(x: float) -> str:
    """17-significant-digit decimal form (exact float64 round trip)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings of one experiment run."""

    N: int = 600
    n: int = 800
    alpha: float = 0.01
    sparsity: float = 0.9
    family: str = "lasso"
    trials: int = 100
    schemes: tuple[Scheme, ...] = ALL_SCHEMES
    epsilon: float = 1e-11
    oracle_epsilon: float = 1e-12
    seed: int = 0
    out: Path = Path("out")
    jobs: int = 1
    strict_exit: bool = False
    budget: int = DEFAULT_PROX_BUDGET

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.oracle_epsilon < self.epsilon:
            raise ValueError("oracle_epsilon must be smaller than epsilon")
        if self.family not in ("lasso", "least-squares"):
            raise ValueError("family must be 'lasso' or 'least-squares'")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not self.schemes:
            raise ValueError("at least one scheme is required")

    def instance(self, trial: int) -> LassoProblem:
        seed = self.seed + trial
        if self.family == "lasso":
            return generate(LassoSpec(N=self.N, n=self.n, alpha=self.alpha,
                                      sparsity=self.sparsity, seed=seed))
        return generate_least_squares(self.N, self.n, seed=seed, sparsity=self.sparsity)


@dataclass(frozen=True)
class SchemeStats:
    """Aggregate iteration statistics of one scheme across valid trials."""

    scheme: Scheme
    average: float
    median: float
    maximum: int
    minimum: int
    average_prox_calls: float
    trials: int


# ----------------------------------------------------------------------
# config file handling


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` document; '#' starts a comment."""
    mapping: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_schemes(text: str) -> tuple[Scheme, ...]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    return tuple(Scheme.from_name(name) for name in names)


_CONFIG_PARSERS = {
    "N": int,
    "n": int,
    "alpha": float,
    "sparsity": float,
    "family": str,
    "trials": int,
    "schemes": _parse_schemes,
    "eps": float,
    "oracle_eps": float,
    "seed": int,
    "out": Path,
    "jobs": int,
    "strict_exit": _parse_bool,
    "budget": int,
}

_CONFIG_FIELDS = {
    "N": "N",
    "n": "n",
    "alpha": "alpha",
    "sparsity": "sparsity",
    "family": "family",
    "trials": "trials",
    "schemes": "schemes",
    "eps": "epsilon",
    "oracle_eps": "oracle_epsilon",
    "seed": "seed",
    "out": "out",
    "jobs": "jobs",
    "strict_exit": "strict_exit",
    "budget": "budget",
}


def build_config(file_map: dict[str, str] | None, overrides: dict) -> ExperimentConfig:
    """Merge config file keys with command line overrides (flags win)."""
    kwargs = {}
    if file_map:
        for key, raw in file_map.items():
            if key not in _CONFIG_PARSERS:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[_CONFIG_FIELDS[key]] = _CONFIG_PARSERS[key](raw)
    for field_name, value in overrides.items():
        if value is not None:
            kwargs[field_name] = value
    return ExperimentConfig(**kwargs)


# ----------------------------------------------------------------------
# trace export


def export_trace(trace: RestartTrace, path, fmt_name: str = "csv", scheme: str | None = None) -> None:
    """Write per-iteration rows of one run; CSV or JSON lines.

    The first line documents the schema.  An empty trace produces a
    header-only file.
    """
    rows = list(trace.iteration_rows())
    path = Path(path)
    if fmt_name == "csv":
        with open(path, "w", newline="\n") as fh:
            if scheme is None:
                fh.write("k,f,g_dual_norm\n")
                for k, f_val, g_val in rows:
                    fh.write(f"{k},{fmt(f_val)},{fmt(g_val)}\n")
            else:
                fh.write("scheme,k,f,g_dual_norm\n")
                for k, f_val, g_val in rows:
                    fh.write(f"{scheme},{k},{fmt(f_val)},{fmt(g_val)}\n")
    elif fmt_name == "jsonl":
        with open(path, "w", newline="\n") as fh:
            schema = {"schema": ["k", "f", "g_dual_norm"]}
            if scheme is not None:
                schema["scheme"] = scheme
            fh.write(json.dumps(schema) + "\n")
            for k, f_val, g_val in rows:
                fh.write(json.dumps({"k": k, "f": f_val, "g_dual_norm": g_val}) + "\n")
    else:
        raise ValueError(f"unknown trace format {fmt_name!r}")


def _write_trial_traces(out_dir: Path, trial: int, results: dict[str, RestartTrace]) -> None:
    traces = out_dir / "traces"
    with open(traces / f"trial_{trial:04d}.csv", "w", newline="\n") as fh:
        fh.write("scheme,k,f,g_dual_norm\n")
        for name, trace in results.items():
            for k, f_val, g_val in trace.iteration_rows():
                fh.write(f"{name},{k},{fmt(f_val)},{fmt(g_val)}\n")
    with open(traces / f"trial_{trial:04d}_restarts.csv", "w", newline="\n") as fh:
        fh.write("scheme,j,n_obs,n_eff,f_r,g_dual_norm\n")
        for name, trace in results.items():
            for rec in trace.records:
                fh.write(
                    f"{name},{rec.j},{rec.n_obs},{rec.n_eff},"
                    f"{fmt(rec.f_r)},{fmt(rec.g_dual_norm)}\n"
                )
    if "lcr" in results:
        with open(traces / f"trial_{trial:04d}_lcr_nj.csv", "w", newline="\n") as fh:
            fh.write("j,n_obs,n_eff\n")
            for rec in results["lcr"].records:
                if rec.j >= 1:
                    fh.write(f"{rec.j},{rec.n_obs},{rec.n_eff}\n")


# ----------------------------------------------------------------------
# trial execution


def _run_trial(config: ExperimentConfig, trial: int) -> dict:
    """Run every selected scheme on instance ``trial``; write its trace files."""
    lp = config.instance(trial)
    summary: dict = {"trial": trial, "valid": True, "reason": "", "schemes": {}, "oracle": None}
    try:
        f_star, x_star = oracle_fstar(lp, tight_eps=config.oracle_epsilon, budget=config.budget)
    except OracleError as exc:
        summary["valid"] = False
        summary["reason"] = f"oracle: {exc}"
        return summary

    r0 = np.zeros(lp.n)
    x0 = composite_gradient_map(lp.problem, r0).y_plus
    try:
        mu = oracle_mu(lp)
    except OracleError:
        mu = math.nan
    summary["oracle"] = {
        "f_star": f_star,
        "kkt_residual": kkt_residual(lp, x_star),
        "f_r0": objective(lp.problem, r0),
        "f_x0": objective(lp.problem, x0),
        "x0_dist_r": lp.metric.norm(x0 - x_star),
        "mu": mu,
    }

    results: dict[str, RestartTrace] = {}
    for scheme in config.schemes:
        run = RestartRun(
            scheme=scheme,
            epsilon=config.epsilon,
            r0=r0,
            early_exit=not config.strict_exit,
            f_star=f_star if scheme is Scheme.OPTIMAL_VALUE else None,
            budget=config.budget,
        )
        outcome = run_scheme(lp.problem, run)
        trace = outcome.trace
        results[scheme.value] = trace
        summary["schemes"][scheme.value] = {
            "iterations": trace.total_iterations,
            "prox_calls": trace.total_prox_calls,
            "final_g_dual_norm": trace.final_g_norm,
            "f_final": trace.records[-1].f_r,
            "exhausted": trace.exhausted,
        }
        if trace.exhausted:
            summary["valid"] = False
            summary["reason"] = f"scheme {scheme.value}: budget exhausted"
    _write_trial_traces(config.out, trial, results)
    return summary


def _trial_star(args) -> dict:
    return _run_trial(*args)


def _aggregate(config: ExperimentConfig, summaries: list[dict]) -> list[SchemeStats]:
    valid = [s for s in summaries if s["valid"]]
    stats = []
    for scheme in config.schemes:
        iters = [s["schemes"][scheme.value]["iterations"] for s in valid]
        prox = [s["schemes"][scheme.value]["prox_calls"] for s in valid]
        if not iters:
            continue
        stats.append(
            SchemeStats(
                scheme=scheme,
                average=float(np.mean(iters)),
                median=float(np.median(iters)),
                maximum=int(max(iters)),
                minimum=int(min(iters)),
                average_prox_calls=float(np.mean(prox)),
                trials=len(iters),
            )
        )
    return stats


def _stats_text(stats: list[SchemeStats]) -> str:
    if not stats:
        return "no valid trials\n"
    names = [st.scheme.value for st in stats]
    width = max(12, *(len(n) + 2 for n in names))
    rows = [
        ("Avg. Iter.", [f"{st.average:.1f}" for st in stats]),
        ("Median Iter.", [f"{st.median:g}" for st in stats]),
        ("Max. Iter.", [str(st.maximum) for st in stats]),
        ("Min. Iter.", [str(st.minimum) for st in stats]),
        ("Avg. Prox.", [f"{st.average_prox_calls:.1f}" for st in stats]),
    ]
    out = ["Exit Cond.".ljust(14) + "".join(n.rjust(width) for n in names)]
    for label, cells in rows:
        out.append(label.ljust(14) + "".join(c.rjust(width) for c in cells))
    out.append(f"(valid trials: {stats[0].trials})")
    return "\n".join(out) + "\n"


def run_experiment(config: ExperimentConfig) -> tuple[list[SchemeStats], int]:
    """Execute the full protocol; returns the stats and a process exit code."""
    out = config.out
    (out / "traces").mkdir(parents=True, exist_ok=True)

    # jobs is deliberately left out: outputs must not depend on parallelism.
    meta = {
        "N": config.N,
        "n": config.n,
        "alpha": config.alpha,
        "sparsity": config.sparsity,
        "family": config.family,
        "trials": config.trials,
        "schemes": [s.value for s in config.schemes],
        "eps": config.epsilon,
        "oracle_eps": config.oracle_epsilon,
        "seed": config.seed,
        "strict_exit": config.strict_exit,
        "budget": config.budget,
    }
    with open(out / "run_meta.json", "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    jobs = min(config.jobs, config.trials)
    tasks = [(config, i) for i in range(config.trials)]
    if jobs > 1:
        with multiprocessing.Pool(jobs) as pool:
            summaries = pool.map(_trial_star, tasks)
    else:
        summaries = [_run_trial(config, i) for i in range(config.trials)]

    with open(out / "trials.csv", "w", newline="\n") as fh:
        fh.write("trial,scheme,iterations,prox_calls,final_g_dual_norm,f_final,status\n")
        for s in summaries:
            for name, row in s["schemes"].items():
                status = "exhausted" if row["exhausted"] else "ok"
                fh.write(
                    f"{s['trial']},{name},{row['iterations']},{row['prox_calls']},"
                    f"{fmt(row['final_g_dual_norm'])},{fmt(row['f_final'])},{status}\n"
                )

    with open(out / "oracles.csv", "w", newline="\n") as fh:
        fh.write("trial,f_star,kkt_residual,f_r0,f_x0,x0_dist_r,mu\n")
        for s in summaries:
            o = s["oracle"]
            if o is None:
                continue
            fh.write(
                f"{s['trial']},{fmt(o['f_star'])},{fmt(o['kkt_residual'])},"
                f"{fmt(o['f_r0'])},{fmt(o['f_x0'])},{fmt(o['x0_dist_r'])},{fmt(o['mu'])}\n"
            )

    invalid = [s for s in summaries if not s["valid"]]
    if invalid:
        with open(out / "invalid.csv", "w", newline="\n") as fh:
            fh.write("trial,reason\n")
            for s in invalid:
                fh.write(f"{s['trial']},{s['reason']}\n")

    stats = _aggregate(config, summaries)
    with open(out / "stats.csv", "w", newline="\n") as fh:
        fh.write("scheme,avg_iterations,median_iterations,max_iterations,"
                 "min_iterations,avg_prox_calls,valid_trials\n")
        for st in stats:
            fh.write(
                f"{st.scheme.value},{fmt(st.average)},{fmt(st.median)},"
                f"{st.maximum},{st.minimum},{fmt(st.average_prox_calls)},{st.trials}\n"
            )
    text = _stats_text(stats)
    with open(out / "stats.txt", "w", newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    for s in invalid:
        print(f"invalid trial {s['trial']}: {s['reason']}", file=sys.stderr)
    return stats, (1 if invalid else 0)


# ----------------------------------------------------------------------
# bound verification


def _read_csv(path) -> list[dict[str, str]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


@dataclass(frozen=True)
class BoundCheck:
    trial: int
    name: str
    status: str  # PASS / FAIL / SKIP
    bound: float = math.nan
    observed: float = math.nan
    detail: str = ""

    def line(self) -> str:
        parts = [f"trial={self.trial:04d}", f"check={self.name}", f"status={self.status}"]
        if not math.isnan(self.bound):
            parts.append(f"bound={self.bound:.6e}")
        if not math.isnan(self.observed):
            parts.append(f"observed={self.observed:.6e}")
        if self.detail:
            parts.append(self.detail)
        return " ".join(parts)


def _rate_allowance(bound: float) -> float:
    return bound * (1.0 + BOUND_REL) + BOUND_ABS


def _float_noise(*values: float) -> float:
    # Allowance for the evaluation error of objective differences read
    # back from file: a few ulps of the largest magnitude involved.
    scale = max([1.0, *map(abs, values)])
    return 64.0 * np.finfo(float).eps * scale


def verify_bounds(out_dir) -> tuple[list[BoundCheck], int]:
    """Re-check every applicable convergence guarantee from emitted files.

    Produces one record per (trial, inequality): the binding bound value,
    the worst observed value, and PASS/FAIL (SKIP when an oracle quantity
    is unavailable).  Returns the records and the number of failures.
    """
    out = Path(out_dir)
    meta = json.loads((out / "run_meta.json").read_text())
    eps = float(meta["eps"])
    oracle_rows = {int(r["trial"]): r for r in _read_csv(out / "oracles.csv")}
    prox_totals: dict[tuple[int, str], int] = {
        (int(r["trial"]), r["scheme"]): int(r["prox_calls"])
        for r in _read_csv(out / "trials.csv")
    }
    checks: list[BoundCheck] = []

    for trial in range(int(meta["trials"])):
        if trial not in oracle_rows:
            checks.append(BoundCheck(trial, "all", "SKIP", detail="no oracle row"))
            continue
        o = oracle_rows[trial]
        f_star = float(o["f_star"])
        dist = float(o["x0_dist_r"])
        f_x0 = float(o["f_x0"])
        f_r0 = float(o["f_r0"])
        mu = float(o["mu"])
        trace_rows = _read_csv(out / "traces" / f"trial_{trial:04d}.csv")
        restart_rows = _read_csv(out / "traces" / f"trial_{trial:04d}_restarts.csv")

        by_scheme: dict[str, list[dict[str, str]]] = {}
        for row in trace_rows:
            by_scheme.setdefault(row["scheme"], []).append(row)
        restarts_by_scheme: dict[str, list[dict[str, str]]] = {}
        for row in restart_rows:
            restarts_by_scheme.setdefault(row["scheme"], []).append(row)

        nr = by_scheme.get("none")
        if nr:
            worst = None
            for row in nr:
                k = int(row["k"])
                gap = float(row["f"]) - f_star
                bound = 2.0 * dist * dist / (k + 1) ** 2
                margin = gap - _rate_allowance(bound)
                if worst is None or margin > worst[0]:
                    worst = (margin, k, gap, bound)
            margin, k, gap, bound = worst
            checks.append(BoundCheck(
                trial, "nr-objective-rate", "PASS" if margin <= 0 else "FAIL",
                bound=bound, observed=gap, detail=f"worst_k={k}",
            ))
            worst = None
            for row in nr:
                k = int(row["k"])
                g_val = float(row["g_dual_norm"])
                bound = 4.0 * dist / (k + 1)  # g at y_{k-1}: (k-1) + 2
                margin = g_val - _rate_allowance(bound)
                if worst is None or margin > worst[0]:
                    worst = (margin, k, g_val, bound)
            margin, k, g_val, bound = worst
            checks.append(BoundCheck(
                trial, "nr-gradient-rate", "PASS" if margin <= 0 else "FAIL",
                bound=bound, observed=g_val, detail=f"worst_k={k}",
            ))
            if not math.isfinite(mu):
                checks.append(BoundCheck(trial, "nr-growth-checks", "SKIP",
                                         detail="no growth parameter"))
            else:
                k_mono = math.floor(2.0 / math.sqrt(mu))
                k_contr = math.floor(2.0 * math.sqrt(math.e + 1.0) / math.sqrt(mu))
                bad = [
                    (int(r["k"]), float(r["f"]))
                    for r in nr
                    if int(r["k"]) >= k_mono
                    and float(r["f"]) > f_x0 + _float_noise(f_x0, float(r["f"]))
                ]
                checks.append(BoundCheck(
                    trial, "nr-monotone-after", "PASS" if not bad else "FAIL",
                    bound=f_x0,
                    observed=max((f for _, f in bad), default=math.nan),
                    detail=f"k_min={k_mono}",
                ))
                bad = []
                for r in nr:
                    k = int(r["k"])
                    if k < k_contr:
                        continue
                    f_k = float(r["f"])
                    lhs = f_k - f_star
                    rhs = (f_x0 - f_k) / math.e
                    if lhs > rhs + _float_noise(f_x0, f_k):
                        bad.append((k, lhs - rhs))
                checks.append(BoundCheck(
                    trial, "nr-contraction-after", "PASS" if not bad else "FAIL",
                    observed=max((d for _, d in bad), default=math.nan),
                    detail=f"k_min={k_contr}",
                ))

        lcr = restarts_by_scheme.get("lcr")
        if lcr:
            lcr = sorted(lcr, key=lambda r: int(r["j"]))
            bad = []
            for prev, curr in zip(lcr, lcr[1:]):
                g_prev = float(prev["g_dual_norm"])
                if math.isnan(g_prev):
                    continue
                lhs = 0.5 * g_prev * g_prev
                rhs = float(prev["f_r"]) - float(curr["f_r"])
                if lhs > rhs + _float_noise(float(prev["f_r"]), float(curr["f_r"])):
                    bad.append((int(curr["j"]), lhs - rhs))
            checks.append(BoundCheck(
                trial, "lcr-restart-decrease", "PASS" if not bad else "FAIL",
                observed=max((d for _, d in bad), default=math.nan),
                detail=f"pairs={max(len(lcr) - 1, 0)}",
            ))
            if not math.isfinite(mu):
                checks.append(BoundCheck(trial, "lcr-growth-checks", "SKIP",
                                         detail="no growth parameter"))
            else:
                nj_bound = math.ceil(4.0 * math.sqrt(math.e + 1.0) / math.sqrt(mu))
                worst_n = max(int(r["n_obs"]) for r in lcr)
                checks.append(BoundCheck(
                    trial, "lcr-iteration-bound",
                    "PASS" if worst_n <= nj_bound else "FAIL",
                    bound=float(nj_bound), observed=float(worst_n),
                ))
                total_bound = (16.0 / math.sqrt(mu)) * math.ceil(
                    math.log1p(2.0 * (f_r0 - f_star) / (eps * eps))
                )
                total = prox_totals.get((trial, "lcr"))
                if total is not None:
                    checks.append(BoundCheck(
                        trial, "lcr-total-bound",
                        "PASS" if total <= total_bound else "FAIL",
                        bound=total_bound, observed=float(total),
                    ))

    failures = sum(1 for c in checks if c.status == "FAIL")
    return checks, failures


# ----------------------------------------------------------------------
# argparse front end


def _add_run_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--n", type=int, dest="n")
    p.add_argument("--alpha", type=float)
    p.add_argument("--sparsity", type=float)
    p.add_argument("--family", choices=["lasso", "least-squares"])
    p.add_argument("--trials", type=int)
    p.add_argument("--schemes", type=str, help="comma list from {none,func,grad,opt,lcr}")
    p.add_argument("--eps", type=float)
    p.add_argument("--oracle-eps", type=float, dest="oracle_eps")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--jobs", type=int)
    p.add_argument("--strict-exit", action="store_const", const=True, default=None,
                   dest="strict_exit", help="check the tolerance only between restarts")
    p.add_argument("--budget", type=int)


def _config_from_args(args) -> ExperimentConfig:
    file_map = parse_config_file(args.config) if args.config else None
    overrides = {
        "N": args.N,
        "n": args.n,
        "alpha": args.alpha,
        "sparsity": args.sparsity,
        "family": args.family,
        "trials": args.trials,
        "schemes": _parse_schemes(args.schemes) if args.schemes else None,
        "epsilon": args.eps,
        "oracle_epsilon": args.oracle_eps,
        "seed": args.seed,
        "out": args.out,
        "jobs": args.jobs,
        "strict_exit": args.strict_exit,
        "budget": args.budget,
    }
    return build_config(file_map, overrides)


def _cmd_run(args) -> int:
    try:
        config = _config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _, code = run_experiment(config)
    return code


def _cmd_gen(args) -> int:
    try:
        if args.family == "lasso":
            spec = LassoSpec(N=args.N, n=args.n, alpha=args.alpha,
                             sparsity=args.sparsity, seed=args.seed)
            lp = generate(spec)
        else:
            lp = generate_least_squares(args.N, args.n, seed=args.seed,
                                        sparsity=args.sparsity)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    save_problem(lp, args.out)
    print(f"wrote {args.out} (N={lp.N}, n={lp.n}, nnz={lp.A.nnz})")
    return 0


def _cmd_solve(args) -> int:
    try:
        lp = load_problem(args.problem)
        scheme = Scheme.from_name(args.scheme)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    f_star = args.f_star
    if scheme is Scheme.OPTIMAL_VALUE and f_star is None:
        try:
            f_star, _ = oracle_fstar(lp, tight_eps=args.oracle_eps, budget=args.budget)
        except OracleError as exc:
            print(f"oracle failure: {exc}", file=sys.stderr)
            return 1
    run = RestartRun(
        scheme=scheme,
        epsilon=args.eps,
        r0=np.zeros(lp.n),
        early_exit=not args.strict_exit,
        f_star=f_star,
        budget=args.budget,
    )
    outcome = run_scheme(lp.problem, run)
    trace = outcome.trace
    print(f"scheme={scheme.value} iterations={trace.total_iterations} "
          f"prox_calls={trace.total_prox_calls} restarts={len(trace.records) - 1}")
    print(f"f_final={fmt(trace.records[-1].f_r)} "
          f"final_g_dual_norm={fmt(trace.final_g_norm)} exhausted={trace.exhausted}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        export_trace(trace, args.out / "trace.csv", "csv", scheme=scheme.value)
        with open(args.out / "restarts.csv", "w", newline="\n") as fh:
            fh.write("j,n_obs,n_eff,f_r,g_dual_norm\n")
            for rec in trace.records:
                fh.write(f"{rec.j},{rec.n_obs},{rec.n_eff},"
                         f"{fmt(rec.f_r)},{fmt(rec.g_dual_norm)}\n")
    return 1 if trace.exhausted else 0


def _cmd_verify(args) -> int:
    try:
        checks, failures = verify_bounds(args.out)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: cannot read run output: {exc}", file=sys.stderr)
        return 2
    report = "\n".join(c.line() for c in checks) + "\n"
    with open(Path(args.out) / "bound_report.txt", "w", newline="\n") as fh:
        fh.write(report)
    print(report, end="")
    counts = {"PASS": 0, "FAIL": 0, "SKIP": 0}
    for c in checks:
        counts[c.status] += 1
    print(f"{counts['PASS']} passed, {counts['FAIL']} failed, {counts['SKIP']} skipped")
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fistakit",
        description="Restart-scheme experiments for composite first-order solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full experiment from a config")
    _add_run_overrides(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_gen = sub.add_parser("gen", help="generate one problem file")
    p_gen.add_argument("--N", type=int, default=600)
    p_gen.add_argument("--n", type=int, default=800)
    p_gen.add_argument("--alpha", type=float, default=0.01)
    p_gen.add_argument("--sparsity", type=float, default=0.9)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--family", choices=["lasso", "least-squares"], default="lasso")
    p_gen.add_argument("--out", type=Path, required=True)
    p_gen.set_defaults(func=_cmd_gen)

    p_solve = sub.add_parser("solve", help="run one scheme on one problem file")
    p_solve.add_argument("problem", type=Path)
    p_solve.add_argument("--scheme", required=True,
                         choices=[s.value for s in Scheme])
    p_solve.add_argument("--eps", type=float, default=1e-11)
    p_solve.add_argument("--oracle-eps", type=float, default=1e-12, dest="oracle_eps")
    p_solve.add_argument("--f-star", type=float, default=None, dest="f_star")
    p_solve.add_argument("--strict-exit", action="store_true", dest="strict_exit")
    p_solve.add_argument("--budget", type=int, default=DEFAULT_PROX_BUDGET)
    p_solve.add_argument("--out", type=Path, default=None)
    p_solve.set_defaults(func=_cmd_solve)

    p_verify = sub.add_parser("verify", help="re-check bounds against emitted traces")
    p_verify.add_argument("--out", type=Path, required=True,
                          help="output directory of a previous run")
    p_verify.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
