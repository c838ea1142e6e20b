import json

import numpy as np
import pytest
from scipy import sparse

from fistakit import LassoProblem, RestartRun, Scheme, lcr_fista, no_restart_fista, save_problem
from fistakit.cli import (
    ExperimentConfig,
    build_config,
    export_trace,
    fmt,
    main,
    parse_config_file,
    run_experiment,
    verify_bounds,
)
from fistakit.lasso import generate_least_squares
from fistakit.restart import RestartTrace


TINY = dict(N=15, n=22, alpha=0.01, sparsity=0.5, trials=3,
            epsilon=1e-7, oracle_epsilon=1e-9, seed=42)


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_run")
    cfg = ExperimentConfig(out=out, **TINY)
    stats, code = run_experiment(cfg)
    return out, cfg, stats, code


class TestConfigHandling:
    def test_parse_config_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment line\n"
            "N = 60\n"
            "n = 80   # inline comment\n"
            "alpha = 0.01\n"
            "trials = 5\n"
            "schemes = lcr,none\n"
            "eps = 1e-9\n"
            "oracle_eps = 1e-12\n"
            "strict_exit = false\n"
        )
        cfg = build_config(parse_config_file(path), {})
        assert cfg.N == 60 and cfg.n == 80 and cfg.trials == 5
        assert cfg.schemes == (Scheme.LCR, Scheme.NO_RESTART)
        assert cfg.epsilon == 1e-9
        assert not cfg.strict_exit

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("trials = 5\nseed = 1\neps = 1e-9\noracle_eps = 1e-12\n")
        cfg = build_config(parse_config_file(path), {"trials": 9, "seed": None})
        assert cfg.trials == 9
        assert cfg.seed == 1

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("bogus = 1\n")
        with pytest.raises(ValueError):
            build_config(parse_config_file(path), {})

    def test_invariants(self):
        with pytest.raises(ValueError):
            ExperimentConfig(trials=0)
        with pytest.raises(ValueError):
            ExperimentConfig(epsilon=1e-12, oracle_epsilon=1e-11)
        with pytest.raises(ValueError):
            ExperimentConfig(family="exotic")

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("trials = 0\n")
        assert main(["run", "--config", str(bad)]) == 2
        assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2

    def test_run_from_config_file(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        out = tmp_path / "out"
        cfg.write_text(
            "N = 15\n"
            "n = 22\n"
            "alpha = 0.01\n"
            "sparsity = 0.5\n"
            "trials = 2\n"
            "schemes = lcr,none\n"
            "eps = 1e-7\n"
            "oracle_eps = 1e-9\n"
            "seed = 42\n"
            f"out = {out}\n"
        )
        assert main(["run", "--config", str(cfg)]) == 0
        assert (out / "stats.csv").exists()
        lines = (out / "stats.csv").read_text().splitlines()
        assert len(lines) == 3  # header + two schemes


class TestRunOutputs:
    def test_exit_code_and_files(self, tiny_run):
        out, cfg, stats, code = tiny_run
        assert code == 0
        for name in ("run_meta.json", "trials.csv", "oracles.csv", "stats.csv", "stats.txt"):
            assert (out / name).exists()
        for trial in range(cfg.trials):
            assert (out / "traces" / f"trial_{trial:04d}.csv").exists()
            assert (out / "traces" / f"trial_{trial:04d}_restarts.csv").exists()
            assert (out / "traces" / f"trial_{trial:04d}_lcr_nj.csv").exists()

    def test_stats_invariants(self, tiny_run):
        _, _, stats, _ = tiny_run
        assert len(stats) == 5
        for st in stats:
            assert st.minimum <= st.median <= st.maximum
            assert st.minimum <= st.average <= st.maximum

    def test_every_scheme_reaches_tolerance(self, tiny_run):
        out, cfg, _, _ = tiny_run
        rows = (out / "trials.csv").read_text().splitlines()[1:]
        assert len(rows) == cfg.trials * len(cfg.schemes)
        for row in rows:
            fields = row.split(",")
            assert fields[-1] == "ok"
            assert float(fields[4]) <= cfg.epsilon

    def test_no_restart_trace_length_matches_stats(self, tiny_run):
        out, cfg, _, _ = tiny_run
        for trial in range(cfg.trials):
            rows = (out / "traces" / f"trial_{trial:04d}.csv").read_text().splitlines()[1:]
            nr_rows = [r for r in rows if r.startswith("none,")]
            trial_rows = (out / "trials.csv").read_text().splitlines()[1:]
            reported = next(
                int(r.split(",")[2])
                for r in trial_rows
                if r.startswith(f"{trial},none,")
            )
            assert len(nr_rows) == reported

    def test_lcr_nj_totals_match(self, tiny_run):
        out, cfg, _, _ = tiny_run
        for trial in range(cfg.trials):
            nj_rows = (out / "traces" / f"trial_{trial:04d}_lcr_nj.csv").read_text().splitlines()[1:]
            total = sum(int(r.split(",")[1]) for r in nj_rows)
            trial_rows = (out / "trials.csv").read_text().splitlines()[1:]
            reported = next(
                int(r.split(",")[2])
                for r in trial_rows
                if r.startswith(f"{trial},lcr,")
            )
            assert total == reported

    def test_floats_round_trip_17g(self, tiny_run):
        out, _, _, _ = tiny_run
        row = (out / "oracles.csv").read_text().splitlines()[1]
        f_star = float(row.split(",")[1])
        assert fmt(f_star) == row.split(",")[1]

    def test_meta_excludes_parallelism(self, tiny_run):
        out, _, _, _ = tiny_run
        meta = json.loads((out / "run_meta.json").read_text())
        assert "jobs" not in meta


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        cfg_a = ExperimentConfig(out=tmp_path / "a", **TINY)
        cfg_b = ExperimentConfig(out=tmp_path / "b", **TINY)
        run_experiment(cfg_a)
        run_experiment(cfg_b)
        names = ["run_meta.json", "trials.csv", "oracles.csv", "stats.csv", "stats.txt"]
        names += [f"traces/trial_{t:04d}{suffix}"
                  for t in range(TINY["trials"])
                  for suffix in (".csv", "_restarts.csv", "_lcr_nj.csv")]
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_jobs_do_not_change_outputs(self, tmp_path):
        cfg_a = ExperimentConfig(out=tmp_path / "a", jobs=1, **TINY)
        cfg_b = ExperimentConfig(out=tmp_path / "b", jobs=3, **TINY)
        run_experiment(cfg_a)
        run_experiment(cfg_b)
        for name in ("run_meta.json", "trials.csv", "oracles.csv", "stats.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestInvalidTrials:
    def test_budget_failure_marks_trial_invalid(self, tmp_path):
        cfg = ExperimentConfig(N=15, n=22, alpha=0.01, sparsity=0.5, trials=2,
                               epsilon=1e-7, oracle_epsilon=1e-9, seed=42,
                               out=tmp_path, budget=25)
        stats, code = run_experiment(cfg)
        assert code == 1
        assert (tmp_path / "invalid.csv").exists()
        assert stats == []  # nothing valid to aggregate


class TestStrictExit:
    def test_strict_mode_experiment(self, tmp_path):
        cfg = ExperimentConfig(out=tmp_path, strict_exit=True, **TINY)
        stats, code = run_experiment(cfg)
        assert code == 0
        rows = (tmp_path / "trials.csv").read_text().splitlines()[1:]
        for row in rows:
            fields = row.split(",")
            assert fields[-1] == "ok"
            assert float(fields[4]) <= cfg.epsilon
            # strict mode pays extra proxes for the between-restart checks
            assert int(fields[3]) > int(fields[2])
        meta = json.loads((tmp_path / "run_meta.json").read_text())
        assert meta["strict_exit"] is True

    def test_solve_strict_flag(self, tmp_path):
        problem_file = tmp_path / "inst.lasso"
        main(["gen", "--N", "12", "--n", "18", "--alpha", "0.01",
              "--sparsity", "0.5", "--seed", "3", "--out", str(problem_file)])
        assert main(["solve", str(problem_file), "--scheme", "func",
                     "--eps", "1e-7", "--strict-exit"]) == 0


class TestExportTrace:
    def test_empty_trace_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        export_trace(RestartTrace(), path)
        assert path.read_text() == "k,f,g_dual_norm\n"

    def test_jsonl_schema_line(self, tmp_path):
        lp = generate_least_squares(10, 5, seed=1)
        run = RestartRun(scheme=Scheme.NO_RESTART, epsilon=1e-8, r0=np.zeros(5))
        trace = no_restart_fista(lp.problem, run).trace
        path = tmp_path / "trace.jsonl"
        export_trace(trace, path, "jsonl", scheme="none")
        lines = path.read_text().splitlines()
        schema = json.loads(lines[0])
        assert schema["schema"] == ["k", "f", "g_dual_norm"]
        first = json.loads(lines[1])
        assert first["k"] == 1

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_trace(RestartTrace(), tmp_path / "x", "xml")


class TestCommands:
    def test_gen_solve_round_trip(self, tmp_path):
        problem_file = tmp_path / "inst.lasso"
        assert main(["gen", "--N", "15", "--n", "22", "--alpha", "0.01",
                     "--sparsity", "0.5", "--seed", "7", "--out", str(problem_file)]) == 0
        out_dir = tmp_path / "solved"
        assert main(["solve", str(problem_file), "--scheme", "lcr",
                     "--eps", "1e-8", "--out", str(out_dir)]) == 0
        assert (out_dir / "trace.csv").exists()
        assert (out_dir / "restarts.csv").exists()

    def test_solve_opt_computes_oracle(self, tmp_path):
        problem_file = tmp_path / "inst.lasso"
        main(["gen", "--N", "12", "--n", "18", "--alpha", "0.01",
              "--sparsity", "0.5", "--seed", "3", "--out", str(problem_file)])
        assert main(["solve", str(problem_file), "--scheme", "opt",
                     "--eps", "1e-7", "--oracle-eps", "1e-9"]) == 0

    def test_solve_single_restart_lcr_nj_file(self, tmp_path):
        # An instance whose start point is already optimal produces exactly
        # one restart row.
        A = sparse.csc_array(np.eye(3))
        lp = LassoProblem.build(A, np.zeros(3))
        problem_file = tmp_path / "zero.lasso"
        save_problem(lp, problem_file)
        run = RestartRun(scheme=Scheme.LCR, epsilon=1e-9, r0=np.zeros(3))
        out = lcr_fista(lp.problem, run)
        rows = [r for r in out.trace.records if r.j >= 1]
        assert len(rows) == 1
        assert rows[0].n_obs == 0

    def test_verify_passes_on_tiny_run(self, tiny_run):
        out, _, _, _ = tiny_run
        checks, failures = verify_bounds(out)
        assert failures == 0
        assert any(c.name == "nr-objective-rate" and c.status == "PASS" for c in checks)
        assert any(c.name == "lcr-restart-decrease" and c.status == "PASS" for c in checks)

    def test_verify_command_writes_report(self, tiny_run):
        out, _, _, _ = tiny_run
        assert main(["verify", "--out", str(out)]) == 0
        assert (out / "bound_report.txt").exists()

    def test_verify_on_missing_dir(self, tmp_path):
        assert main(["verify", "--out", str(tmp_path / "nope")]) == 2

    def test_growth_family_bounds_via_cli(self, tmp_path):
        out = tmp_path / "growth"
        code = main([
            "run", "--family", "least-squares", "--N", "30", "--n", "12",
            "--sparsity", "0", "--trials", "2", "--eps", "1e-8",
            "--oracle-eps", "1e-10", "--seed", "5", "--out", str(out),
        ])
        assert code == 0
        checks, failures = verify_bounds(out)
        assert failures == 0
        names = {c.name for c in checks}
        assert {"lcr-iteration-bound", "lcr-total-bound",
                "nr-monotone-after", "nr-contraction-after"} <= names
