import csv
import json

import pytest

from cehpo.ce_engine import ConfigError, run_cehpo
from cehpo.cli import (
    TRACE_COLUMNS,
    ConfigFileError,
    execute,
    load_config,
    main,
)
from cehpo.hyperspace import parse_value


def write_config(tmp_path, **payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return path


QUAD = {"command": "tune", "objective": {"name": "quadratic"},
        "space": {"type": "interval", "a": 0, "b": 1}}


class TestLoadConfig:
    def test_defaults(self, tmp_path):
        cfg = load_config(write_config(tmp_path, **QUAD))
        ce = cfg.ce
        assert (ce.n_samples, ce.rho, ce.smoothing, ce.favorability, ce.window,
                ce.gamma_tol, ce.max_rounds) == (100, 0.05, 0.7, 10.0, 5, 1e-9, 100)

    def test_space_defaults_for_analytic(self, tmp_path):
        cfg = load_config(write_config(tmp_path, command="tune",
                                       objective={"name": "gramacy_lee"}))
        space = cfg.space(cfg.objective())
        assert (space.a, space.b) == (0.5, 2.5)

    def test_elite_count_violation(self, tmp_path):
        path = write_config(tmp_path, **QUAD, ce={"n_samples": 10, "rho": 0.2,
                                                  "favorability": 10})
        with pytest.raises(ConfigError, match="20"):
            load_config(path)

    def test_smoothing_warning(self, tmp_path):
        with pytest.warns(UserWarning):
            cfg = load_config(write_config(tmp_path, **QUAD, ce={"smoothing": 0.95}))
        assert cfg.ce.smoothing == 0.95

    def test_missing_and_malformed(self, tmp_path):
        with pytest.raises(ConfigFileError, match="not found"):
            load_config(tmp_path / "nope.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigFileError, match="malformed"):
            load_config(bad)

    @pytest.mark.parametrize("patch", [
        {"command": "explode"},
        {"objective": {"name": "rosenbrock"}},
        {"space": {"type": "interval", "a": 1, "b": 0}},
        {"ce": {"bogus": 1}},
        {"schema_version": 2},
        {"objective": {"name": "convergence", "problem": {"type": "mnist"}}},
        {"objective": {"name": "convergence", "fixed": {"beta1": 1.5}}},
    ])
    def test_constraint_violations(self, tmp_path, patch):
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, **{**QUAD, **patch}))

    def test_overrides(self, tmp_path):
        cfg = load_config(write_config(tmp_path, **QUAD, seed=1), seed=42, out=str(tmp_path / "o"))
        assert cfg.seed == 42 and cfg.ce.seed == 42
        assert cfg.output_dir == tmp_path / "o"

    def test_training_objective_needs_space(self, tmp_path):
        with pytest.raises(ConfigError, match="space"):
            load_config(write_config(tmp_path, command="tune",
                                     objective={"name": "convergence"}))


def read_trace(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestExecute:
    def test_tune(self, tmp_path):
        cfg = load_config(write_config(tmp_path, **QUAD, ce={"max_rounds": 50},
                                       output_dir=str(tmp_path / "out")))
        assert execute(cfg) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert abs(float(summary["best_value"]) - 0.7) <= 0.02
        assert summary["stop_reason"] in ("gamma_plateau", "max_rounds")
        assert summary["evaluations_used"] == 100 * summary["rounds_used"]
        assert "wall_time_seconds" in json.loads((tmp_path / "out" / "timing.json").read_text())

    def test_trace_schema_and_precision(self, tmp_path):
        cfg = load_config(write_config(tmp_path, **QUAD, ce={"max_rounds": 4, "window": 9},
                                       output_dir=str(tmp_path / "out")))
        assert execute(cfg) == 0
        rows = read_trace(tmp_path / "out" / "trace.csv")
        assert tuple(rows[0]) == TRACE_COLUMNS
        assert len(rows) == 1 + 4 * 100
        result = run_cehpo(cfg.space(cfg.objective()), cfg.objective(), cfg.ce)
        samples = [s for r in result.rounds for s in r.samples]
        for row, s in zip(rows[1:], samples):
            rec = dict(zip(TRACE_COLUMNS, row))
            assert parse_value(rec["beta"]) == s.value
            assert float(rec["score"]) == s.score
            assert float(rec["q_smooth"]) == s.q_smooth
            assert float(rec["q_prev"]) == s.q_prev
            assert rec["is_elite"] == ("true" if s.is_elite else "false")

    def test_rerun_is_byte_identical(self, tmp_path):
        path = write_config(tmp_path, **QUAD, ce={"max_rounds": 10})
        for name in ("a", "b"):
            assert execute(load_config(path, out=str(tmp_path / name))) == 0
        for fname in ("trace.csv", "summary.json"):
            assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()

    def test_compare(self, tmp_path):
        path = write_config(tmp_path, **{**QUAD, "command": "compare"},
                            ce={"max_rounds": 5}, baselines={"n_seeds": 3, "grid_points": 21})
        assert execute(load_config(path, out=str(tmp_path / "c"))) == 0
        rows = read_trace(tmp_path / "c" / "comparison.csv")
        assert rows[0] == ["method", "seed", "evaluations", "best_value", "best_score"]
        keys = [(r[0], r[1]) for r in rows[1:]]
        assert len(keys) == len(set(keys)) == 9
        by_seed = {}
        for method, seed, evals, _, _ in rows[1:]:
            by_seed.setdefault(seed, {})[method] = int(evals)
        for counts in by_seed.values():
            assert counts["cehpo"] == counts["random_search"]
            assert counts["grid_search"] == 21

    def test_grid(self, tmp_path):
        path = write_config(
            tmp_path, command="grid",
            objective={"name": "convergence", "problem": {"type": "noisy_quadratic",
                                                          "max_steps": 300},
                       "fixed": {"alpha": 0.05}, "tuned": "beta2"},
            space={"type": "interval", "a": 0.9, "b": 0.999},
            ce={"n_samples": 20, "rho": 0.1, "favorability": 5, "max_rounds": 3},
            grid={"datasets": [{"dataset_seed": 0}, {"dataset_seed": 1}],
                  "problems": [{"name": "convergence", "fixed": {"alpha": 0.05},
                                "problem": {"type": "noisy_quadratic", "max_steps": 300}},
                               {"name": "convergence", "fixed": {"alpha": 0.1},
                                "problem": {"type": "noisy_quadratic", "max_steps": 300}}]})
        assert execute(load_config(path, out=str(tmp_path / "g"))) == 0
        summary = json.loads((tmp_path / "g" / "summary.json").read_text())
        assert len(summary["cells"]) == 4
        assert summary["consensus"] in [c["best_value"] for c in summary["cells"]]
        assert (tmp_path / "g" / "trace_cell_1_1.csv").exists()

    def test_sequence_tune(self, tmp_path):
        path = write_config(
            tmp_path, command="tune",
            objective={"name": "convergence", "tuned": "beta1_sequence",
                       "fixed": {"alpha": 0.05},
                       "problem": {"type": "noisy_quadratic", "max_steps": 300}},
            space={"type": "decreasing_sequence", "k": 3, "a": 0.5, "b": 0.99},
            ce={"n_samples": 20, "rho": 0.1, "favorability": 5, "max_rounds": 2})
        assert execute(load_config(path, out=str(tmp_path / "s"))) == 0
        summary = json.loads((tmp_path / "s" / "summary.json").read_text())
        vals = parse_value(summary["best_value"]).values
        assert len(vals) == 3 and vals[0] >= vals[1] >= vals[2]


class TestMain:
    def test_exit_codes(self, tmp_path, caplog):
        assert main(["tune", "--config", str(tmp_path / "missing.json")]) == 2
        path = write_config(tmp_path, **QUAD, ce={"n_samples": 10, "rho": 0.2})
        assert main(["tune", "--config", str(path)]) == 2
        ok = write_config(tmp_path, **QUAD, ce={"max_rounds": 3})
        assert main(["tune", "--config", str(ok), "--out", str(tmp_path / "m"),
                     "--seed", "3"]) == 0
        assert json.loads((tmp_path / "m" / "summary.json").read_text())["seed"] == 3

    def test_runtime_failure(self, tmp_path):
        path = write_config(tmp_path, command="tune",
                            objective={"name": "convergence", "tuned": "beta2"},
                            space={"type": "interval", "a": 1.0, "b": 2.0},
                            ce={"n_samples": 10, "rho": 0.1, "favorability": 5})
        assert main(["tune", "--config", str(path), "--out", str(tmp_path / "f")]) == 3
