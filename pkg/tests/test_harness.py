"""Experiment harness: configuration, protocols on a reduced budget, metric
serialization, and the oracle self-check suite."""

import json

import pytest

from lof.harness import (
    CSV_FIELDS,
    METHODS,
    TASKS,
    ExperimentConfig,
    build_environment,
    compute_task_bounds,
    read_metrics,
    resolve_map_text,
    run_composability,
    run_oracle_suite,
    run_satisfaction,
    task_fsa,
    write_metrics,
)

TINY = ExperimentConfig(
    map="scenario", tasks=("or",), seeds=1,
    option_episodes=60, option_max_steps=40,
    eval_every=1500, rollouts_per_eval=2, rollout_cap=100,
    lofql_eval_episodes=100, lofql_retrain_episodes=40,
    lofql_retrain_eval_every=10, flat_episodes=30)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.map == "delivery"
        assert cfg.tasks == tuple(TASKS)
        assert cfg.methods == METHODS

    def test_from_json_tuples(self):
        cfg = ExperimentConfig.from_json(
            {"tasks": ["or", "if"], "methods": ["lof-vi"], "seeds": 2})
        assert cfg.tasks == ("or", "if")
        assert cfg.methods == ("lof-vi",)
        assert cfg.seeds == 2

    def test_load(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seeds": 3, "map": "scenario"}))
        cfg = ExperimentConfig.load(path)
        assert cfg.seeds == 3
        assert cfg.map == "scenario"

    def test_rejects_unknown_key(self):
        with pytest.raises(TypeError):
            ExperimentConfig.from_json({"nope": 1})


class TestMapResolution:
    def test_packaged_names(self):
        assert "can=0.5" in resolve_map_text("delivery")
        assert "a.S..bch" in resolve_map_text("scenario")

    def test_filesystem_path(self, tmp_path):
        path = tmp_path / "custom.map"
        path.write_text("a.S\n")
        assert resolve_map_text(str(path)) == "a.S\n"

    def test_missing(self):
        with pytest.raises(OSError):
            resolve_map_text("no-such-map")


class TestTaskDefinitions:
    def test_formulas_compile(self):
        for name in TASKS:
            fsa = task_fsa(name)
            assert fsa.goal in fsa.states

    def test_bounds_bracket_returns(self):
        env, events = build_environment(TINY)
        fsa = task_fsa("or")
        lo, hi = compute_task_bounds(env, fsa, events, TINY.rollout_cap)
        assert lo < hi < 0


class TestProtocols:
    def test_satisfaction_rows(self):
        rows = run_satisfaction(TINY)
        methods = {r["method"] for r in rows}
        assert methods == set(METHODS)
        for r in rows:
            assert r["task"] == "or"
            assert 0.0 <= r["satisfaction"] <= 1.0
            assert 0.0 <= r["mean_return"] <= 1.0
            assert r["steps"] > 0
        # per-method step columns are non-decreasing
        for method in methods:
            steps = [r["steps"] for r in rows if r["method"] == method]
            assert steps == sorted(steps)
        # fully trained options satisfy the task by the final evaluation
        final_vi = [r for r in rows if r["method"] == "lof-vi"][-1]
        assert final_vi["satisfaction"] == 1.0

    def test_composability_rows(self):
        rows = run_composability(TINY)
        methods = {r["method"] for r in rows}
        assert methods == {"lof-vi", "lof-ql", "greedy"}
        vi_rows = [r for r in rows if r["method"] == "lof-vi"]
        assert vi_rows[0]["steps"] == 1
        assert len(vi_rows) <= TINY.max_retrain_sweeps
        assert vi_rows[-1]["satisfaction"] == 1.0
        greedy_rows = [r for r in rows if r["method"] == "greedy"]
        assert len(greedy_rows) == 1
        assert greedy_rows[0]["steps"] == 0

    def test_progress_callback(self):
        seen = []
        run_composability(
            ExperimentConfig(map="scenario", tasks=("or",),
                             methods=("greedy",), seeds=2,
                             option_episodes=40, rollouts_per_eval=1),
            progress=seen.append)
        assert len(seen) == 2


class TestOracleSuite:
    def test_all_pass(self):
        report = run_oracle_suite(ExperimentConfig(tasks=("or", "if")))
        assert report
        failures = [(n, d) for n, ok, d in report if not ok]
        assert failures == []
        names = [n for n, _, _ in report]
        assert any(n.startswith("translation") for n in names)
        assert any(n.startswith("option-terminates") for n in names)
        assert any(n.startswith("planner-oracle") for n in names)


class TestMetricsIo:
    def test_round_trip(self, tmp_path):
        rows = [{"method": "lof-vi", "task": "or", "seed": 0, "steps": 10,
                 "mean_return": 0.5, "std_return": 0.1, "satisfaction": 1.0},
                {"method": "qrm", "task": "or", "seed": 1, "steps": 20,
                 "mean_return": 0.25, "std_return": 0.0, "satisfaction": 0.0}]
        path = tmp_path / "metrics.csv"
        write_metrics(rows, path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_FIELDS)
        assert read_metrics(path) == rows
