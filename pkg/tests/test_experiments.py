import json

import pytest

from misgp.cli import main
from misgp.errors import ConfigError
from misgp.experiments import (
    SCENARIOS,
    TRACE_COLUMNS,
    ExperimentConfig,
    run_experiment,
    run_replication,
    scenario_config,
    traces_to_csv,
    write_outputs,
)


def small(name="realizable", **over):
    cfg = scenario_config(name)
    cfg["domain"]["grid"]["resolution"] = 16
    cfg["horizon"] = 40
    cfg["replications"] = 2
    cfg.update(over)
    return cfg


class TestConfig:
    @pytest.mark.parametrize(
        "mutate,field",
        [
            (lambda c: c.pop("horizon"), "horizon"),
            (lambda c: c.update(horizon=0), "horizon"),
            (lambda c: c.update(replications=0), "replications"),
            (lambda c: c.update(norm_bound=0), "norm_bound"),
            (lambda c: c.update(algorithm={"name": "ec_gp_ucb", "eps": -1}), "algorithm.eps"),
            (lambda c: c.update(algorithm={"name": "thompson"}), "algorithm.name"),
            (lambda c: c.update(domain={}), "domain"),
        ],
    )
    def test_field_level_errors(self, mutate, field):
        cfg = small()
        mutate(cfg)
        with pytest.raises(ConfigError) as err:
            ExperimentConfig.from_dict(cfg)
        assert err.value.field == field

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="nope.json"):
            ExperimentConfig.load(tmp_path / "nope.json")

    def test_csv_domain(self, tmp_path):
        (tmp_path / "pts.csv").write_text("0.0\n0.5\n1.0\n")
        cfg = small(domain={"csv": "pts.csv"}, objective={"n_centers": 2, "norm": 1.0})
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        traces, _ = run_experiment(ExperimentConfig.load(tmp_path / "c.json"))
        assert set(traces[0].actions) <= {0, 1, 2}


class TestRun:
    @pytest.mark.parametrize("algorithm", ["gp_ucb", "ec_gp_ucb", "phased_us", "master"])
    def test_single_round(self, algorithm):
        cfg = small(horizon=2 if algorithm == "master" else 1, algorithm={"name": algorithm, "eps": 0.1})
        traces, summary = run_experiment(ExperimentConfig.from_dict(cfg))
        tr = traces[0]
        assert len(tr) == cfg["horizon"]
        res = run_replication(ExperimentConfig.from_dict(cfg), 0)
        obj = res.objective
        assert tr.inst_star[0] == pytest.approx(obj.f_star.max() - obj.f_star[tr.actions[0]])

    def test_summary_fields(self):
        _, s = run_experiment(ExperimentConfig.from_dict(small()))
        d = s.to_dict()
        assert d["replications"] == 2 and len(d["final_regret_star"]) == 2
        assert set(d["mean_avg_regret_star_at"]) == {"4", "10", "20", "40"}
        assert all(v >= 0 for v in d["mean_avg_regret_star_at"].values())
        assert d["std_regret_star"] >= 0

    def test_replications_are_order_independent(self):
        cfg = ExperimentConfig.from_dict(small(replications=3))
        traces, _ = run_experiment(cfg)
        alone = run_replication(cfg, 2).trace
        assert alone.actions == traces[2].actions and alone.cum_star == traces[2].cum_star

    def test_csv_layout_and_determinism(self):
        cfg = ExperimentConfig.from_dict(small("misspec_sign"))
        a = traces_to_csv(run_experiment(cfg)[0], "phased_us")
        b = traces_to_csv(run_experiment(cfg)[0], "phased_us")
        assert a == b
        assert a.splitlines()[0] == ",".join(TRACE_COLUMNS)
        assert len(a.splitlines()) == 1 + 2 * 40

    def test_spike_regret(self):
        traces, s = run_experiment(ExperimentConfig.from_dict(scenario_config("spike")))
        assert all(t.regret_star == pytest.approx(20.0, abs=1e-9) for t in traces)

    def test_master_summary_records_gamma(self):
        cfg = small("contextual_master", horizon=64)
        _, s = run_experiment(ExperimentConfig.from_dict(cfg))
        d = s.to_dict()
        assert d["gamma_T"] > 0 and d["n_bases"] == len(d["eps_hats"])
        assert len(d["affine_maps"]) == 2

    def test_gpucb_failure_runs(self):
        _, s = run_experiment(ExperimentConfig.from_dict(small("gpucb_failure")))
        assert s.mean_regret_star >= 0

    def test_write_outputs(self, tmp_path):
        cfg = ExperimentConfig.from_dict(small())
        traces, s = run_experiment(cfg)
        tp, sp = write_outputs(tmp_path / "out", traces, s)
        assert tp.read_text().startswith("round,")
        assert json.loads(sp.read_text())["algorithm"] == "ec_gp_ucb"


class TestCli:
    def test_scenarios_list(self, capsys):
        assert main(["scenarios", "list"]) == 0
        assert capsys.readouterr().out.split() == list(SCENARIOS)
        assert set(SCENARIOS) == {"realizable", "misspec_sin", "misspec_sign", "spike", "contextual_master", "gpucb_failure"}

    def test_missing_config(self, capsys):
        assert main(["run", "missing.json"]) == 2
        assert "missing.json" in capsys.readouterr().err

    def test_gamma_single_point(self, tmp_path, capsys):
        cfg = {
            "kernel": {"family": "se", "lengthscale": 1.0},
            "domain": {"grid": {"dimension": 1, "resolution": 1}},
            "norm_bound": 1.0,
            "horizon": 1,
            "lambda": 1.0,
            "algorithm": {"name": "gp_ucb"},
        }
        (tmp_path / "g.json").write_text(json.dumps(cfg))
        assert main(["gamma", str(tmp_path / "g.json")]) == 0
        rows = capsys.readouterr().out.splitlines()
        assert rows[0] == "method,t,lambda,value"
        assert "ExactBruteForce,1,1,0.346574" in rows

    def test_run_and_overrides(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps(small()))
        out = tmp_path / "out"
        assert main(["run", str(tmp_path / "c.json"), "--out", str(out), "--replications", "1", "--seed", "5"]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["replications"] == 1

    def test_run_is_byte_identical(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps(small("misspec_sin")))
        for d in ("a", "b"):
            assert main(["run", str(tmp_path / "c.json"), "--out", str(tmp_path / d)]) == 0
        assert (tmp_path / "a" / "traces.csv").read_bytes() == (tmp_path / "b" / "traces.csv").read_bytes()

    def test_coverage(self, tmp_path, capsys):
        cfg = small(horizon=20, replications=3)
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert main(["coverage", str(tmp_path / "c.json")]) == 0
        assert json.loads(capsys.readouterr().out)["runs"] == 3

    def test_bad_config_value(self, tmp_path, capsys):
        (tmp_path / "c.json").write_text(json.dumps(small(delta=2.0)))
        assert main(["run", str(tmp_path / "c.json")]) == 2
        assert "delta" in capsys.readouterr().err
