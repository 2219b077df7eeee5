import dataclasses
import json

import numpy as np
import pytest

from dfsqrc.dfs import SingletBasis, build_singlet_basis
from dfsqrc.errors import ConfigError
from dfsqrc.experiments import pipelines as pl
from dfsqrc.experiments.cli import main
from dfsqrc.experiments.config import ExperimentConfig, load_config
from dfsqrc.experiments.rng import stream
from dfsqrc.experiments.validate import REGISTRY, run_checks, summary
from dfsqrc.readout import ReadoutModel

# small two-qubit configuration that keeps end-to-end runs at a few seconds
FAST = {"method": "two_qubit", "sweep": (4, 10, 20), "n_runs": 2, "n_test": 6}


class TestConfig:
    def test_preset_values(self, default_cfg):
        c = default_cfg
        assert (c.pump_ratio, c.eq_coef, c.read_coef, c.coupling) == (0.5, 0.2, 0.01, 10.0)
        assert (c.nu_min, c.n_fock, c.n_test, c.time_rule) == (0.15, 4, 10, "times_gamma")
        assert c.sweep == (10, 50, 100, 200, 400)
        assert c.basis == "singlet" and c.intercept and c.threshold == 0.5 and c.ridge == 0.0

    def test_file_and_override_precedence(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[experiment]\nseed = 7\nn_test = 4\n[dynamics]\ntime_rule = per_gamma\n")
        c = load_config(path, {"seed": 9, "n_runs": None})
        assert (c.seed, c.n_test, c.time_rule, c.n_runs) == (9, 4, "per_gamma", 5)

    def test_ini_round_trip(self, tmp_path, default_cfg):
        c = default_cfg.replace(seed=3, sweep=(2, 8), intercept=False)
        path = tmp_path / "c.ini"
        path.write_text(c.to_ini())
        assert load_config(path) == c

    @pytest.mark.parametrize(
        "override",
        [{"sweep": (3,)}, {"method": "three_qubit"}, {"n_test": 0}, {"seed": -1}, {"nu_min": 2.0}, {"time_rule": "x"}],
    )
    def test_invalid_values(self, override):
        with pytest.raises(ConfigError):
            load_config(overrides=override)

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[experiment]\nsed = 7\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(path)

    def test_bad_value_in_file(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[experiment]\nseed = seven\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_unknown_override_and_preset(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"colour": 1})
        with pytest.raises(ConfigError):
            load_config(preset="fast")

    def test_singlet_and_population_share_everything_else(self, default_cfg):
        s = default_cfg.replace(basis="singlet").to_dict()
        n = default_cfg.replace(basis="population").to_dict()
        assert {k for k in s if s[k] != n[k]} == {"basis"}


class TestRng:
    def test_streams_reproducible(self):
        a = stream(1, 0, "train").random(5)
        np.testing.assert_array_equal(a, stream(1, 0, "train").random(5))

    def test_streams_distinct(self):
        draws = {
            (run, p): stream(1, run, p).random() for run in range(3) for p in ("couplings", "weights", "train", "test")
        }
        assert len(set(draws.values())) == len(draws)

    def test_philox(self):
        assert isinstance(stream(1, 0, "test").bit_generator, np.random.Philox)

    def test_unknown_purpose(self):
        with pytest.raises(ValueError):
            stream(1, 0, "misc")


@pytest.fixture(scope="module")
def cfg():
    return load_config(overrides=FAST)


@pytest.fixture(scope="module")
def results(cfg):
    return pl.learn(cfg)


class TestPipelines:
    def test_alternating_labels(self, cfg):
        train = pl.teacher_set(cfg, 0, "train", 6)
        assert [t.label for t in train] == [0, 1, 0, 1, 0, 1]
        assert all(t.logneg >= cfg.nu_min for t in train if t.label == 1)

    def test_curve(self, cfg, results):
        rows = pl.error_curve(cfg, results)
        assert [r[0] for r in rows] == [4, 10, 20]
        for _, mean, lo, hi in rows:
            assert 0 <= lo <= mean <= hi <= 1
        assert all(r.diagnostic is None and r.feature_violations == 0 for r in results)

    def test_record(self, cfg, results):
        rec = pl.run_record(cfg, results, 1.0)
        assert rec["config"]["method"] == "two_qubit"
        run = rec["runs"][0]
        assert len(run["train_labels"]) == 20 and len(run["test_lognegs"]) == 6
        assert ReadoutModel.from_text(run["model"]).seeds == {"seed": cfg.seed, "run": 0}
        json.dumps(rec)

    def test_deterministic(self, cfg, results):
        again = pl.learn(cfg)
        assert [r.errors for r in again] == [r.errors for r in results]
        assert [r.model for r in again] == [r.model for r in results]

    def test_workers_do_not_change_results(self, cfg, results):
        parallel = pl.learn(cfg.replace(workers=2))
        assert [r.errors for r in parallel] == [r.errors for r in results]

    def test_features_match_forward_reading(self, cfg):
        inst = pl.make_instance(cfg, 0)
        reading = pl.ReadingMap(inst, cfg.teacher_dims)
        teacher = pl.teacher_set(cfg, 0, "train", 2)[1]
        rho = pl.read_teacher(inst.rho, teacher, inst.coupling, inst.params, inst.evolution)
        from dfsqrc.readout import reservoir_features

        heis = pl._features(cfg, reading, [teacher], stream(0, 0, "test"))[0]
        np.testing.assert_allclose(heis.values, reservoir_features(rho, "singlet").values, atol=1e-12)

    def test_reequilibration_flag(self, cfg):
        c = cfg.replace(reservoir_init="random_product", reequilibrate=True, sweep=(4,), n_runs=1, n_test=4)
        r = pl.learn_run(c, 0)
        assert r.diagnostic is None and 0 <= r.errors[4] <= 1

    def test_failure_is_recorded(self, cfg, monkeypatch):
        def boom(*args, **kwargs):
            raise pl.IntegrationError("breach")

        monkeypatch.setattr(pl, "make_instance", boom)
        r = pl.learn_run(cfg, 0)
        assert r.errors is None and "breach" in r.diagnostic
        assert pl.error_curve(cfg, [r]) == []

    def test_equilibration_runs(self, cfg):
        runs = pl.equilibration_runs(cfg)
        assert set(runs) == {"ground", "random_product"}
        assert pl.max_pairwise_deviation(runs["ground"]) <= 1e-8
        assert pl.max_pairwise_deviation(runs["random_product"]) > 1e-3
        assert all(pl.is_increasing(t.times) for t in runs.values())


class TestValidate:
    def test_all_pass(self):
        report = run_checks()
        assert [r["id"] for r in report] == list(REGISTRY)
        assert all(r["ok"] for r in report), summary(report)
        assert json.loads(summary(report))["passed"] is True

    def test_registry_spans_modules(self):
        assert {name.split(".")[0] for name in REGISTRY} == {"tensor", "hilbert", "dfs", "states", "dynamics", "readout"}

    def test_corrupted_basis(self):
        good = build_singlet_basis(6)
        v = good.vectors.copy()
        v[:, 0] = np.roll(v[:, 0], 1)
        report = run_checks(basis=SingletBasis(v, 6))
        failed = {r["id"] for r in report if not r["ok"]}
        assert "dfs.annihilation" in failed
        assert not any(name.startswith(("tensor", "states")) for name in failed)


class TestCli:
    def test_dump_dfs(self, tmp_path):
        assert main(["dump-dfs", "--out", str(tmp_path)]) == 0
        assert len((tmp_path / "dfs_basis.csv").read_text().splitlines()) == 65

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert main(["learn", "--n-train", "3", "--out", str(tmp_path)]) == 2
        assert "config error" in capsys.readouterr().err
        bad = tmp_path / "bad.ini"
        bad.write_text("[nope]\nx = 1\n")
        assert main(["learn", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_argparse_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["learn", "--method", "qutrit"])
        assert exc.value.code == 2

    def test_validate(self, tmp_path, capsys):
        assert main(["validate", "--out", str(tmp_path)]) == 0
        assert json.loads(capsys.readouterr().out)["passed"] is True

    def test_validate_failure_exit_code(self, tmp_path, monkeypatch):
        import dfsqrc.experiments.cli as cli

        monkeypatch.setattr(cli, "run_checks", lambda cfg: [{"id": "dfs.annihilation", "ok": False, "detail": ""}])
        assert main(["validate", "--out", str(tmp_path)]) == 1

    def test_equilibrate_csv(self, tmp_path):
        for sub in ("a", "b"):
            assert main(["equilibrate", "--seed", "5", "--out", str(tmp_path / sub)]) == 0
        for name in ("equilibrate_ground.csv", "equilibrate_random_product.csv"):
            first = (tmp_path / "a" / name).read_bytes()
            assert first == (tmp_path / "b" / name).read_bytes()
            assert b"\r" not in first
            lines = first.decode().splitlines()
            assert lines[0] == ",".join(pl.TRAJECTORY_HEADER)
            times = [float(line.split(",")[0]) for line in lines[1:]]
            assert pl.is_increasing(times)
        rows = np.loadtxt(tmp_path / "a" / "equilibrate_ground.csv", delimiter=",", skiprows=1)
        assert np.max(np.ptp(rows[:, 1:7], axis=1)) <= 1e-8

    def test_traces_csv(self, tmp_path):
        assert main(["traces", "--method", "two_qubit", "--out", str(tmp_path)]) == 0
        ent = np.loadtxt(tmp_path / "traces_entangled.csv", delimiter=",", skiprows=1)
        prod = np.loadtxt(tmp_path / "traces_product.csv", delimiter=",", skiprows=1)
        for m in (ent[:, 7:], prod[:, 7:]):
            assert np.all((m >= -1e-9) & (m <= 1 + 1e-9))
            assert np.all(m.sum(axis=1) <= 1 + 1e-9)
        assert np.max(np.abs(ent[-1, 7:] - prod[-1, 7:])) > 1e-6

    def test_learn_outputs(self, tmp_path, capsys):
        args = ["learn", "--method", "two_qubit", "--n-train", "8", "--runs", "2", "--n-test", "4", "--seed", "11"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b"), "--basis", "population"]) == 0
        assert main(args + ["--out", str(tmp_path / "c")]) == 0
        curve = (tmp_path / "a" / "error_curve.csv").read_bytes()
        assert curve.startswith(b"n_train,mean_error,min_error,max_error\n8,")
        assert curve == (tmp_path / "c" / "error_curve.csv").read_bytes()
        record = json.loads((tmp_path / "b" / "run_record.json").read_text())
        assert record["config"]["basis"] == "population"
        assert len(record["runs"]) == 2


def test_config_dataclass_is_frozen(default_cfg):
    with pytest.raises(dataclasses.FrozenInstanceError):
        default_cfg.seed = 1
    assert isinstance(default_cfg, ExperimentConfig)
