"""Config parsing, report output, suite runner and the exit-code contract."""

import json

import pytest

from contactlab.cli import main
from contactlab.suites import (OUT_ENV, SUITE_CRITERIA, Check, ConfigError, ExperimentConfig,
                               Measurement, parse_config_text, resolve_out_dir, run_suite)


class TestConfig:
    def test_parse(self):
        cfg = parse_config_text("# comment\ngrid = 16\nseed=3  # trailing\n\ntol-psi = 1e-8\nj_choice = anisotropic\n")
        assert cfg.grid == 16 and cfg.seed == 3 and cfg.tol_psi == 1e-8 and cfg.j_choice == "anisotropic"

    def test_defaults_untouched(self):
        assert parse_config_text("").grid is None

    @pytest.mark.parametrize("text", ["grid = sixteen", "colour = blue", "grid 16", "band = 1.5"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    @pytest.mark.parametrize("kw", [{"grid": 12}, {"grid": 4}, {"grid": 16, "band": 8}, {"tol_psi": 0.0},
                                    {"jobs": 0}, {"j_choice": "round"}, {"s_max": 9}])
    def test_validation(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw).validate()

    def test_band_clipped_to_grid(self):
        assert ExperimentConfig().band_for(8, 4) == 3

    def test_out_dir_precedence(self, monkeypatch):
        cfg = ExperimentConfig(out="from_config")
        monkeypatch.delenv(OUT_ENV, raising=False)
        assert resolve_out_dir(None, cfg) == "from_config"
        monkeypatch.setenv(OUT_ENV, "from_env")
        assert resolve_out_dir(None, cfg) == "from_env"
        assert resolve_out_dir("from_flag", cfg) == "from_flag"


class TestRecords:
    @pytest.mark.parametrize("op,thr,value,ok", [("<=", 1.0, 0.5, True), ("<=", 1.0, float("nan"), False),
                                                 (">=", 0.9, 0.95, True), ("within", (1.9, 2.1), 2.2, False),
                                                 ("==", True, True, True)])
    def test_measurement(self, op, thr, value, ok):
        assert Measurement("q", value, op, thr).passed is ok

    def test_check_needs_measurements(self):
        assert not Check("empty", 1).passed
        assert not Check("broken", 1, error="boom").passed

    def test_every_criterion_has_one_suite(self):
        crits = sorted(c for entries in SUITE_CRITERIA.values() for c, _ in entries)
        assert crits == list(range(1, 16))


class TestMain:
    def test_unknown_suite(self, capsys):
        assert main(["no-such-suite"]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["solve-psi", "--config", str(tmp_path / "missing.cfg")]) == 2

    def test_bad_config(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("grid = 20\n")
        assert main(["verify-complex", "--config", str(p), "--out", str(tmp_path)]) == 2

    def test_verify_complex_and_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["verify-complex", "--grid", "16", "--seed", "7", "--out", str(a)]) == 0
        assert main(["verify-complex", "--grid", "16", "--seed", "7", "--out", str(b), "--jobs", "2"]) == 0
        csvs = sorted(p.name for p in a.glob("*.csv"))
        assert csvs and csvs == sorted(p.name for p in b.glob("*.csv"))
        for name in csvs:
            assert (a / name).read_bytes() == (b / name).read_bytes()
        report = json.loads((a / "verify-complex.json").read_text())
        assert report["passed"] and [c["criterion"] for c in report["checks"]] == [1, 2, 3]

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert main(["contact-field"]) == 0
        assert (tmp_path / "env" / "contact-field.json").exists()

    def test_config_file_overridden_by_flags(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("grid = 8\nseed = 1\n")
        assert main(["verify-hodge", "--config", str(p), "--seed", "5", "--out", str(tmp_path)]) == 0
        cfg = json.loads((tmp_path / "verify-hodge.json").read_text())["config"]
        assert cfg["grid"] == 8 and cfg["seed"] == 5


def test_numerical_failure_is_recorded(tmp_path):
    rep = run_suite("group-ops", ExperimentConfig(grid=8, out=str(tmp_path)))
    check = rep.check(12)
    assert not check.passed and check.error and "SolverFailure" in check.error


def test_all_on_small_grid(tmp_path):
    rep = run_suite("all", ExperimentConfig(grid=8), out_dir=tmp_path)
    assert sorted(c.criterion for c in rep.checks) == list(range(1, 16))
    assert rep.check(5).passed
    assert (tmp_path / "all.json").exists() and (tmp_path / "verify-hodge_dense_vs_cg.csv").exists()


def test_unknown_suite_in_runner():
    with pytest.raises(ConfigError):
        run_suite("bogus")
