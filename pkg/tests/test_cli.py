"""Tests for config parsing, task execution, sweeps, and the CLI."""

import json

import numpy as np
import pytest

from heatlab.cli import main
from heatlab.config import (TaskConfig, config_hash, parse_config,
                            render_config)
from heatlab.errors import ConfigError
from heatlab.tasks import run_task, sweep

GEOMETRY_CFG = """
# euclidean plane up to radius 4
task = geometry
[model] family=euclidean n=2
[grid] r_min=0 r_max=4 nodes=257
"""

BOUNDS_CFG = """
task = bounds
weight = two_end
[model] family=exp_alpha alpha=0.5 n=2
[time] t_start=10 t_end=400 t_steps=13
"""


class TestConfigGrammar:
    def test_minimal_config_gets_defaults(self):
        cfg = parse_config("task=verify\n")
        assert cfg.task == "verify"
        assert cfg.seed == 42
        assert cfg.nodes == 1025
        assert cfg.out_format == "csv"
        assert cfg.out_dir == "out"

    def test_sections_and_inline_comments(self):
        cfg = parse_config(GEOMETRY_CFG)
        assert cfg.task == "geometry"
        assert cfg.model == "family=euclidean n=2"
        assert cfg.r_min == 0.0 and cfg.r_max == 4.0
        assert cfg.nodes == 257

    def test_several_tokens_share_a_line(self):
        cfg = parse_config("task=solve [model] family=power beta=0 n=3\n"
                           "[grid] r_min=0 r_max=9 nodes=65 dt=0.5\n"
                           "[time] t_start=1 t_end=2 t_steps=2\n")
        assert cfg.model == "family=power beta=0 n=3"
        assert cfg.dt == 0.5

    def test_bare_keys_belong_to_the_task_section(self):
        cfg = parse_config("task=verify seed=7\n")
        assert cfg.seed == 7

    def test_missing_task_rejected(self):
        with pytest.raises(ConfigError, match="task"):
            parse_config("[model] family=euclidean n=2\n")

    def test_unknown_section_names_the_line(self):
        with pytest.raises(ConfigError, match=r"\[mesh\] at line 2"):
            parse_config("task=verify\n[mesh] nodes=65\n")

    def test_unknown_key_names_the_line(self):
        with pytest.raises(ConfigError, match="grid.cells at line 3"):
            parse_config("task=verify\n[grid]\ncells=65\n")

    def test_duplicate_key_names_section_and_line(self):
        with pytest.raises(ConfigError, match="duplicate key grid.nodes"):
            parse_config("task=verify\n[grid] nodes=65 nodes=129\n")

    def test_syntax_error_names_the_line(self):
        with pytest.raises(ConfigError, match="syntax error at line 2"):
            parse_config("task=verify\n= broken\n")

    def test_model_parameters_validated_at_parse_time(self):
        with pytest.raises(ConfigError, match="model:"):
            parse_config("task=geometry\n[model] family=exp_alpha alpha=1.5\n")

    def test_unknown_model_family_rejected(self):
        with pytest.raises(ConfigError, match="model:.*torus"):
            parse_config("task=geometry\n[model] family=torus\n")

    def test_two_end_weight_needs_exp_alpha(self):
        with pytest.raises(ConfigError, match="two_end"):
            parse_config("task=geometry weight=two_end\n"
                         "[model] family=euclidean n=2\n")

    def test_bounds_requires_the_two_end_weight(self):
        with pytest.raises(ConfigError, match="two_end"):
            parse_config("task=bounds\n[model] family=exp_alpha alpha=0.5\n"
                         "[time] t_start=1 t_end=2 t_steps=2\n")

    def test_timed_task_names_its_missing_key(self):
        with pytest.raises(ConfigError, match="t_start"):
            parse_config("task=bounds weight=two_end\n"
                         "[model] family=exp_alpha alpha=0.5\n")

    def test_reversed_time_window_rejected(self):
        with pytest.raises(ConfigError, match="t_start"):
            parse_config("task=bounds weight=two_end\n"
                         "[model] family=exp_alpha alpha=0.5\n"
                         "[time] t_start=5 t_end=2 t_steps=4\n")

    def test_coarse_grid_rejected(self):
        with pytest.raises(ConfigError, match="nodes"):
            parse_config("task=verify\n[grid] nodes=32\n")

    def test_anchor_after_window_start_rejected(self):
        with pytest.raises(ConfigError, match="anchor_time"):
            parse_config("task=bounds weight=two_end anchor_time=20\n"
                         "[model] family=exp_alpha alpha=0.5\n"
                         "[time] t_start=10 t_end=40 t_steps=4\n")


class TestConfigRoundTrip:
    CONFIGS = [
        "task=verify seed=3\n",
        GEOMETRY_CFG,
        BOUNDS_CFG,
        "task=solve\n[model] family=hyperbolic n=3\n"
        "[grid] r_min=0.5 r_max=8 nodes=129 dt=0.05 spacing=uniform\n"
        "[time] t_start=0.5 t_end=4 t_steps=3 log_spaced=false\n"
        "[output] dir=elsewhere format=json\n",
    ]

    @pytest.mark.parametrize("text", CONFIGS)
    def test_render_then_parse_is_identity(self, text):
        cfg = parse_config(text)
        assert parse_config(render_config(cfg)) == cfg

    def test_hash_ignores_formatting(self):
        a = parse_config("task=geometry\n[model] family=euclidean n=2\n")
        b = parse_config("[model] n=2 family=euclidean\n[task] task=geometry\n")
        assert config_hash(a) == config_hash(b)

    def test_hash_separates_different_configs(self):
        a = parse_config("task=geometry\n[model] family=euclidean n=2\n")
        b = parse_config("task=geometry\n[model] family=euclidean n=3\n")
        assert config_hash(a) != config_hash(b)


class TestRunTask:
    def test_geometry_volume_matches_euclidean_plane(self, tmp_path):
        cfg = parse_config(GEOMETRY_CFG)
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        lines = (tmp_path / "geometry.csv").read_text().splitlines()
        assert lines[0] == "r,S,V"
        data = np.genfromtxt(tmp_path / "geometry.csv", delimiter=",",
                             names=True)
        i = np.argmin(np.abs(data["r"] - 2.0))
        assert data["V"][i] == pytest.approx(2.0, rel=1e-6)
        assert (tmp_path / "config.txt").read_text() == render_config(cfg)

    def test_repeat_runs_are_byte_identical(self, tmp_path):
        cfg = parse_config(GEOMETRY_CFG)
        run_task(cfg, out_dir=str(tmp_path / "a"))
        run_task(cfg, out_dir=str(tmp_path / "b"))
        assert ((tmp_path / "a" / "geometry.csv").read_bytes()
                == (tmp_path / "b" / "geometry.csv").read_bytes())

    def test_environment_overrides_config_directory(self, tmp_path,
                                                    monkeypatch):
        monkeypatch.setenv("HEATLAB_OUT", str(tmp_path / "env"))
        run_task(parse_config(GEOMETRY_CFG))
        assert (tmp_path / "env" / "geometry.csv").exists()

    def test_explicit_directory_beats_environment(self, tmp_path,
                                                  monkeypatch):
        monkeypatch.setenv("HEATLAB_OUT", str(tmp_path / "env"))
        run_task(parse_config(GEOMETRY_CFG), out_dir=str(tmp_path / "arg"))
        assert (tmp_path / "arg" / "geometry.csv").exists()
        assert not (tmp_path / "env").exists()

    def test_iso_columns_cover_the_declared_header(self, tmp_path):
        cfg = parse_config("task=iso\n[model] family=euclidean n=2\n")
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        data = np.genfromtxt(tmp_path / "iso.csv", delimiter=",", names=True)
        assert data.dtype.names == ("v", "J_nu", "J_warped", "J_asymptotic")
        assert np.all(data["J_nu"] > 0)
        assert np.all(data["J_warped"] > 0)

    def test_fk_table_is_positive_and_nonincreasing(self, tmp_path):
        cfg = parse_config("task=fk\n[model] family=euclidean n=2\n")
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        data = np.genfromtxt(tmp_path / "fk.csv", delimiter=",", names=True)
        assert data.dtype.names == ("v", "Lambda")
        assert np.all(data["Lambda"] > 0)
        assert np.all(np.diff(data["Lambda"]) <= 1e-12)

    def test_json_format_mirrors_the_csv(self, tmp_path):
        cfg = parse_config("task=fk\n[model] family=euclidean n=2\n"
                           "[output] format=json\n")
        run_task(cfg, out_dir=str(tmp_path))
        payload = json.loads((tmp_path / "fk.json").read_text())
        data = np.genfromtxt(tmp_path / "fk.csv", delimiter=",", names=True)
        assert payload["v"] == pytest.approx(list(data["v"]))
        assert payload["Lambda"] == pytest.approx(list(data["Lambda"]))

    def test_solve_writes_one_field_per_time(self, tmp_path):
        cfg = parse_config("task=solve\n[model] family=power beta=0 n=2\n"
                           "[grid] r_min=0 r_max=30 nodes=257 dt=0.02\n"
                           "[time] t_start=0.5 t_end=2 t_steps=3\n")
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        fields = sorted(p.name for p in tmp_path.glob("field_t*.csv"))
        assert fields == ["field_t0.csv", "field_t1.csv", "field_t2.csv"]
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["mass_drift"] < 1e-8
        assert len(report["times"]) == 3

    def test_anchor_time_prepends_a_sample(self, tmp_path):
        cfg = parse_config("task=solve anchor_time=0.25\n"
                           "[model] family=power beta=0 n=2\n"
                           "[grid] r_min=0 r_max=30 nodes=257 dt=0.02\n"
                           "[time] t_start=0.5 t_end=2 t_steps=3\n")
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["times"][0] == pytest.approx(0.25)
        assert len(report["times"]) == 4
        assert (tmp_path / "field_t3.csv").exists()

    def test_numeric_failure_maps_to_exit_two(self, tmp_path, capsys):
        # the uncapped thin end has decreasing area, so no half-line profile
        cfg = parse_config("task=iso\n[model] family=exp_alpha alpha=0.5\n")
        assert run_task(cfg, out_dir=str(tmp_path)) == 2
        assert "numeric failure" in capsys.readouterr().err

    def test_verify_reports_every_suite(self, tmp_path, capsys):
        cfg = parse_config("task=verify seed=11\n")
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        out = capsys.readouterr().out
        report = json.loads((tmp_path / "verify.json").read_text())
        assert report["failures"] == {}
        for name in report["suites"]:
            assert f"PASS  {name}" in out


class TestBoundsTask:
    def test_bounds_writes_table_and_report(self, tmp_path):
        cfg = parse_config(BOUNDS_CFG)
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        data = np.genfromtxt(tmp_path / "bounds.csv", delimiter=",",
                             names=True)
        assert data.dtype.names == ("t", "upper", "lower", "numeric")
        assert np.all(data["lower"] <= data["numeric"])
        assert np.all(data["numeric"] <= data["upper"])
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["fitted_exponent"] > 0
        assert report["details"]["alpha"] == pytest.approx(0.5)
        assert report["config_sha256"] == config_hash(cfg)
        assert not (tmp_path / "eigen.csv").exists()

    def test_pipeline_adds_iso_and_eigen_tables(self, tmp_path):
        cfg = parse_config(BOUNDS_CFG.replace("task = bounds",
                                              "task = pipeline"))
        assert run_task(cfg, out_dir=str(tmp_path)) == 0
        for name in ("bounds.csv", "iso.csv", "eigen.csv", "report.json"):
            assert (tmp_path / name).exists()
        eig = np.genfromtxt(tmp_path / "eigen.csv", delimiter=",", names=True)
        assert eig.dtype.names == ("R", "lambda1", "rayleigh_upper")
        assert np.all(eig["lambda1"] <= eig["rayleigh_upper"])


class TestSweep:
    def test_empty_job_list_writes_an_empty_report(self, tmp_path):
        assert sweep([], str(tmp_path)) == 0
        report = json.loads((tmp_path / "sweep.json").read_text())
        assert report["entries"] == {} and report["exit"] == 0

    def test_children_run_under_hash_directories(self, tmp_path):
        cfg = parse_config(GEOMETRY_CFG)
        assert sweep([("g.cfg", cfg, None)], str(tmp_path)) == 0
        digest = config_hash(cfg)
        assert (tmp_path / digest[:12] / "geometry.csv").exists()
        report = json.loads((tmp_path / "sweep.json").read_text())
        assert report["entries"][digest]["exit"] == 0

    def test_one_bad_child_does_not_stop_the_rest(self, tmp_path):
        good = parse_config(GEOMETRY_CFG)
        jobs = [("a.cfg", good, None),
                ("b.cfg", None, ConfigError("syntax error at line 1"))]
        assert sweep(jobs, str(tmp_path)) == 1
        report = json.loads((tmp_path / "sweep.json").read_text())
        assert report["entries"]["unparsed:b.cfg"]["exit"] == 1
        assert report["entries"][config_hash(good)]["exit"] == 0


class TestCliMain:
    def test_run_executes_a_config_file(self, tmp_path):
        path = tmp_path / "job.cfg"
        path.write_text(GEOMETRY_CFG)
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 0
        assert (out / "geometry.csv").exists()

    def test_missing_config_file_is_a_config_error(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.cfg")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_bad_config_text_is_a_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("task=geometry\n[model] family=torus\n")
        assert main(["run", str(path)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_sweep_runs_every_config_in_the_directory(self, tmp_path):
        (tmp_path / "a.cfg").write_text(GEOMETRY_CFG)
        (tmp_path / "b.cfg").write_text(
            GEOMETRY_CFG.replace("n=2", "n=3"))
        (tmp_path / "c.cfg").write_text("task=geometry\n[model] family=bad\n")
        out = tmp_path / "results"
        assert main(["sweep", str(tmp_path), "--out", str(out)]) == 1
        report = json.loads((out / "sweep.json").read_text())
        assert len(report["entries"]) == 3
        codes = sorted(e["exit"] for e in report["entries"].values())
        assert codes == [0, 0, 1]

    def test_sweep_on_missing_directory_fails_cleanly(self, tmp_path, capsys):
        assert main(["sweep", str(tmp_path / "absent")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_verify_command_passes(self, tmp_path):
        assert main(["verify", "--seed", "5", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "verify.json").exists()
