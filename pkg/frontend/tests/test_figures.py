"""Tests for figure-spec parsing and CSV-to-figure rendering."""

import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from heatlab_plot import (FigureSpec, PlotError, parse_figure_spec, render)
from heatlab_plot.cli import main

# cheap two-end run: enough time points for a fit, ~7 s total
PIPELINE_CFG = """
task = pipeline
weight = two_end
[model] family=exp_alpha alpha=0.5 n=2
[time] t_start=10 t_end=400 t_steps=13
"""

GEOMETRY_CFG = """
task = geometry
weight = two_end
[model] family=exp_alpha alpha=0.5 n=2
[grid] r_min=-8 r_max=8 nodes=257
"""


def write_table(path, header, *cols):
    rows = zip(*cols)
    lines = [header] + [",".join(f"{x:.17g}" for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def spec_text(csv_path, kind, out_path, **extra):
    lines = [f"input_csv = {csv_path}", f"kind = {kind}",
             f"output = {out_path}"]
    lines += [f"{key} = {value}" for key, value in extra.items()]
    return "\n".join(lines) + "\n"


@pytest.fixture
def bounds_dir(tmp_path):
    t = np.geomspace(10.0, 400.0, 13)
    numeric = np.exp(-0.8 * t ** (1.0 / 3.0))
    write_table(tmp_path / "bounds.csv", "t,upper,lower,numeric",
                t, 3.0 * numeric, 0.2 * numeric, numeric)
    (tmp_path / "report.json").write_text(json.dumps(
        {"fitted_exponent": 0.3402,
         "details": {"theoretical_exponent": 1.0 / 3.0}}))
    return tmp_path


@pytest.fixture
def iso_dir(tmp_path):
    v = np.geomspace(1.0, 1e8, 40)
    write_table(tmp_path / "iso.csv", "v,J_nu,J_warped,J_asymptotic",
                v, np.sqrt(v), 1.2 * np.sqrt(v), v / np.log(v + 3.0))
    return tmp_path


@pytest.fixture
def geometry_dir(tmp_path):
    r = np.linspace(0.0, 5.0, 21)
    write_table(tmp_path / "geometry.csv", "r,S,V",
                r, np.exp(r), np.expm1(r) + 1e-3)
    return tmp_path


class TestSpecParsing:
    def test_minimal_spec_fields(self):
        spec = parse_figure_spec(spec_text("a.csv", "geometry", "fig.png"))
        assert spec == FigureSpec(input_csv="a.csv", kind="geometry",
                                  output="fig.png")
        assert spec.log_x is None and spec.log_y is None
        assert spec.report is None

    def test_comments_blanks_and_report_key(self):
        text = ("# envelope figure\n\n"
                "input_csv = out/bounds.csv  # pipeline artifact\n"
                "kind = bounds_envelope\n"
                "output = fig.svg\n"
                "report = out/report.json\n")
        spec = parse_figure_spec(text)
        assert spec.input_csv == "out/bounds.csv"
        assert spec.report == "out/report.json"

    def test_boolean_flags_parsed(self):
        spec = parse_figure_spec(spec_text("a.csv", "geometry", "f.png",
                                           log_x="true", log_y="False"))
        assert spec.log_x is True and spec.log_y is False

    def test_unknown_key_rejected(self):
        with pytest.raises(PlotError, match="unknown key colour"):
            parse_figure_spec(spec_text("a.csv", "geometry", "f.png",
                                        colour="red"))

    def test_missing_required_key_named(self):
        with pytest.raises(PlotError, match="missing required key output"):
            parse_figure_spec("input_csv = a.csv\nkind = geometry\n")

    def test_duplicate_key_rejected(self):
        text = spec_text("a.csv", "geometry", "f.png") + "kind = geometry\n"
        with pytest.raises(PlotError, match="duplicate key kind"):
            parse_figure_spec(text)

    def test_bad_boolean_rejected(self):
        with pytest.raises(PlotError, match="log_x must be true or false"):
            parse_figure_spec(spec_text("a.csv", "geometry", "f.png",
                                        log_x="yes"))

    def test_unknown_kind_rejected(self):
        with pytest.raises(PlotError, match="unknown figure kind"):
            parse_figure_spec(spec_text("a.csv", "contour", "f.png"))

    def test_output_extension_checked(self):
        with pytest.raises(PlotError, match="png or .svg"):
            parse_figure_spec(spec_text("a.csv", "geometry", "f.pdf"))

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(PlotError, match="line 2"):
            parse_figure_spec("input_csv = a.csv\njust words\n")


class TestRenderSynthetic:
    @pytest.mark.parametrize("kind,source,name", [
        ("iso_profile", "iso_dir", "iso.csv"),
        ("bounds_envelope", "bounds_dir", "bounds.csv"),
        ("exponent_fit", "bounds_dir", "bounds.csv"),
        ("geometry", "geometry_dir", "geometry.csv"),
    ])
    def test_each_kind_writes_nonempty_png(self, request, tmp_path, kind,
                                           source, name):
        src = request.getfixturevalue(source)
        out = tmp_path / f"{kind}.png"
        result = render(parse_figure_spec(
            spec_text(src / name, kind, out)))
        assert result.output == out
        assert out.stat().st_size > 0
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_svg_output_is_deterministic(self, bounds_dir, tmp_path):
        paths = [tmp_path / "a.svg", tmp_path / "b.svg"]
        for p in paths:
            render(parse_figure_spec(
                spec_text(bounds_dir / "bounds.csv", "bounds_envelope", p)))
        first, second = (p.read_bytes() for p in paths)
        assert first.lstrip()[:5] == b"<?xml"
        assert first == second

    def test_png_output_is_deterministic(self, iso_dir, tmp_path):
        paths = [tmp_path / "a.png", tmp_path / "b.png"]
        for p in paths:
            render(parse_figure_spec(
                spec_text(iso_dir / "iso.csv", "iso_profile", p)))
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_inputs_never_modified(self, bounds_dir, tmp_path):
        csv, rep = bounds_dir / "bounds.csv", bounds_dir / "report.json"
        before = [hashlib.sha256(p.read_bytes()).hexdigest()
                  for p in (csv, rep)]
        render(parse_figure_spec(
            spec_text(csv, "exponent_fit", tmp_path / "f.png")))
        after = [hashlib.sha256(p.read_bytes()).hexdigest()
                 for p in (csv, rep)]
        assert before == after

    def test_empty_csv_errors_without_output(self, tmp_path):
        (tmp_path / "iso.csv").write_text("")
        out = tmp_path / "f.png"
        with pytest.raises(PlotError, match="empty"):
            render(parse_figure_spec(
                spec_text(tmp_path / "iso.csv", "iso_profile", out)))
        assert not out.exists()

    def test_header_only_csv_errors_without_output(self, tmp_path):
        (tmp_path / "iso.csv").write_text("v,J_nu,J_warped,J_asymptotic\n")
        out = tmp_path / "f.png"
        with pytest.raises(PlotError, match="no data rows"):
            render(parse_figure_spec(
                spec_text(tmp_path / "iso.csv", "iso_profile", out)))
        assert not out.exists()

    def test_header_mismatch_names_columns(self, tmp_path):
        t = np.linspace(1.0, 2.0, 5)
        write_table(tmp_path / "bounds.csv", "t,upper,lower,value",
                    t, t, t, t)
        out = tmp_path / "f.png"
        with pytest.raises(PlotError) as err:
            render(parse_figure_spec(
                spec_text(tmp_path / "bounds.csv", "bounds_envelope", out)))
        assert "missing: numeric" in str(err.value)
        assert "unexpected: value" in str(err.value)
        assert not out.exists()

    def test_missing_input_errors(self, tmp_path):
        with pytest.raises(PlotError, match="input not found"):
            render(parse_figure_spec(
                spec_text(tmp_path / "nope.csv", "geometry",
                          tmp_path / "f.png")))

    def test_nonfinite_values_rejected(self, tmp_path):
        r = np.linspace(0.0, 1.0, 4)
        s = np.array([1.0, np.nan, 1.0, 1.0])
        write_table(tmp_path / "geometry.csv", "r,S,V", r, s, r + 1.0)
        with pytest.raises(PlotError, match="non-finite"):
            render(parse_figure_spec(
                spec_text(tmp_path / "geometry.csv", "geometry",
                          tmp_path / "f.png")))

    def test_missing_report_errors_for_envelope(self, bounds_dir, tmp_path):
        (bounds_dir / "report.json").unlink()
        out = tmp_path / "f.png"
        with pytest.raises(PlotError, match="report not found"):
            render(parse_figure_spec(
                spec_text(bounds_dir / "bounds.csv", "bounds_envelope",
                          out)))
        assert not out.exists()

    def test_invalid_report_json_errors(self, bounds_dir, tmp_path):
        (bounds_dir / "report.json").write_text("{not json")
        with pytest.raises(PlotError, match="not valid JSON"):
            render(parse_figure_spec(
                spec_text(bounds_dir / "bounds.csv", "exponent_fit",
                          tmp_path / "f.png")))

    def test_report_key_overrides_sibling_default(self, bounds_dir,
                                                  tmp_path):
        moved = tmp_path / "elsewhere.json"
        moved.write_text((bounds_dir / "report.json").read_text())
        (bounds_dir / "report.json").unlink()
        result = render(parse_figure_spec(
            spec_text(bounds_dir / "bounds.csv", "bounds_envelope",
                      tmp_path / "f.png", report=moved)))
        assert "0.340" in result.annotation

    def test_annotation_shows_fit_and_target(self, bounds_dir, tmp_path):
        result = render(parse_figure_spec(
            spec_text(bounds_dir / "bounds.csv", "bounds_envelope",
                      tmp_path / "f.png")))
        assert result.annotation == "fitted exponent 0.340 (target 0.333)"

    def test_annotation_without_target_when_details_absent(self, bounds_dir,
                                                           tmp_path):
        (bounds_dir / "report.json").write_text(
            json.dumps({"fitted_exponent": 0.25}))
        result = render(parse_figure_spec(
            spec_text(bounds_dir / "bounds.csv", "exponent_fit",
                      tmp_path / "f.png")))
        assert result.annotation == "fitted exponent 0.250"

    def test_exponent_fit_requires_decaying_numeric(self, tmp_path):
        t = np.linspace(1.0, 2.0, 5)
        write_table(tmp_path / "bounds.csv", "t,upper,lower,numeric",
                    t, 4.0 * t, 2.0 * t, 3.0 * t)
        (tmp_path / "report.json").write_text(
            json.dumps({"fitted_exponent": 0.5}))
        out = tmp_path / "f.png"
        with pytest.raises(PlotError, match="below 1"):
            render(parse_figure_spec(
                spec_text(tmp_path / "bounds.csv", "exponent_fit", out)))
        assert not out.exists()

    def test_axis_flag_overrides_still_render(self, geometry_dir, tmp_path):
        out = tmp_path / "f.png"
        render(parse_figure_spec(
            spec_text(geometry_dir / "geometry.csv", "geometry", out,
                      log_x="false", log_y="false")))
        assert out.stat().st_size > 0


class TestCli:
    def test_renders_and_prints_annotation(self, bounds_dir, tmp_path,
                                           capsys):
        spec = tmp_path / "fig.spec"
        out = tmp_path / "envelope.png"
        spec.write_text(spec_text(bounds_dir / "bounds.csv",
                                  "bounds_envelope", out))
        assert main([str(spec)]) == 0
        captured = capsys.readouterr()
        assert f"wrote {out}" in captured.out
        assert "fitted exponent 0.340" in captured.out
        assert out.stat().st_size > 0

    def test_missing_spec_file_exits_one(self, tmp_path, capsys):
        assert main([str(tmp_path / "nope.spec")]) == 1
        assert "spec error" in capsys.readouterr().err

    def test_bad_spec_exits_one(self, tmp_path, capsys):
        spec = tmp_path / "fig.spec"
        spec.write_text("kind = geometry\n")
        assert main([str(spec)]) == 1
        assert "missing required key" in capsys.readouterr().err

    def test_render_failure_exits_one(self, tmp_path, capsys):
        spec = tmp_path / "fig.spec"
        spec.write_text(spec_text(tmp_path / "nope.csv", "geometry",
                                  tmp_path / "f.png"))
        assert main([str(spec)]) == 1
        assert "plot error" in capsys.readouterr().err


@pytest.fixture(scope="session")
def pipeline_out(tmp_path_factory):
    """Real CLI artifacts for the alpha = 1/2 two-end model."""
    root = tmp_path_factory.mktemp("pipeline")
    runs = (("run.cfg", PIPELINE_CFG, root / "out"),
            ("geom.cfg", GEOMETRY_CFG, root / "geom"))
    for name, text, out in runs:
        cfg = root / name
        cfg.write_text(text)
        proc = subprocess.run(
            [sys.executable, "-m", "heatlab.cli", "run", str(cfg),
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    return root


class TestPipelineSmoke:
    def test_each_kind_renders_nonempty(self, pipeline_out, tmp_path):
        sources = {"iso_profile": pipeline_out / "out" / "iso.csv",
                   "bounds_envelope": pipeline_out / "out" / "bounds.csv",
                   "exponent_fit": pipeline_out / "out" / "bounds.csv",
                   "geometry": pipeline_out / "geom" / "geometry.csv"}
        for kind, csv in sources.items():
            out = tmp_path / f"{kind}.png"
            render(parse_figure_spec(spec_text(csv, kind, out)))
            assert out.stat().st_size > 0, kind

    def test_envelope_annotation_matches_report(self, pipeline_out,
                                                tmp_path):
        report = json.loads(
            (pipeline_out / "out" / "report.json").read_text())
        result = render(parse_figure_spec(
            spec_text(pipeline_out / "out" / "bounds.csv",
                      "bounds_envelope", tmp_path / "envelope.png")))
        assert f"{report['fitted_exponent']:.3f}" in result.annotation
        assert "target 0.333" in result.annotation
