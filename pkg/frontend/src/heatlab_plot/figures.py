"""Render figures from the CSV artifacts of the heatlab pipeline.

Each figure kind binds to one declared CSV schema:

- ``iso_profile``      reads ``v,J_nu,J_warped,J_asymptotic`` (iso.csv),
- ``bounds_envelope``  reads ``t,upper,lower,numeric`` (bounds.csv),
- ``exponent_fit``     reads ``t,upper,lower,numeric`` (bounds.csv),
- ``geometry``         reads ``r,S,V`` (geometry.csv).

The envelope and exponent figures annotate the fitted decay exponent; the
value is read from the run's ``report.json`` (by default the file next to
the input CSV), never recomputed here.  Rendering is read-only on its
inputs and deterministic: fixed figure geometry, no timestamps, identical
input and spec give byte-identical output.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

plt.rcParams["svg.hashsalt"] = "heatlab-plot"


class PlotError(ValueError):
    """Any failure turning a figure spec into a figure."""


KINDS = ("iso_profile", "bounds_envelope", "exponent_fit", "geometry")

_SCHEMAS = {
    "iso_profile": ("v", "J_nu", "J_warped", "J_asymptotic"),
    "bounds_envelope": ("t", "upper", "lower", "numeric"),
    "exponent_fit": ("t", "upper", "lower", "numeric"),
    "geometry": ("r", "S", "V"),
}

# (log_x, log_y) used when the spec leaves the axis flags unset
_LOG_DEFAULTS = {
    "iso_profile": (True, True),
    "bounds_envelope": (True, True),
    "exponent_fit": (True, True),
    "geometry": (False, True),
}

_ANNOTATED = ("bounds_envelope", "exponent_fit")


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input table, kind, output path, axis flags."""

    input_csv: str
    kind: str
    output: str
    log_x: bool | None = None
    log_y: bool | None = None
    report: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}; expected "
                            f"one of {', '.join(KINDS)}")
        if Path(self.output).suffix.lower() not in (".png", ".svg"):
            raise PlotError(f"output must end in .png or .svg, got "
                            f"{self.output!r}")


@dataclass(frozen=True)
class RenderResult:
    output: Path
    annotation: str = ""


_BOOL = {"true": True, "false": False}


def parse_figure_spec(text: str) -> FigureSpec:
    """Parse ``key = value`` lines (``#`` comments) into a FigureSpec."""
    fields: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise PlotError(f"expected key = value at line {lineno}: {raw!r}")
        if key in fields:
            raise PlotError(f"duplicate key {key} at line {lineno}")
        if key in ("log_x", "log_y"):
            if value.lower() not in _BOOL:
                raise PlotError(f"{key} must be true or false, got {value!r}")
            fields[key] = _BOOL[value.lower()]
        elif key in ("input_csv", "kind", "output", "report"):
            fields[key] = value
        else:
            raise PlotError(f"unknown key {key} at line {lineno}")
    for required in ("input_csv", "kind", "output"):
        if required not in fields:
            raise PlotError(f"missing required key {required}")
    return FigureSpec(**fields)


def _load_table(path: Path, kind: str) -> np.ndarray:
    if not path.is_file():
        raise PlotError(f"input not found: {path}")
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PlotError(f"{path} is empty")
    expected = _SCHEMAS[kind]
    got = tuple(name.strip() for name in lines[0].split(","))
    if got != expected:
        missing = [c for c in expected if c not in got]
        unexpected = [c for c in got if c not in expected]
        parts = [f"{kind} needs columns {','.join(expected)}"]
        if missing:
            parts.append(f"missing: {','.join(missing)}")
        if unexpected:
            parts.append(f"unexpected: {','.join(unexpected)}")
        raise PlotError("; ".join(parts) + f" ({path})")
    if len(lines) < 2:
        raise PlotError(f"{path} has a header but no data rows")
    data = np.genfromtxt(io.StringIO(text), delimiter=",", names=True)
    data = np.atleast_1d(data)
    if not all(np.all(np.isfinite(data[c])) for c in expected):
        raise PlotError(f"{path} contains non-finite values")
    return data


def _load_report(spec: FigureSpec) -> dict:
    path = Path(spec.report) if spec.report else \
        Path(spec.input_csv).parent / "report.json"
    if not path.is_file():
        raise PlotError(
            f"report not found: {path} (the {spec.kind} annotation reads "
            "the fitted exponent from the run report; set key report= to "
            "point at it)")
    try:
        report = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PlotError(f"{path} is not valid JSON: {exc}") from exc
    if "fitted_exponent" not in report:
        raise PlotError(f"{path} has no fitted_exponent entry")
    return report


def _axes(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=100)
    log_x, log_y = _LOG_DEFAULTS[spec.kind]
    if spec.log_x is not None:
        log_x = spec.log_x
    if spec.log_y is not None:
        log_y = spec.log_y
    if log_x:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    return fig, ax


def _annotation_text(report: dict) -> str:
    fitted = float(report["fitted_exponent"])
    text = f"fitted exponent {fitted:.3f}"
    theo = report.get("details", {}).get("theoretical_exponent")
    if theo is not None:
        text += f" (target {float(theo):.3f})"
    return text


def _draw_iso_profile(ax, data) -> str:
    ax.plot(data["v"], data["J_nu"], color="tab:blue", label="J_nu")
    ax.plot(data["v"], data["J_warped"], color="tab:orange", ls="--",
            label="J_warped")
    ax.plot(data["v"], data["J_asymptotic"], color="tab:green", ls=":",
            label="J_asymptotic")
    ax.set_xlabel("v")
    ax.set_ylabel("J(v)")
    ax.legend(loc="upper left")
    return ""


def _draw_geometry(ax, data) -> str:
    ax.plot(data["r"], data["S"], color="tab:blue", label="S(r)")
    ax.plot(data["r"], data["V"], color="tab:orange", ls="--", label="V(r)")
    ax.set_xlabel("r")
    ax.set_ylabel("area / volume")
    ax.legend(loc="upper left")
    return ""


def _draw_bounds_envelope(ax, data, report) -> str:
    t = data["t"]
    ax.fill_between(t, data["lower"], data["upper"], color="0.85",
                    label="envelope")
    ax.plot(t, data["upper"], color="tab:red", label="upper")
    ax.plot(t, data["numeric"], color="tab:blue", label="numeric")
    ax.plot(t, data["lower"], color="tab:green", label="lower")
    ax.set_xlabel("t")
    ax.set_ylabel("sup-diagonal")
    ax.legend(loc="lower left")
    text = _annotation_text(report)
    ax.text(0.97, 0.97, text, transform=ax.transAxes, ha="right", va="top",
            bbox={"boxstyle": "round", "facecolor": "white",
                  "edgecolor": "0.6"})
    return text


def _draw_exponent_fit(ax, data, report) -> str:
    t, w = data["t"], -np.log(data["numeric"])
    keep = w > 0
    if not np.any(keep):
        raise PlotError("exponent_fit needs numeric values below 1 "
                        "(-log must be positive on a log axis)")
    t, w = t[keep], w[keep]
    ax.plot(t, w, "o", ms=4, color="tab:blue", label="-log numeric")
    beta = float(report["fitted_exponent"])
    ax.plot(t, w[-1] * (t / t[-1]) ** beta, color="tab:red",
            label=f"slope {beta:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("-log sup-diagonal")
    ax.legend(loc="upper left")
    text = _annotation_text(report)
    ax.text(0.97, 0.05, text, transform=ax.transAxes, ha="right",
            va="bottom", bbox={"boxstyle": "round", "facecolor": "white",
                               "edgecolor": "0.6"})
    return text


def render(spec: FigureSpec) -> RenderResult:
    """Write the figure for ``spec``; returns the path and annotation.

    Nothing is written when loading or drawing fails, and the inputs are
    only ever read.
    """
    data = _load_table(Path(spec.input_csv), spec.kind)
    report = _load_report(spec) if spec.kind in _ANNOTATED else None
    fig, ax = _axes(spec)
    try:
        if spec.kind == "iso_profile":
            annotation = _draw_iso_profile(ax, data)
        elif spec.kind == "geometry":
            annotation = _draw_geometry(ax, data)
        elif spec.kind == "bounds_envelope":
            annotation = _draw_bounds_envelope(ax, data, report)
        else:
            annotation = _draw_exponent_fit(ax, data, report)
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        metadata = {"Date": None} if out.suffix.lower() == ".svg" else None
        fig.savefig(out, metadata=metadata)
    finally:
        plt.close(fig)
    return RenderResult(output=Path(spec.output), annotation=annotation)
