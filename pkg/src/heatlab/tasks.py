"""Task dispatch: run a parsed config and write its CSV/JSON artifacts.

Artifacts per task (all numbers printed with 17 significant digits so
identical configs give byte-identical files):

- geometry:  ``geometry.csv`` (r,S,V) with V the cumulative weighted volume
  from the first grid radius.
- iso:       ``iso.csv`` (v,J_nu,J_warped,J_asymptotic); the warped column
  uses the unit sphere fiber and the largest tabulated area as the warp
  bound C0; the asymptotic column uses the profile's subexponential order
  alpha when it has one, else order 1 (exponential-type area).
- fk:        ``fk.csv`` (v,Lambda) from the half-line profile.
- bounds:    ``bounds.csv`` (t,upper,lower,numeric) plus ``report.json``.
- pipeline:  bounds artifacts plus ``iso.csv`` and ``eigen.csv``
  (R,lambda1,rayleigh_upper).
- solve:     one ``field_t<k>.csv`` (r,u) per reported time, k the index in
  the time grid, plus ``report.json`` with the mass diagnostics.
- verify:    runs the seeded invariant suites, prints one PASS/FAIL line
  per suite, and returns exit 3 on any FAIL.

``run_task`` resolves the output directory as explicit argument over the
``HEATLAB_OUT`` environment variable over the config's own ``dir`` key, and
echoes the effective config into it; exit codes are 0 success, 1 config
error, 2 numeric failure, 3 invariant violation.  ``sweep`` runs children
into per-config subdirectories and merges their reports into ``sweep.json``
keyed by config hash, with exit status the maximum over children.
"""

from __future__ import annotations

import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import quadrature
from .config import TaskConfig, config_hash, model_params, render_config
from .errors import ConfigError, HeatlabError
from .htransform import build_two_end_weight, verify_kernel_identity
from .isoperimetry import (asymptotic_profile, functional_integrals,
                           functional_lower_bound, monotone_envelope,
                           profile_halfline, profile_sphere,
                           warped_product_profile)
from .model import WeightedModel
from .monotone import CONSTANT, NONINCREASING, ZERO, MonotoneTab, generalized_inverse
from .profiles import FULL_LINE, make_profile, two_end_profile
from .solver import NEUMANN, GridSpec, solve
from .spectral import (FaberKrahnFunction, eigenvalue_table, fk_from_iso,
                       gamma_inverse, heat_upper_bound, lambda1_dirichlet,
                       lambda1_rayleigh_upper, two_end_pipeline)

_FMT = "%.17g"


def _write_csv(path: Path, header: str, columns) -> None:
    rows = np.column_stack(columns)
    lines = [header]
    lines += [",".join(_FMT % x for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _mirror_json(config: TaskConfig, path: Path, header: str,
                 columns) -> None:
    if config.out_format == "json":
        names = header.split(",")
        payload = {name: [float(x) for x in col]
                   for name, col in zip(names, columns)}
        _write_json(path.with_suffix(".json"), payload)


def _times(config: TaskConfig) -> np.ndarray:
    if config.log_spaced:
        grid = np.geomspace(config.t_start, config.t_end, config.t_steps)
    else:
        grid = np.linspace(config.t_start, config.t_end, config.t_steps)
    if config.anchor_time is not None and config.anchor_time < config.t_start:
        grid = np.concatenate(([config.anchor_time], grid))
    return grid


def _base_model(config: TaskConfig) -> WeightedModel:
    params = model_params(config)
    family = params.pop("family")
    return WeightedModel(make_profile(family, **params))


def _working_model(config: TaskConfig):
    """(model, alpha, n): the transformed model when weight=two_end."""
    params = model_params(config)
    alpha = float(params["alpha"]) if "alpha" in params else None
    n = int(params.get("n", 2))
    if config.weight == "two_end":
        base = WeightedModel(two_end_profile(alpha, n))
        pair = build_two_end_weight(base, r_max=400.0)
        return pair.transformed, alpha, n
    return _base_model(config), alpha, n


def _run_geometry(config: TaskConfig, out: Path) -> list[str]:
    model, _, _ = _working_model(config)
    lo = config.r_min
    if lo is None:
        lo = max(model.r_lo, 0.0) if model.domain != FULL_LINE else -10.0
    hi = config.r_max if config.r_max is not None else 10.0
    if not lo < hi:
        raise ConfigError(f"geometry grid needs r_min < r_max, got "
                          f"{lo} >= {hi}")
    r = np.linspace(lo, hi, config.nodes)
    log_s = model.log_area_weighted(r)
    with np.errstate(divide="ignore"):
        log_v = quadrature.cumulative_log_integral(
            model.log_area_weighted, r, max_step=(hi - lo) / 8192.0)
    with np.errstate(under="ignore"):
        S, V = np.exp(log_s), np.exp(log_v)
    _write_csv(out / "geometry.csv", "r,S,V", (r, S, V))
    _mirror_json(config, out / "geometry.csv", "r,S,V", (r, S, V))
    return ["geometry.csv"]


def _iso_columns(config: TaskConfig):
    model, alpha, n = _working_model(config)
    r_start = 2.0 if config.weight == "two_end" else None
    j_nu = profile_halfline(model, r_start=r_start, v_max=1e10)
    if not j_nu.j_over_v_nonincreasing:
        j_nu = monotone_envelope(j_nu)
    r_probe = np.linspace(j_nu.r_start, j_nu.r_max, 512)
    c0 = float(np.exp(np.max(model.log_area_weighted(r_probe))
                      / max(n - 1, 1)))
    j_warped = warped_product_profile(j_nu, profile_sphere(n), C0=c0)
    j_asym = asymptotic_profile(alpha if alpha is not None else 1.0, n)
    v = np.geomspace(1.0, 0.5 * math.exp(j_nu.log_v_max), 200)
    return v, j_nu, j_warped, j_asym


def _run_iso(config: TaskConfig, out: Path) -> list[str]:
    v, j_nu, j_warped, j_asym = _iso_columns(config)
    cols = (v, j_nu.value(v), j_warped.value(v), j_asym.value(v))
    _write_csv(out / "iso.csv", "v,J_nu,J_warped,J_asymptotic", cols)
    _mirror_json(config, out / "iso.csv", "v,J_nu,J_warped,J_asymptotic", cols)
    return ["iso.csv"]


def _run_fk(config: TaskConfig, out: Path) -> list[str]:
    model, _, _ = _working_model(config)
    r_start = 2.0 if config.weight == "two_end" else None
    j_nu = profile_halfline(model, r_start=r_start, v_max=1e10)
    if not j_nu.j_over_v_nonincreasing:
        j_nu = monotone_envelope(j_nu)
    fk = fk_from_iso(j_nu)
    v = np.geomspace(1.0, 0.5 * math.exp(j_nu.log_v_max), 200)
    cols = (v, fk.Lambda(v))
    _write_csv(out / "fk.csv", "v,Lambda", cols)
    _mirror_json(config, out / "fk.csv", "v,Lambda", cols)
    return ["fk.csv"]


def _run_bounds(config: TaskConfig, out: Path,
                with_extras: bool) -> list[str]:
    params = model_params(config)
    alpha, n = float(params["alpha"]), int(params.get("n", 2))
    report = two_end_pipeline(alpha, n, times=_times(config),
                              dt=config.dt, nodes=config.nodes,
                              r_min=config.r_min, r_max=config.r_max)
    cols = (report.times, report.upper, report.lower, report.numeric)
    _write_csv(out / "bounds.csv", "t,upper,lower,numeric", cols)
    _mirror_json(config, out / "bounds.csv", "t,upper,lower,numeric", cols)
    files = ["bounds.csv"]
    if with_extras:
        files += _run_iso(config, out)
        model, _, _ = _working_model(config)
        radii = np.geomspace(2.0, 64.0, 12)
        table = eigenvalue_table(model, radii)
        eig_cols = (table[:, 0], table[:, 1], table[:, 2])
        _write_csv(out / "eigen.csv", "R,lambda1,rayleigh_upper", eig_cols)
        _mirror_json(config, out / "eigen.csv", "R,lambda1,rayleigh_upper",
                     eig_cols)
        files.append("eigen.csv")
    _write_json(out / "report.json", {
        "task": config.task,
        "config_sha256": config_hash(config),
        "fitted_exponent": report.fitted_exponent,
        "details": _jsonable(report.details),
        "files": sorted(files),
    })
    return files + ["report.json"]


def _run_solve(config: TaskConfig, out: Path) -> list[str]:
    model, _, _ = _working_model(config)
    lo = config.r_min
    if lo is None:
        lo = max(model.r_lo, 0.0) if model.domain != FULL_LINE else -20.0
    hi = config.r_max if config.r_max is not None else 20.0
    grid = GridSpec(lo, hi, config.nodes, config.dt, spacing=config.spacing)
    r = grid.node_positions()
    times = _times(config)
    source = int(np.clip(np.argmin(np.abs(r)), 1, r.size - 2))
    init = np.zeros(r.size)
    init[source] = 1.0
    cell = np.gradient(r) * np.exp(model.log_area_weighted(r))
    init /= cell[source]
    result = solve(model, grid, NEUMANN, init, times, allow_leak=True)
    files = []
    for k, t in enumerate(times):
        name = f"field_t{k}.csv"
        _write_csv(out / name, "r,u", (r, result.fields[k]))
        files.append(name)
    _write_json(out / "report.json", {
        "task": config.task,
        "config_sha256": config_hash(config),
        "times": [float(t) for t in times],
        "mass_history": [float(m) for m in result.mass_history],
        "mass_drift": float(result.mass_drift),
        "leak_warning": bool(result.leak_warning),
        "clamp_count": int(result.clamp_count),
        "files": sorted(files),
    })
    return files + ["report.json"]


# ---------------------------------------------------------------------------
# verification suites


def _random_step_tab(rng):
    m = int(rng.integers(2, 10))
    breaks = np.concatenate(([0.0], np.cumsum(rng.uniform(0.05, 3.0, m))))
    vals = np.concatenate((np.sort(rng.uniform(0.0, 5.0, m))[::-1], [0.0]))
    vals[:-1] += 1e-3
    return MonotoneTab(breaks, vals, direction=NONINCREASING,
                       interpolation=CONSTANT, extrapolation=ZERO)


def _suite_inverse_identity(rng) -> str | None:
    worst = 0.0
    for _ in range(100):
        tab = _random_step_tab(rng)
        pair = generalized_inverse(tab)
        ref = tab.integral()
        worst = max(worst, abs(pair.phi_star.integral() - ref) / ref)
    return None if worst <= 1e-10 else f"integral identity off by {worst:.2e}"


def _suite_functional_bound(rng) -> str | None:
    P = 6.0
    for a, b in ((0.5, 0.5), (1.0, 0.3), (0.0, 1.0)):
        f = lambda x, a=a: x ** a
        g = lambda y, b=b: min(y, P - y) ** b if 0.0 < y < P else 0.0
        for _ in range(20):
            m = int(rng.integers(2, 8))
            cuts = np.sort(rng.uniform(0.0, P, m - 1))
            breaks = np.concatenate(([0.0], cuts, [P]))
            vals = np.concatenate((np.sort(rng.uniform(0.05, 8.0, m))[::-1],
                                   [0.0]))
            tab = MonotoneTab(breaks, vals, direction=NONINCREASING,
                              interpolation=CONSTANT, extrapolation=ZERO)
            pair = generalized_inverse(tab)
            fi, gi = functional_integrals(pair, f, g)
            bound = functional_lower_bound(f, g, P, pair.common_integral,
                                           validate=False)
            if fi + gi < bound * (1.0 - 1e-12):
                return (f"bound {bound:.6g} exceeds admissible sum "
                        f"{fi + gi:.6g}")
    return None


def _suite_gamma_closed_form(rng) -> str | None:
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 7))
        t = float(10.0 ** rng.uniform(-3, 3))
        lam = lambda v, n=n: np.asarray(v, dtype=float) ** (-2.0 / n)
        fk = FaberKrahnFunction(Lambda=lam, nonincreasing=True,
                                integrable_at_zero=True)
        expect = (2.0 * t / n) ** (n / 2.0)
        worst = max(worst, abs(gamma_inverse(fk, t) - expect) / expect)
    return None if worst <= 1e-6 else f"gamma misses closed form by {worst:.2e}"


def _suite_gamma_monotone(rng) -> str | None:
    from .spectral import hypothesis_fk

    fk = hypothesis_fk(0.5, 2, 1.0)
    t = np.sort(10.0 ** rng.uniform(-1, 3, 40))
    up = np.array([heat_upper_bound(fk, x) for x in t])
    gam = np.array([gamma_inverse(fk, x) for x in t])
    if not np.all(np.diff(gam) > 0):
        return "gamma not strictly increasing"
    if not np.all(np.diff(up) < 0):
        return "upper bound not strictly decreasing"
    return None


def _suite_eigen_ordering(rng) -> str | None:
    from .profiles import EuclideanProfile, HyperbolicProfile, PowerProfile

    models = [WeightedModel(PowerProfile(0.0, 2)),
              WeightedModel(EuclideanProfile(3)),
              WeightedModel(HyperbolicProfile(3))]
    pair = build_two_end_weight(WeightedModel(two_end_profile(0.5, 2)),
                                r_max=400.0)
    models.append(pair.transformed)
    for model in models:
        for R in (2.0, 8.0, 32.0):
            lam = lambda1_dirichlet(model, R)
            ray = lambda1_rayleigh_upper(model, R)
            if lam > ray:
                return f"lambda1 {lam:.6g} above rayleigh {ray:.6g} at R={R}"
    return None


def _suite_mass_conservation(rng) -> str | None:
    model = WeightedModel(make_profile("power", beta=0.0, n=2))
    grid = GridSpec(0.0, 40.0, 513, 0.01)
    r = grid.node_positions()
    init = np.exp(-((r - 5.0) ** 2))
    result = solve(model, grid, NEUMANN, init, [0.5, 1.0], allow_leak=True)
    m0 = float(result.mass_history[0])
    if result.mass_drift > 1e-10 * m0:
        return f"mass drift {result.mass_drift:.2e} exceeds 1e-10 of mass"
    return None


def _suite_kernel_identity(rng) -> str | None:
    pair = build_two_end_weight(WeightedModel(two_end_profile(0.5, 2)),
                                r_max=400.0)
    rep = verify_kernel_identity(pair, r_max=16.0, times=[0.5, 1.0],
                                 source_radii=[1.5, 4.0], nodes=257, dt=0.04)
    if rep.max_error_fine > 1e-2:
        return f"transform identity error {rep.max_error_fine:.2e}"
    if not 1.7 <= rep.order <= 2.3:
        return f"transform identity order {rep.order:.2f} not second order"
    return None


def _suite_bounds_ordering(rng) -> str | None:
    report = two_end_pipeline(0.5, times=np.geomspace(10.0, 400.0, 13),
                              nodes=1025, n_sources=13)
    if not np.all(report.lower <= report.numeric):
        return "lower bound exceeds the numeric diagonal"
    if not np.all(report.numeric <= report.upper):
        return "numeric diagonal exceeds the upper bound"
    return None


_SUITES = (
    ("generalized inverse integral identity", _suite_inverse_identity),
    ("functional lower bound vs admissible pairs", _suite_functional_bound),
    ("gamma inversion closed form", _suite_gamma_closed_form),
    ("gamma monotonicity", _suite_gamma_monotone),
    ("eigenvalue ordering lambda1 <= rayleigh", _suite_eigen_ordering),
    ("solver mass conservation", _suite_mass_conservation),
    ("kernel transform identity", _suite_kernel_identity),
    ("bounds ordering on the two-end pipeline", _suite_bounds_ordering),
)


def _run_verify(config: TaskConfig, out: Path) -> int:
    failures = {}
    for name, suite in _SUITES:
        detail = suite(np.random.default_rng(config.seed))
        status = "PASS" if detail is None else "FAIL"
        line = f"{status}  {name}"
        if detail is not None:
            line += f": {detail}"
            failures[name] = detail
        print(line)
    _write_json(out / "verify.json", {
        "seed": config.seed,
        "suites": [name for name, _ in _SUITES],
        "failures": failures,
    })
    return 3 if failures else 0


# ---------------------------------------------------------------------------
# entry points


def resolve_out_dir(config: TaskConfig, out_dir: str | None = None) -> Path:
    chosen = out_dir or os.environ.get("HEATLAB_OUT") or config.out_dir
    return Path(chosen)


def run_task(config: TaskConfig, out_dir: str | None = None) -> int:
    """Dispatch one task; returns the process exit code."""
    out = resolve_out_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(render_config(config))
    try:
        if config.task == "geometry":
            _run_geometry(config, out)
        elif config.task == "iso":
            _run_iso(config, out)
        elif config.task == "fk":
            _run_fk(config, out)
        elif config.task == "bounds":
            _run_bounds(config, out, with_extras=False)
        elif config.task == "pipeline":
            _run_bounds(config, out, with_extras=True)
        elif config.task == "solve":
            _run_solve(config, out)
        elif config.task == "verify":
            return _run_verify(config, out)
        else:
            raise ConfigError(f"unknown task {config.task!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (HeatlabError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0


def sweep(jobs, out_dir: str) -> int:
    """Run (name, config-or-None, error-or-None) jobs; merge into sweep.json.

    Each parsed config runs in ``<out_dir>/<12-char config hash>``; entries
    carry the exit code and, when available, the child's report content.
    The sweep exit status is the maximum over child statuses.
    """
    out = Path(os.environ.get("HEATLAB_OUT") or out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries: dict[str, dict] = {}
    status = 0
    for name, config, error in jobs:
        if config is None:
            entries[f"unparsed:{name}"] = {"name": name, "exit": 1,
                                           "error": str(error)}
            status = max(status, 1)
            continue
        digest = config_hash(config)
        child = out / digest[:12]
        code = run_task(config, out_dir=str(child))
        entry = {"name": name, "exit": code, "config_sha256": digest}
        report = child / "report.json"
        if report.exists():
            entry["report"] = json.loads(report.read_text())
        entries[digest] = entry
        status = max(status, code)
    _write_json(out / "sweep.json", {"entries": entries,
                                     "exit": status})
    return status
