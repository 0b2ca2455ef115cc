"""Sectioned key=value configs for the task runner.

Grammar
-------
- ``#`` starts a comment anywhere on a line.
- ``[name]`` switches the current section; ``key = value`` assigns into it
  (spaces around ``=`` optional).  Several tokens may share one line, so
  ``[model] family=exp_alpha alpha=0.5 n=2`` is a complete model section.
- Assignments before any section header land in ``[task]``.

Sections and keys
-----------------
``[task]``    task (geometry | iso | fk | bounds | solve | pipeline | verify),
              weight (none | two_end), seed (default 42), anchor_time.
``[model]``   family plus the profile grammar keys of that family.
``[grid]``    r_min, r_max, nodes (>= 64), spacing (uniform | graded), dt.
``[time]``    t_start, t_end, t_steps (>= 2), log_spaced (default true).
``[output]``  dir, format (csv | json).

``parse_config`` rejects unknown sections and keys, checks every numeric
constraint, and reports the offending line; ``render_config`` writes the
canonical text back so that ``parse_config(render_config(c)) == c``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace

from .errors import ConfigError
from .profiles import make_profile
from .solver import GRADED, UNIFORM

TASKS = ("geometry", "iso", "fk", "bounds", "solve", "pipeline", "verify")
WEIGHTS = ("none", "two_end")
FORMATS = ("csv", "json")
SPACINGS = (UNIFORM, GRADED)

# tasks that run the solver / bound chain and therefore need a time grid
_TIMED_TASKS = ("bounds", "solve", "pipeline")
# tasks that operate on a model
_MODEL_TASKS = ("geometry", "iso", "fk", "bounds", "solve", "pipeline")

_SECTION_KEYS = {
    "task": ("task", "weight", "seed", "anchor_time"),
    "grid": ("r_min", "r_max", "nodes", "spacing", "dt"),
    "time": ("t_start", "t_end", "t_steps", "log_spaced"),
    "output": ("dir", "format"),
}

_TOKEN = re.compile(
    r"[ \t]*(?:\[(?P<sec>[A-Za-z_]+)\]"
    r"|(?P<key>[A-Za-z_][A-Za-z0-9_]*)[ \t]*=[ \t]*(?P<val>[^\s#\[\]]+))")


@dataclass(frozen=True)
class TaskConfig:
    """Parsed, validated run description; immutable and hashable."""

    task: str
    model: str = ""
    weight: str = "none"
    seed: int = 42
    anchor_time: float | None = None
    r_min: float | None = None
    r_max: float | None = None
    nodes: int = 1025
    spacing: str = UNIFORM
    dt: float = 0.01
    t_start: float | None = None
    t_end: float | None = None
    t_steps: int | None = None
    log_spaced: bool = True
    out_dir: str = "out"
    out_format: str = "csv"


def model_params(config_or_model) -> dict:
    """Split a profile grammar string into {'family': ..., key: str-value}."""
    text = getattr(config_or_model, "model", config_or_model)
    params: dict[str, str] = {}
    for token in text.split():
        key, _, value = token.partition("=")
        if not _ or not key or not value:
            raise ConfigError(f"bad model token {token!r}")
        params[key] = value
    return params


def _canonical_model(pairs: dict[str, str]) -> str:
    family = pairs["family"]
    rest = sorted((k, v) for k, v in pairs.items() if k != "family")
    return " ".join([f"family={family}"] + [f"{k}={v}" for k, v in rest])


def _tokenize(text: str):
    """Yield (lineno, section_or_None, key_or_None, value) tokens."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        pos = 0
        while pos < len(line) and line[pos:].strip():
            match = _TOKEN.match(line, pos)
            if match is None:
                raise ConfigError(
                    f"syntax error at line {lineno}: {line[pos:].strip()!r}")
            if match.group("sec") is not None:
                yield lineno, match.group("sec"), None, None
            else:
                yield lineno, None, match.group("key"), match.group("val")
            pos = match.end()


def _convert(key: str, value: str, lineno: int):
    kind = {
        "seed": int, "nodes": int, "t_steps": int,
        "anchor_time": float, "r_min": float, "r_max": float, "dt": float,
        "t_start": float, "t_end": float,
        "log_spaced": bool,
    }.get(key, str)
    if kind is bool:
        if value not in ("true", "false"):
            raise ConfigError(f"line {lineno}: key {key} expects true or "
                              f"false, got {value!r}")
        return value == "true"
    if kind is str:
        return value
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: key {key} expects "
                          f"{kind.__name__}, got {value!r}") from exc


def parse_config(text: str) -> TaskConfig:
    """Parse and validate the grammar; errors carry line numbers."""
    section = "task"
    seen: set[tuple[str, str]] = set()
    fields: dict[str, object] = {}
    model_pairs: dict[str, str] = {}
    for lineno, sec, key, value in _tokenize(text):
        if sec is not None:
            if sec not in ("model", *_SECTION_KEYS):
                raise ConfigError(f"unknown section [{sec}] at line {lineno}")
            section = sec
            continue
        if (section, key) in seen:
            raise ConfigError(
                f"duplicate key {section}.{key} at line {lineno}")
        seen.add((section, key))
        if section == "model":
            model_pairs[key] = value
            continue
        if key not in _SECTION_KEYS[section]:
            raise ConfigError(
                f"unknown key {section}.{key} at line {lineno}")
        name = {"dir": "out_dir", "format": "out_format"}.get(key, key)
        fields[name] = _convert(key, value, lineno)

    if model_pairs:
        if "family" not in model_pairs:
            raise ConfigError("model section requires key family")
        try:
            make_profile(model_pairs["family"],
                         **{k: v for k, v in model_pairs.items()
                            if k != "family"})
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"model: {exc}") from exc
        fields["model"] = _canonical_model(model_pairs)

    if "task" not in fields:
        raise ConfigError("missing required key task")
    config = TaskConfig(**fields)
    _validate(config)
    return config


def _validate(config: TaskConfig) -> None:
    if config.task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {config.task!r}")
    if config.weight not in WEIGHTS:
        raise ConfigError(
            f"weight must be one of {WEIGHTS}, got {config.weight!r}")
    if config.spacing not in SPACINGS:
        raise ConfigError(
            f"spacing must be one of {SPACINGS}, got {config.spacing!r}")
    if config.out_format not in FORMATS:
        raise ConfigError(
            f"format must be one of {FORMATS}, got {config.out_format!r}")
    if config.seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {config.seed}")
    if config.nodes < 64:
        raise ConfigError(f"nodes must be at least 64, got {config.nodes}")
    if not config.dt > 0:
        raise ConfigError(f"dt must be positive, got {config.dt}")
    if config.r_min is not None and config.r_max is not None \
            and not config.r_min < config.r_max:
        raise ConfigError(
            f"r_min must be below r_max, got {config.r_min} >= {config.r_max}")

    if config.task in _MODEL_TASKS and not config.model:
        raise ConfigError(f"task={config.task} requires a model section "
                          "(key family)")
    params = model_params(config) if config.model else {}
    if config.weight == "two_end" and params.get("family") != "exp_alpha":
        raise ConfigError("weight=two_end requires model family=exp_alpha "
                          "(the subexponential plus end)")
    if config.task in ("bounds", "pipeline") and config.weight != "two_end":
        raise ConfigError(f"task={config.task} requires weight=two_end")

    if config.task in _TIMED_TASKS:
        for key in ("t_start", "t_end", "t_steps"):
            if getattr(config, key) is None:
                raise ConfigError(f"task={config.task} requires key {key}")
    for key in ("t_start", "t_end"):
        value = getattr(config, key)
        if value is not None and not value > 0:
            raise ConfigError(f"{key} must be positive, got {value}")
    if config.t_start is not None and config.t_end is not None \
            and not config.t_start < config.t_end:
        raise ConfigError(
            f"t_start must be below t_end, got {config.t_start} >= "
            f"{config.t_end}")
    if config.t_steps is not None and config.t_steps < 2:
        raise ConfigError(f"t_steps must be at least 2, got {config.t_steps}")
    if config.anchor_time is not None:
        if not config.anchor_time > 0:
            raise ConfigError(
                f"anchor_time must be positive, got {config.anchor_time}")
        if config.t_start is not None and config.anchor_time > config.t_start:
            raise ConfigError(
                "anchor_time must not exceed t_start (calibration happens "
                "at or before the first reported time)")


def render_config(config: TaskConfig) -> str:
    """Canonical text form; parse_config inverts it exactly."""
    _validate(config)
    lines = ["[task]", f"task = {config.task}", f"weight = {config.weight}",
             f"seed = {config.seed}"]
    if config.anchor_time is not None:
        lines.append(f"anchor_time = {config.anchor_time!r}")
    if config.model:
        lines.append("[model]")
        for token in config.model.split():
            key, _, value = token.partition("=")
            lines.append(f"{key} = {value}")
    lines.append("[grid]")
    for key in ("r_min", "r_max"):
        value = getattr(config, key)
        if value is not None:
            lines.append(f"{key} = {value!r}")
    lines += [f"nodes = {config.nodes}", f"spacing = {config.spacing}",
              f"dt = {config.dt!r}"]
    if any(getattr(config, k) is not None
           for k in ("t_start", "t_end", "t_steps")):
        lines.append("[time]")
        for key in ("t_start", "t_end"):
            value = getattr(config, key)
            if value is not None:
                lines.append(f"{key} = {value!r}")
        if config.t_steps is not None:
            lines.append(f"t_steps = {config.t_steps}")
        lines.append(f"log_spaced = {'true' if config.log_spaced else 'false'}")
    lines += ["[output]", f"dir = {config.out_dir}",
              f"format = {config.out_format}", ""]
    return "\n".join(lines)


def config_hash(config: TaskConfig) -> str:
    """sha256 of the canonical rendering; keys sweep aggregation."""
    return hashlib.sha256(render_config(config).encode()).hexdigest()


def with_output_dir(config: TaskConfig, out_dir: str) -> TaskConfig:
    return replace(config, out_dir=out_dir)
