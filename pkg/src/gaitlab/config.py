"""Flat key-value run configuration: parsing, presets, environment
overrides, and resolved-manifest emission.

The on-disk format is deliberately minimal and diff-friendly::

    # comment
    controller = sme
    learner    = agol
    schedule   = online
    seed       = 7

Every run writes a manifest in the same format with ALL defaults resolved,
so re-running from the manifest reproduces the outputs bit-for-bit.
Environment variables prefixed ``GAITLAB_`` (e.g. ``GAITLAB_SEED=3``)
override file values; explicit CLI flags override both.
"""
from __future__ import annotations

import os

from .errors import ConfigError
from .experiment import ExperimentConfig

ENV_PREFIX = "GAITLAB_"

_STR_FIELDS = {"controller", "learner", "schedule", "reward_mode"}
_INT_FIELDS = {
    "episodes",
    "steps_per_episode",
    "batch_window",
    "repetitions",
    "seed",
    "n_legs",
    "ppo_epochs",
}
_FLOAT_FIELDS = {
    "lr_theta",
    "lr_sigma",
    "sigma_init",
    "sigma_action",
    "pibb_temperature",
    "ppo_clip",
    "baseline_lr",
}
_BOOL_FIELDS = {"keep_artifacts"}
CONFIG_FIELDS = _STR_FIELDS | _INT_FIELDS | _FLOAT_FIELDS | _BOOL_FIELDS


def _coerce(key: str, raw: str):
    value = raw.strip()
    try:
        if key in _STR_FIELDS:
            return value
        if key in _INT_FIELDS:
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
        if key in _BOOL_FIELDS:
            low = value.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(value)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw.strip()!r}") from None
    raise ConfigError(f"unknown config field {key!r}")


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        if key not in CONFIG_FIELDS:
            raise ConfigError(f"line {lineno}: unknown config field {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path) -> dict:
    with open(path, "r") as fh:
        return parse_config_text(fh.read())


def apply_env_overrides(values: dict, environ=None) -> dict:
    """Overlay GAITLAB_<FIELD> environment variables onto config values."""
    environ = os.environ if environ is None else environ
    merged = dict(values)
    for key in sorted(CONFIG_FIELDS):
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            merged[key] = _coerce(key, raw)
    return merged


def build_experiment_config(values: dict) -> ExperimentConfig:
    unknown = set(values) - CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(**values)


def resolved_values(cfg: ExperimentConfig) -> dict:
    """All config fields with every default resolved to its effective value.

    Feeding the result back through build_experiment_config yields a config
    that behaves identically (the manifest contract).
    """
    out = {
        "controller": cfg.controller,
        "learner": cfg.learner,
        "schedule": cfg.schedule,
        "episodes": cfg.resolved_episodes,
        "steps_per_episode": cfg.steps_per_episode,
        "batch_window": cfg.batch_window,
        "repetitions": cfg.repetitions,
        "seed": cfg.seed,
        "reward_mode": cfg.resolved_reward_mode,
        "n_legs": cfg.n_legs,
        "lr_theta": cfg.resolved_lr_theta,
        "lr_sigma": cfg.resolved_lr_sigma,
        "sigma_init": cfg.sigma_init,
        "pibb_temperature": cfg.pibb_temperature,
        "ppo_clip": cfg.ppo_clip,
        "ppo_epochs": cfg.ppo_epochs,
        "baseline_lr": cfg.resolved_baseline_lr,
        "keep_artifacts": cfg.keep_artifacts,
    }
    if cfg.is_action_space:
        out["sigma_action"] = cfg.resolved_sigma_action
    return out


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def format_manifest(cfg: ExperimentConfig) -> str:
    lines = ["# resolved run configuration (re-runnable manifest)"]
    for key, value in resolved_values(cfg).items():
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def write_manifest(path, cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_manifest(cfg))


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESETS: dict[str, dict] = {
    "sme-agol-online": {
        "controller": "sme",
        "learner": "agol",
        "schedule": "online",
    },
    "cpgrbf-pibb-batch": {
        "controller": "cpgrbf",
        "learner": "pibb",
        "schedule": "batch",
    },
    "physical-protocol": {
        "controller": "sme",
        "learner": "agol",
        "schedule": "continual",
    },
}

GRID_PRESET = "paper-grid"
PRESET_NAMES = (*PRESETS, GRID_PRESET)


def preset_values(name: str) -> dict:
    """Config values for a single-cell preset (the grid preset is handled
    by the compare command, which expands it to all study cells)."""
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
