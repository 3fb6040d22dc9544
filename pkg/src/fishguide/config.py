"""Experiment configuration: INI-style ``key = value`` files, one section per module.

Every key must belong to a known section and field; anything else is
rejected with an error naming the offending key. Values are parsed according
to the type of the field's default.
"""

from __future__ import annotations

import configparser
import dataclasses
import enum
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .env import EnvConfig
from .evaluation import SweepSpec
from .fishsim import BehaviorParams
from .policies import POLICY_NAMES
from .rl import LearnParams
from .vision import SceneStyle, VisionParams

PROFILES = ("table1", "table2", "smoke")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunParams:
    policy: str = "learned"
    seed: int = 0
    output_dir: str = "runs/latest"
    baseline_offset: int = 3
    eval_steps: int = 900
    eval_seeds: int = 10
    conditions: tuple[str, ...] = ("learned", "stay_at_edge", "none")
    hist_bins: int = 20
    fixture_frames: int = 20

    def __post_init__(self):
        for name in (self.policy, *self.conditions):
            if name not in POLICY_NAMES:
                raise ValueError(f"unknown policy {name!r}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if min(self.eval_steps, self.eval_seeds, self.hist_bins, self.fixture_frames) < 1:
            raise ValueError("eval_steps, eval_seeds, hist_bins and fixture_frames must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    behavior: BehaviorParams = field(default_factory=BehaviorParams)
    env: EnvConfig = field(default_factory=EnvConfig)
    learn: LearnParams = field(default_factory=LearnParams)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    vision: VisionParams = field(default_factory=VisionParams)
    scene: SceneStyle = field(default_factory=SceneStyle)
    run: RunParams = field(default_factory=RunParams)

    def replace(self, section: str, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})


SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(ExperimentConfig)}


def _format(value) -> str:
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(" ".join(_format(v) for v in item) for item in value)
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_scalar(text: str, like):
    text = text.strip()
    if isinstance(like, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        v = float(text) if any(c in text for c in ".eE") else int(text)
        if isinstance(v, float):
            if not v.is_integer():
                raise ValueError(f"expected an integer, got {text!r}")
            v = int(v)
        return v
    if isinstance(like, float):
        return float(text)
    if isinstance(like, enum.Enum):
        return type(like)(text)
    return text


def _parse(text: str, like):
    if isinstance(like, tuple):
        if like and isinstance(like[0], tuple):
            return tuple(
                tuple(_parse_scalar(t, like[0][0]) for t in item.split())
                for item in text.split(";") if item.strip()
            )
        elem = like[0] if like else ""
        return tuple(_parse_scalar(t, elem) for t in text.split(",") if t.strip())
    return _parse_scalar(text, like)


def from_parser(parser: configparser.ConfigParser, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        current = getattr(cfg, section)
        defaults = {f.name: getattr(current, f.name) for f in dataclasses.fields(current)}
        changes = {}
        for key, text in parser.items(section):
            if key not in defaults:
                raise ConfigError(f"unknown key {section}.{key}")
            try:
                changes[key] = _parse(text, defaults[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from None
        try:
            cfg = dataclasses.replace(cfg, **{section: dataclasses.replace(current, **changes)})
        except (ValueError, TypeError) as exc:
            keys = ", ".join(f"{section}.{k}" for k in changes)
            raise ConfigError(f"invalid [{section}] settings ({keys}): {exc}") from None
    return cfg


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case-sensitive (W)
    return parser


def loads(text: str) -> ExperimentConfig:
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return from_parser(parser)


def load(path_or_profile) -> ExperimentConfig:
    """Load a config file, or one of the bundled profiles by name."""
    name = str(path_or_profile)
    if name in PROFILES:
        return loads(resources.files("fishguide.profiles").joinpath(f"{name}.ini").read_text())
    path = Path(name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text)


def dumps(cfg: ExperimentConfig) -> str:
    parser = _new_parser()
    for section in SECTIONS:
        obj = getattr(cfg, section)
        parser[section] = {f.name: _format(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
