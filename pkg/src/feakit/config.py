"""Run configuration shared by every CLI subcommand.

The config file is plain ``key = value`` lines (dotted keys for nesting,
``#`` comments); a JSON object with the same nesting is accepted as an
alternative. Flags override config values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .client import ClientConfig, GenerationParams
from .rewards import RewardConfig
from .synthesis import RetryPolicy
from .vocab import AuVocabulary, EmotionVocabulary


class ConfigError(Exception):
    pass


def _as_bool(key: str, value: str) -> bool:
    lowered = str(value).strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"invalid boolean for {key}: {value!r}")


def _as_int(key: str, value) -> int:
    try:
        return int(str(value).strip())
    except ValueError as exc:
        raise ConfigError(f"invalid integer for {key}: {value!r}") from exc


def _as_float(key: str, value) -> float:
    try:
        return float(str(value).strip())
    except ValueError as exc:
        raise ConfigError(f"invalid number for {key}: {value!r}") from exc


@dataclass
class RunConfig:
    root: str | None = None
    emotions: str = "7class"
    group_size: int = 8
    seed: int = 0
    model: str = "local-vlm"
    max_tokens: int = 1024
    filter_mode: str = "strict"
    reward: RewardConfig = field(default_factory=RewardConfig)
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    client: ClientConfig = field(default_factory=lambda: ClientConfig(endpoint_url=""))

    def emotion_vocab(self) -> EmotionVocabulary:
        if self.emotions == "7class":
            return EmotionVocabulary.seven_class()
        if self.emotions == "8class":
            return EmotionVocabulary.eight_class()
        return EmotionVocabulary(tuple(l.strip() for l in self.emotions.split(",") if l.strip()))

    def au_vocab(self) -> AuVocabulary:
        return AuVocabulary.default()

    def generation_params(self, temperature: float | None = None) -> GenerationParams:
        return GenerationParams(
            model=self.model,
            temperature=self.retry.base_temperature if temperature is None else temperature,
            max_tokens=self.max_tokens,
        )

    def require_endpoint(self) -> ClientConfig:
        if not self.client.endpoint_url:
            raise ConfigError("missing config key: client.endpoint_url")
        return self.client


def _flatten(obj: dict, prefix: str = "") -> dict[str, object]:
    flat: dict[str, object] = {}
    for key, value in obj.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict) and key in ("reward", "retry", "client"):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _parse_kv_lines(text: str, path: str) -> dict[str, object]:
    mapping: dict[str, object] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


def load_config(path: str | Path | None) -> RunConfig:
    """Read the config file (key=value or JSON); no file means all defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            mapping = _flatten(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON config: {exc}") from exc
    else:
        mapping = _parse_kv_lines(text, str(path))
    return build_config(mapping)


def build_config(mapping: dict[str, object]) -> RunConfig:
    config = RunConfig()
    reward = config.reward
    retry = config.retry
    client = config.client
    for key, value in mapping.items():
        if key == "root":
            config.root = str(value)
        elif key == "emotions":
            config.emotions = str(value)
        elif key == "group_size":
            config.group_size = _as_int(key, value)
        elif key == "seed":
            config.seed = _as_int(key, value)
        elif key == "model":
            config.model = str(value)
        elif key == "max_tokens":
            config.max_tokens = _as_int(key, value)
        elif key == "filter_mode":
            config.filter_mode = str(value)
        elif key == "reward.enable_au":
            reward = replace(reward, enable_au=_as_bool(key, value))
        elif key == "reward.enable_acc":
            reward = replace(reward, enable_acc=_as_bool(key, value))
        elif key == "reward.enable_format":
            reward = replace(reward, enable_format=_as_bool(key, value))
        elif key == "retry.max_attempts":
            retry = replace(retry, max_attempts=_as_int(key, value))
        elif key == "retry.base_temperature":
            retry = replace(retry, base_temperature=_as_float(key, value))
        elif key == "retry.temperature_step":
            retry = replace(retry, temperature_step=_as_float(key, value))
        elif key == "retry.temperature_cap":
            retry = replace(retry, temperature_cap=_as_float(key, value))
        elif key == "client.endpoint_url":
            client = replace(client, endpoint_url=str(value))
        elif key == "client.auth_token_env":
            client = replace(client, auth_token_env=str(value))
        elif key == "client.timeout_seconds":
            client = replace(client, timeout_seconds=_as_float(key, value))
        elif key == "client.max_transport_retries":
            client = replace(client, max_transport_retries=_as_int(key, value))
        elif key == "client.backoff_base_seconds":
            client = replace(client, backoff_base_seconds=_as_float(key, value))
        else:
            raise ConfigError(f"unknown config key: {key}")
    if config.group_size < 1:
        raise ConfigError("group_size must be >= 1")
    if config.filter_mode not in ("strict", "superset"):
        raise ConfigError(f"filter_mode must be strict or superset, got {config.filter_mode!r}")
    config.reward = reward
    config.retry = retry
    config.client = client
    return config
