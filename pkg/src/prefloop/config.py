"""Configuration: file values, environment overrides, and explicit flags.

Precedence is total: flags > environment > config file > built-in defaults.
Environment keys are the upper-cased config keys prefixed with
``PREFLOOP_`` (e.g. ``PREFLOOP_BACKEND``, ``PREFLOOP_P_NOISE``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ConfigError
from .sampling import SamplingConfig

ENV_PREFIX = "PREFLOOP_"

DEFAULT_CANDIDATES_PER_ROUND = 4
DEFAULT_MAX_ROUNDS = 20
DEFAULT_SEED = 0


@dataclass(frozen=True)
class BackendSettings:
    """Where candidate images and feature profiles come from."""

    kind: str = "mock"  # "mock" | "http"
    p_noise: float = 0.15
    generate_url: str = ""
    extract_url: str = ""
    vlm_url: str = ""
    prompt_mode: str = "template"  # "template" | "vlm"
    timeout_ms: int = 30000
    auth_header: str = ""
    auth_token: str = ""

    def validate(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"backend kind must be 'mock' or 'http', got {self.kind!r}")
        if not 0.0 <= self.p_noise <= 1.0:
            raise ConfigError("p_noise must lie in [0, 1]")
        if self.prompt_mode not in ("template", "vlm"):
            raise ConfigError(f"prompt_mode must be 'template' or 'vlm', got {self.prompt_mode!r}")
        if self.kind == "http" and (not self.generate_url or not self.extract_url):
            raise ConfigError("http backend needs generate_url and extract_url")
        if self.prompt_mode == "vlm" and not self.vlm_url:
            raise ConfigError("vlm prompt_mode needs vlm_url")
        if self.timeout_ms <= 0:
            raise ConfigError("timeout_ms must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p_noise": self.p_noise,
            "generate_url": self.generate_url,
            "extract_url": self.extract_url,
            "vlm_url": self.vlm_url,
            "prompt_mode": self.prompt_mode,
            "timeout_ms": self.timeout_ms,
            "auth_header": self.auth_header,
            "auth_token": self.auth_token,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BackendSettings":
        settings = cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
        settings.validate()
        return settings


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session needs: prompt, counts, backends, sampling, seed."""

    initial_prompt: str
    candidates_per_round: int = DEFAULT_CANDIDATES_PER_ROUND
    max_rounds: int = DEFAULT_MAX_ROUNDS
    seed: int = DEFAULT_SEED
    backend: BackendSettings = field(default_factory=BackendSettings)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)

    def validate(self) -> None:
        if not self.initial_prompt.strip():
            raise ConfigError("initial_prompt must be non-empty")
        if self.candidates_per_round < 2:
            raise ConfigError("candidates_per_round must be >= 2")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        self.backend.validate()
        self.sampling.validate()

    def to_dict(self) -> dict:
        return {
            "initial_prompt": self.initial_prompt,
            "candidates_per_round": self.candidates_per_round,
            "max_rounds": self.max_rounds,
            "seed": self.seed,
            "backend": self.backend.to_dict(),
            "sampling": self.sampling.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SessionConfig":
        if "initial_prompt" not in d:
            raise ConfigError("config needs an initial_prompt")
        try:
            cfg = cls(
                initial_prompt=d["initial_prompt"],
                candidates_per_round=int(
                    d.get("candidates_per_round", DEFAULT_CANDIDATES_PER_ROUND)
                ),
                max_rounds=int(d.get("max_rounds", DEFAULT_MAX_ROUNDS)),
                seed=int(d.get("seed", DEFAULT_SEED)),
                backend=BackendSettings.from_dict(d.get("backend", {})),
                sampling=SamplingConfig.from_dict(d.get("sampling", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        cfg.validate()
        return cfg


# Flat config-file keys that route into BackendSettings.
_BACKEND_KEYS = {
    "backend": "kind",
    "p_noise": "p_noise",
    "generate_url": "generate_url",
    "extract_url": "extract_url",
    "vlm_url": "vlm_url",
    "prompt_mode": "prompt_mode",
    "timeout_ms": "timeout_ms",
    "auth_header": "auth_header",
    "auth_token": "auth_token",
}
_TOP_KEYS = ("initial_prompt", "candidates_per_round", "max_rounds", "seed")
_SAMPLING_KEYS = (
    "sigma_samp",
    "d_gate",
    "pool_per_category",
    "exploration_floor",
    "roulette_exponent",
)


_INT_KEYS = {"candidates_per_round", "max_rounds", "seed", "timeout_ms", "pool_per_category"}
_FLOAT_KEYS = {"p_noise", "sigma_samp", "d_gate", "exploration_floor", "roulette_exponent"}


def _env_overrides(env: Mapping[str, str]) -> dict:
    flat: dict[str, Any] = {}
    for key in (*_TOP_KEYS, *_BACKEND_KEYS, *_SAMPLING_KEYS):
        env_key = ENV_PREFIX + key.upper()
        if env_key not in env:
            continue
        raw = env[env_key]
        try:
            if key in _INT_KEYS:
                flat[key] = int(raw)
            elif key in _FLOAT_KEYS:
                flat[key] = float(raw)
            else:
                flat[key] = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {env_key}: {raw!r}") from exc
    return flat


def _merge_flat(base: dict, flat: Mapping[str, Any]) -> None:
    """Fold flat key/value pairs into the nested config dict, in place."""
    for key, value in flat.items():
        if value is None:
            continue
        if key in _BACKEND_KEYS:
            base.setdefault("backend", {})[_BACKEND_KEYS[key]] = value
        elif key in _SAMPLING_KEYS:
            base.setdefault("sampling", {})[key] = value
        else:
            base[key] = value


def load_session_config(
    path: str | None = None,
    flags: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> SessionConfig:
    """Build a SessionConfig from a file plus env and flag overrides."""
    base: dict = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                base = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")

    env_flat = _env_overrides(os.environ if env is None else env)
    _merge_flat(base, env_flat)
    if flags:
        _merge_flat(base, flags)
    return SessionConfig.from_dict(base)
