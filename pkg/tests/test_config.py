"""Config loading: file values, environment overrides, flag precedence."""

import json

import pytest

from prefloop.config import BackendSettings, SessionConfig, load_session_config
from prefloop.errors import ConfigError


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "initial_prompt": "from file",
        "candidates_per_round": 5,
        "seed": 1,
        "backend": {"kind": "mock", "p_noise": 0.2},
        "sampling": {"sigma_samp": 0.05},
    }))
    return str(path)


class TestPrecedence:
    def test_file_values_apply(self, config_file):
        cfg = load_session_config(config_file, env={})
        assert cfg.initial_prompt == "from file"
        assert cfg.candidates_per_round == 5
        assert cfg.backend.p_noise == 0.2
        assert cfg.sampling.sigma_samp == 0.05

    def test_env_overrides_file(self, config_file):
        env = {"PREFLOOP_CANDIDATES_PER_ROUND": "3", "PREFLOOP_P_NOISE": "0.4"}
        cfg = load_session_config(config_file, env=env)
        assert cfg.candidates_per_round == 3
        assert cfg.backend.p_noise == 0.4

    def test_flags_override_env_and_file(self, config_file):
        env = {"PREFLOOP_CANDIDATES_PER_ROUND": "3"}
        cfg = load_session_config(
            config_file, flags={"candidates_per_round": 8, "seed": 9}, env=env
        )
        assert cfg.candidates_per_round == 8
        assert cfg.seed == 9

    def test_defaults_without_file(self):
        cfg = load_session_config(flags={"initial_prompt": "hi"}, env={})
        assert cfg.candidates_per_round == 4
        assert cfg.max_rounds == 20
        assert cfg.backend.kind == "mock"

    def test_bad_env_value(self, config_file):
        with pytest.raises(ConfigError):
            load_session_config(config_file, env={"PREFLOOP_SEED": "soon"})

    def test_missing_prompt(self):
        with pytest.raises(ConfigError):
            load_session_config(env={})


class TestValidation:
    def test_http_backend_needs_urls(self):
        with pytest.raises(ConfigError):
            BackendSettings(kind="http").validate()
        BackendSettings(
            kind="http", generate_url="http://g", extract_url="http://e"
        ).validate()

    def test_unknown_backend_kind(self):
        with pytest.raises(ConfigError):
            BackendSettings(kind="grpc").validate()

    def test_vlm_mode_needs_url(self):
        with pytest.raises(ConfigError):
            BackendSettings(prompt_mode="vlm").validate()

    def test_round_trip(self):
        cfg = SessionConfig(initial_prompt="x", seed=3)
        assert SessionConfig.from_dict(cfg.to_dict()) == cfg
