import json

from plugdeck.config import load_config


def test_defaults_without_file():
    config = load_config(None, env={})
    assert config.platform.port == 8450
    assert config.discovery.codeword == "PLUGDECK_DISCOVERY_V1"
    assert config.registry.upload_limit_bytes == 32 * 1024 * 1024


def test_file_values_override_defaults(tmp_path):
    path = tmp_path / "plugdeck.json"
    path.write_text(
        json.dumps(
            {
                "platform": {"port": 9000, "passkey": "hunter2", "open_registration": False},
                "discovery": {"codeword": "SHIBBOLETH", "timeout_ms": 250},
                "registry": {"upload_token": "tok"},
            }
        )
    )
    config = load_config(str(path), env={})
    assert config.platform.port == 9000
    assert config.platform.passkey == "hunter2"
    assert config.platform.open_registration is False
    assert config.discovery.codeword == "SHIBBOLETH"
    assert config.discovery.timeout_ms == 250
    assert config.registry.upload_token == "tok"
    # untouched keys keep their defaults
    assert config.platform.name == "plugdeck platform"


def test_env_overrides_file(tmp_path):
    path = tmp_path / "plugdeck.json"
    path.write_text(json.dumps({"platform": {"port": 9000}}))
    env = {
        "PLUGDECK_PLATFORM_PORT": "9001",
        "PLUGDECK_PLATFORM_OPEN_REGISTRATION": "false",
        "PLUGDECK_DISCOVERY_ENABLED": "0",
        "PLUGDECK_REGISTRY_UPLOAD_TOKEN": "from-env",
    }
    config = load_config(str(path), env=env)
    assert config.platform.port == 9001
    assert config.platform.open_registration is False
    assert config.discovery.enabled is False
    assert config.registry.upload_token == "from-env"
