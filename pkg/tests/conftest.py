"""
Test configuration and fixtures for wxedge tests.
"""

from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).parent.parent / "configs"


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep a developer's WXEDGE_* environment out of the tests."""
    monkeypatch.delenv("WXEDGE_MASTER_SEED", raising=False)
    monkeypatch.delenv("WXEDGE_LOG_LEVEL", raising=False)


@pytest.fixture
def default_config():
    """Harness config with every section at its defaults."""
    from wxedge.config import HarnessConfig

    return HarnessConfig()


@pytest.fixture
def short_config():
    """Short episodes and a tiny training budget for fast harness runs."""
    from wxedge.config import HarnessConfig

    return HarnessConfig.model_validate(
        {
            "ppo": {
                "episode_len": 64,
                "episodes_per_update": 2,
                "total_steps": 256,
                "epochs_per_update": 2,
                "minibatch_size": 32,
                "hidden_sizes": [16, 16],
            },
            "eval": {"subset_size": 4, "subset_seed": 7},
        }
    )


@pytest.fixture
def small_catalog():
    """Twenty generated scenes."""
    from wxedge.catalog import generate
    from wxedge.models.scene import GeneratorConfig

    return generate(GeneratorConfig(count=20), seed=42)


@pytest.fixture
def catalog_file(tmp_path, small_catalog):
    """The small catalog saved to disk."""
    from wxedge.catalog import save

    path = tmp_path / "catalog.json"
    save(small_catalog, path)
    return path


@pytest.fixture
def config_file(tmp_path, short_config):
    """The short config saved to disk."""
    path = tmp_path / "config.json"
    path.write_text(short_config.model_dump_json(indent=2))
    return path


@pytest.fixture
def straight_scene():
    """Lead cruising ahead with no events."""
    from wxedge.models.scene import Scene

    return Scene(
        scene_id="straight",
        initial_gap=30.0,
        ego_speed0=12.0,
        lead_speed0=10.0,
        noise_seed=1234,
    )


def make_scene(**overrides):
    """Build a Scene with sensible defaults."""
    from wxedge.models.scene import Scene

    fields = {
        "scene_id": "scene-test",
        "initial_gap": 30.0,
        "ego_speed0": 12.0,
        "lead_speed0": 10.0,
        "noise_seed": 99,
    }
    fields.update(overrides)
    return Scene(**fields)


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "slow: mark test as a long training or evaluation run"
    )
    config.addinivalue_line(
        "markers", "integration: mark test as an end-to-end run through the CLI"
    )
