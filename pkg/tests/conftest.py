from importlib import resources
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("episignal", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("episignal")


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return Path(str(resources.files("episignal.data.fixture")))


@pytest.fixture(scope="session")
def fixture_config(fixture_dir) -> Path:
    return fixture_dir / "config.toml"


@pytest.fixture(scope="session")
def pipeline_out(tmp_path_factory, fixture_config) -> Path:
    """One monolithic run over the whole bundled fixture, shared by the suite."""
    from episignal.cli import main

    out = tmp_path_factory.mktemp("pipeline")
    assert main(["pipeline", "--config", str(fixture_config), "--out-dir", str(out)]) == 0
    return out
