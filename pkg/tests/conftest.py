from pathlib import Path

import pytest

import iwkb

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


@pytest.fixture(scope="session")
def ref_model():
    return iwkb.kerr_dirac_model()


@pytest.fixture(scope="session")
def ref_constants(ref_model):
    """Constants for the bundled fixture (anchors from the model itself)."""
    return iwkb.solve_boundary_constants(ref_model, 0.299, 0.701)


@pytest.fixture(scope="session")
def config_dir():
    return CONFIG_DIR
