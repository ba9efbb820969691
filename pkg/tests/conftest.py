# tests/conftest.py

import sys
from pathlib import Path

import numpy as np
import pytest

# Put the project root on sys.path so 'config', 'mathematical_functions' and 'utils' import
# the same way they do when main_app.py is run from the root.
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run the long desk-scale simulations")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long simulation, skipped unless --runslow is given")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

