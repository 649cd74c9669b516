import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent

sys.path.insert(0, str(TESTS_DIR))  # make `oracles` importable


@pytest.fixture(scope="session")
def zebra_path() -> Path:
    return REPO_ROOT / "data" / "zebra.txt"
