import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def artifact_dir(tmp_path):
    """Copy named fixture files into a fresh directory and return it."""

    def stage(*names: str) -> Path:
        for name in names:
            shutil.copy(FIXTURES / name, tmp_path / name)
        return tmp_path

    return stage
