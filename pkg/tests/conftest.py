from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
DATA_ROOT = ROOT / "data" / "ucr"


def have_dataset(name: str) -> bool:
    return (DATA_ROOT / f"{name}_TRAIN.tsv").is_file() and (DATA_ROOT / f"{name}_TEST.tsv").is_file()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def data_root():
    return DATA_ROOT


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
