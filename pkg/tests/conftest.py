from pathlib import Path

import numpy as np
import pytest

from gvcsr.cli import default_dictionary_path
from gvcsr.codec import read_pgm
from gvcsr.dictlearn import Dictionary

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
TEST_IMAGES = ("camera", "moon", "coins", "text", "clock")


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def images():
    return {name: read_pgm(DATA / f"{name}.pgm") for name in TEST_IMAGES}


@pytest.fixture(scope="session")
def set_images():
    return [read_pgm(DATA / f"set{i}.pgm") for i in range(4)]


@pytest.fixture(scope="session")
def global_dict():
    return Dictionary.load(default_dictionary_path())


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_dictionary(rng, n, m):
    d = rng.standard_normal((n, m))
    return d / np.linalg.norm(d, axis=0)


# acceptance reporting: one line per criterion in the terminal summary
_CRITERIA = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
