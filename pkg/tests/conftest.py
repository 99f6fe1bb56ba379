import pytest

from curves import CurveRecord
from newform import rational_newforms
from space_cache import get_space


@pytest.fixture(scope="session")
def space11():
    return get_space(11)


@pytest.fixture(scope="session")
def space37():
    return get_space(37)


@pytest.fixture(scope="session")
def forms11(space11):
    return rational_newforms(space11)


@pytest.fixture(scope="session")
def forms37(space37):
    return rational_newforms(space37)


@pytest.fixture(scope="session")
def curve11a1():
    return CurveRecord.model_validate({"label": "11a1", "N": 11, "ainvs": [0, -1, 1, -10, -20], "rank": 0, "torsion": 5})


@pytest.fixture(scope="session")
def curve37a1():
    return CurveRecord.model_validate({"label": "37a1", "N": 37, "ainvs": [0, 0, 1, -1, 0], "rank": 1, "torsion": 1})


@pytest.fixture(scope="session")
def curve37b1():
    return CurveRecord.model_validate({"label": "37b1", "N": 37, "ainvs": [0, 1, 1, -23, -50], "rank": 0, "torsion": 3})


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    path = tmp_path / "cache"
    monkeypatch.setenv("MODVIS_CACHE_DIR", str(path))
    return path
