from __future__ import annotations

import json

import pytest

from helpers import diamond_instance, hub15_instance, path_instance, triangle


@pytest.fixture
def tri():
    return triangle()


@pytest.fixture
def diamond():
    return diamond_instance()


@pytest.fixture
def hub15():
    return hub15_instance()


@pytest.fixture
def path7():
    return path_instance(7)


@pytest.fixture
def triangle_file(tmp_path):
    path = tmp_path / "triangle.json"
    path.write_text(json.dumps(triangle().to_json_dict()))
    return str(path)


@pytest.fixture
def hub15_file(tmp_path):
    path = tmp_path / "hub15.json"
    path.write_text(json.dumps(hub15_instance().to_json_dict()))
    return str(path)
