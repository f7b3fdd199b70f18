import io
import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from editbench.index import Indexes  # noqa: E402
from editbench.kg import load_dump  # noqa: E402


def mini_kg_bytes() -> bytes:
    return resources.files("editbench.data").joinpath("mini_kg.json").read_bytes()


@pytest.fixture(scope="session")
def mini_store():
    store, _ = load_dump(io.BytesIO(mini_kg_bytes()))
    return store


@pytest.fixture(scope="session")
def mini_idx(mini_store):
    return Indexes.build(mini_store)
