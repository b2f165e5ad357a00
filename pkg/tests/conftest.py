import sys
from pathlib import Path

import hypothesis
import pytest

sys.path.insert(0, str(Path(__file__).parent))

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.load_profile("default")

from vkn.cli import data_path  # noqa: E402
from vkn.engine import comfort_description, make_bytecode  # noqa: E402
from vkn.ldm import KnowledgeBase  # noqa: E402


@pytest.fixture
def comfort_text():
    return data_path("env_comfort.vkmd").read_text()


@pytest.fixture
def comfort_desc():
    return comfort_description()


@pytest.fixture
def comfort_kb(comfort_desc):
    kb = KnowledgeBase()
    kb.register_description(comfort_desc)
    kb.install_bytecode(make_bytecode("model.env_comfort"))
    return kb
