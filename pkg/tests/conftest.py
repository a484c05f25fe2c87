import pytest

from xdlvm.chemputer import load_platform
from xdlvm.parser import parse_document
from xdlvm.turing.fixtures import BINARY_ADDER, BUSY_BEAVER_3, data_path, fixture_machine


@pytest.fixture(scope="session")
def busy_beaver():
    return fixture_machine(BUSY_BEAVER_3)


@pytest.fixture(scope="session")
def adder():
    return fixture_machine(BINARY_ADDER)


@pytest.fixture
def quench_doc():
    return parse_document(data_path("quench.xdl").read_text(encoding="utf-8"))


@pytest.fixture
def quench_platform():
    return load_platform(data_path("quench_platform.json"))
