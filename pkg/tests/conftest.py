import pytest

from kbdiag.dpi import load_dpi


@pytest.fixture
def ex1():
    return load_dpi("examples/ex1.dpi")
