"""Session fixtures for the running example."""

import pytest

from helpers import annotate, corpus
from microdeduct.frontend import parse_module


@pytest.fixture(scope="session")
def example_source() -> str:
    return corpus("running_example.c")


@pytest.fixture(scope="session")
def example(example_source):
    return parse_module(example_source)


@pytest.fixture(scope="session")
def example_annotated(example_source):
    return annotate(example_source)
