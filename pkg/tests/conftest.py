import pathlib

import pytest

from gurag_reach.dsl import parse

DATA = pathlib.Path(__file__).parent / "data"
GOLDEN = DATA / "golden"
MALFORMED = DATA / "malformed"


def load_golden(name):
    """Parse a golden fixture; fails loudly if it stopped being well formed."""
    text = (GOLDEN / name).read_text()
    result = parse(text)
    assert result.ok, [d.render() for d in result.diagnostics]
    return result


@pytest.fixture
def golden():
    return load_golden
