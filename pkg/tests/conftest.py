import pytest

from slotscore import shac_schema


@pytest.fixture(scope="session")
def shac():
    return shac_schema()
