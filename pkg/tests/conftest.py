from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def supervision_text():
    return (FIXTURES / "reference_docs" / "supervision.ReadMe.LLM").read_text(encoding="utf-8")


@pytest.fixture
def digitalrf_text():
    return (FIXTURES / "reference_docs" / "digitalrf.ReadMe.LLM").read_text(encoding="utf-8")
