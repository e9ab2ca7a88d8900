import pathlib

import pytest

from tmc_forge.surface import parse_program

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
FIXTURES = pathlib.Path(__file__).resolve().parent / "fixtures"
GOLDENS = pathlib.Path(__file__).resolve().parent / "goldens"


def load(name: str):
    """Parse a corpus program by file name."""
    return parse_program((CORPUS / name).read_text())


@pytest.fixture
def corpus_dir():
    return CORPUS
