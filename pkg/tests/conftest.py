import os
from pathlib import Path

import pytest

from loanfinder.wordlist import WordForm, Wordlist, load_wordlist

from synthetic import generate

HEADER = "ID\tLANGUAGE\tCONCEPT\tFORM\tTOKENS\tBORROWED\n"

# criterion lines collected by test_acceptance, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def write_tsv(path: Path, rows) -> Path:
    lines = [HEADER] + ["\t".join(map(str, r)) + "\n" for r in rows]
    path.write_text("".join(lines), encoding="utf-8")
    return path


def wordform(id, language, concept, tokens, borrowed=False):
    return WordForm(id, language, concept, tokens.replace(" ", ""), tuple(tokens.split()), borrowed)


@pytest.fixture
def tsv(tmp_path):
    def make(rows, name="wl.tsv"):
        return write_tsv(tmp_path / name, rows)
    return make


@pytest.fixture(scope="session")
def synthetic_wl() -> Wordlist:
    return generate(seed=7, n_concepts=150)


@pytest.fixture(scope="session")
def dataset():
    path = os.environ.get("LOANFINDER_DATASET")
    if not path or not Path(path).exists():
        return None
    return load_wordlist(path, os.environ.get("LOANFINDER_DONOR", "Spanish"))
