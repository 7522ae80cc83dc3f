from pathlib import Path

import numpy as np
import pytest

from qwhile.lang import load

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


@pytest.fixture
def corpus():
    return CORPUS


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def load_corpus(name):
    return load(CORPUS / name)


def ket_density(*amps):
    v = np.asarray(amps, dtype=complex)
    return np.outer(v, v.conj())


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
