import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from capax.events import Scope, Variable, declare  # noqa: E402

MODELS = Path(__file__).resolve().parent.parent / "models"


def flat_scope(n: int) -> Scope:
    """One unnamed variable with ``n`` values: events are plain subsets of range(n)."""
    return Scope((Variable("w", tuple(str(i) for i in range(n))),))


@st.composite
def sparse_functions(draw, max_n=6, max_entries=32, allow_empty=True):
    n = draw(st.integers(1, max_n))
    lo = 0 if allow_empty else 1
    keys = draw(st.lists(st.integers(lo, (1 << n) - 1), max_size=max_entries, unique=True))
    vals = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=len(keys), max_size=len(keys)))
    return n, dict(zip(keys, vals))


@pytest.fixture
def xy():
    return declare(("x", ["0", "1"]), ("y", ["0", "1"]))


@pytest.fixture
def models_dir():
    return MODELS


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
