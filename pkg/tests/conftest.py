import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from boundsynth.benchmarks import REPAIR_DIR, SUITE_DIR  # noqa: E402
from boundsynth.formula import parse_spec  # noqa: E402
from boundsynth.sampling import SampleTable  # noqa: E402


@pytest.fixture
def xor_spec():
    return parse_spec("inputs x\noutputs y1 y2\nspec (xor x y1 y2)")


@pytest.fixture
def or_spec():
    return parse_spec("inputs x0\noutputs y0\nspec (or x0 y0)")


@pytest.fixture
def suite_dir():
    return SUITE_DIR


@pytest.fixture
def repair_dir():
    return REPAIR_DIR


def make_table(xs, ys, n_inputs=None, outputs=("y",)):
    """Table from x tuples and y values (scalars for one output, tuples otherwise)."""
    n_inputs = n_inputs if n_inputs is not None else len(xs[0])
    rows = []
    for x, y in zip(xs, ys):
        y = (y,) if isinstance(y, int) else tuple(y)
        rows.append((tuple(x), y))
    return SampleTable([f"x{i}" for i in range(n_inputs)], list(outputs), rows)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
