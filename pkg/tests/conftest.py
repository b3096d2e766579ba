import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cpdcert.linalg import Matrix  # noqa: E402

DATA = Path(__file__).parent / "data"

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def _report(number: int, title: str, failures: list[str], elapsed: float, limit: float | None = None):
        timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
        if limit is not None and elapsed >= limit:
            failures = failures + [f"runtime {elapsed:.2f}s exceeds {limit:g}s"]
        status = "PASS" if not failures else "FAIL"
        line = f"[{status}] criterion {number}: {title} [{timing}]"
        if failures:
            line += " -- " + "; ".join(failures)
        ACCEPTANCE_LINES.append(line)
        print(line)
        return failures

    return _report


W5_A = [[1, 1, 0, 0, 0, 0, 0], [1, 0, 1, 0, 0, 0, 0], [1, 0, 0, 1, 0, 0, 0],
        [1, 0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 0, 1]]
W5_B = [[0, 1, 0, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0, 0], [1, 0, 0, 1, 0, 0, 0],
        [1, 0, 0, 0, 1, 0, 0], [1, 0, 0, 0, 0, 1, 0], [1, 0, 0, 0, 0, 0, 1]]
W5_C = [[1, 0, 0, 1, 0, 0, 0], [0, 1, 0, 0, 1, 0, 0], [0, 0, 1, 0, 0, 1, 0], [1, 0, 0, 0, 0, 0, 1]]

W2_A = [[1, 0, 0, 1], [0, 1, 0, 1]]
W2_B = [[1, 0, 1, 1], [0, 1, 1, 2]]
W2_C = [[0, 0, 1, 0], [1, 1, 0, 1]]


@pytest.fixture
def w5_example():
    return Matrix.exact(W5_A), Matrix.exact(W5_B), Matrix.exact(W5_C)


@pytest.fixture
def w2_example():
    return Matrix.exact(W2_A), Matrix.exact(W2_B), Matrix.exact(W2_C)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_int(rng, rows, cols, lo=-5, hi=5):
    return rng.integers(lo, hi + 1, size=(rows, cols)).tolist()


def low_k_rank(rng, rows, cols, lo=-3, hi=3):
    """Random integer matrix with engineered column dependencies."""
    M = rng.integers(lo, hi + 1, size=(rows, cols))
    kind = rng.integers(0, 4)
    if cols >= 2 and kind == 1:
        i, j = rng.choice(cols, size=2, replace=False)
        M[:, j] = rng.integers(1, 3) * M[:, i]
    elif cols >= 3 and kind == 2:
        i, j, k = rng.choice(cols, size=3, replace=False)
        M[:, k] = M[:, i] + M[:, j]
    elif kind == 3:
        M[:, rng.integers(0, cols)] = 0
    return M.tolist()
