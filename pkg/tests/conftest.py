import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from sighedge.tensor_algebra import TensorSeries, words_upto

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def series_strategy(dim: int, max_len: int, max_terms: int = 6):
    words = words_upto(dim, max_len)
    coef = st.floats(-3, 3, allow_nan=False, allow_infinity=False).filter(lambda x: abs(x) > 1e-3)
    return st.dictionaries(st.sampled_from(words), coef, max_size=max_terms).map(
        lambda d: TensorSeries(dim, max_len, d)
    )


def random_path(rng: np.random.Generator, dim: int, n_points: int, scale: float = 0.5) -> np.ndarray:
    return np.cumsum(np.r_[np.zeros((1, dim)), scale * rng.standard_normal((n_points - 1, dim))], axis=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
