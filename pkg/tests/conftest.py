import numpy as np
import pytest

from ftes.bounds import ShapeParams
from ftes.dither import DitherParams, FrequencySet, default_frequencies
from ftes.flows import FtgesParams


def make_params(n=1, k=1.0, a=0.1, eps1=0.01, eps2=0.1, eps0=1.0, freqs=None, classic=False, **kw):
    shape = ShapeParams.classic(k) if classic else ShapeParams.from_q(3.0, 1.5, k)
    freqs = default_frequencies(n) if freqs is None else FrequencySet(freqs)
    return FtgesParams(shape, DitherParams(a, eps1), freqs, eps2, eps0=eps0, **kw)


@pytest.fixture
def params_factory():
    return make_params


@pytest.fixture
def rng():
    return np.random.default_rng(20211)


_CRITERIA: dict[int, str] = {}


def record_criterion(number: int, line: str) -> None:
    _CRITERIA[number] = line


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
