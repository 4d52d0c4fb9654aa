import numpy as np
import pytest

from ordering_ica.signal import preprocess
from ordering_ica.sourcegen import SourceSpec, gen_dataset

_REPORT = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one status line per acceptance criterion."""
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_mixture():
    """Whitened 5-channel mixture: 3 non-Gaussian sources and 2 Gaussian ones."""
    ds = gen_dataset(SourceSpec([0.7, 1.0, 6.0], 2, 5000, seed=11))
    Xw, model = preprocess(ds.observed)
    return ds, Xw, model


@pytest.fixture(scope="session")
def laplace_gauss():
    ds = gen_dataset(SourceSpec([1.0], 1, 10000, seed=5))
    Xw, model = preprocess(ds.observed)
    return ds, Xw, model
