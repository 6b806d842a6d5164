import numpy as np
import pytest

from sgdrf.features import FeatureMap, FeatureMapSpec


def pinned_map(kind, W, q=None, sigma=1.0):
    """Feature map with explicitly chosen parameters."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    spec = FeatureMapSpec(kind, W.shape[0], W.shape[1], sigma)
    return FeatureMap(spec, W, q)


def basis_map(M):
    """Linear sketch whose W is sqrt(M) * I, so phi(e_k) is the k-th basis
    vector exactly."""
    return pinned_map("linear-sketch", np.sqrt(M) * np.eye(M))


@pytest.fixture
def tmp_csv(tmp_path):
    def write(text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text)
        return p

    return write


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
