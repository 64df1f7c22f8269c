import numpy as np
import pytest
import scipy.sparse as sp

from baum.model import Hyperparameters, ProblemInput
from baum.network import Network


def make_input(r, cands, k, edges=(), q=None):
    """ProblemInput from per-feature candidate lists; q uniform unless given."""
    rows, cols, vals = [], [], []
    for i, c in enumerate(cands):
        qi = q[i] if q is not None else [1.0 / len(c)] * len(c)
        rows += [i] * len(c)
        cols += list(c)
        vals += list(qi)
    qm = sp.csr_array((vals, (rows, cols)), shape=(len(cands), k))
    return ProblemInput(np.asarray(r, dtype=float), qm, Network.from_edges(k, edges))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy():
    # three metabolites on a path, four features
    inp = make_input([0.1, 9.5, 10.2, -0.3], [[0], [1, 2], [2], [0, 1]], 3, edges=[(0, 1), (1, 2)])
    return inp, Hyperparameters(k=3)


def pytest_terminal_summary(terminalreporter):
    """Collect the one-line verdicts recorded by the acceptance tests."""
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines += [v for k, v in getattr(rep, "user_properties", ()) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
