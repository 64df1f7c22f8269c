"""The compiled kernels and the numpy fallback must agree on identical uniforms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baum import _fallback, _kernels

core = pytest.importorskip("baum._core", reason="compiled extension not built")


def test_backend_reported():
    assert _kernels.BACKEND in ("cython", "python")


@given(st.integers(1, 50), st.integers(1, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_sample_rows_agree(n, c, seed):
    rng = np.random.default_rng(seed)
    logw = rng.normal(scale=rng.uniform(0.1, 50), size=(n, c))
    u = rng.random(n)
    a = core.sample_rows(logw, u)
    b = _fallback.sample_rows(logw, u)
    assert np.array_equal(np.asarray(a), np.asarray(b))
    assert np.all((np.asarray(a) >= 0) & (np.asarray(a) < c))


def _csr(rng, p, k):
    counts = rng.integers(1, min(k, 6) + 1, size=p)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = np.concatenate([np.sort(rng.choice(k, size=c, replace=False)) for c in counts]).astype(np.int64)
    q = rng.dirichlet(np.ones(indptr[-1]))  # only the logs matter
    return indptr, indices, np.log(q)


@given(st.integers(1, 40), st.integers(1, 12), st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_sample_lambda_agree(p, k, seed):
    rng = np.random.default_rng(seed)
    indptr, indices, logq = _csr(rng, p, k)
    r = rng.normal(5, 4, size=p)
    eta = rng.normal(5, 4, size=k)
    u = rng.random(p)
    a = np.asarray(core.sample_lambda(indptr, indices, logq, r, eta, 0.7, u))
    b = np.asarray(_fallback.sample_lambda(indptr, indices, logq, r, eta, 0.7, u))
    assert np.array_equal(a, b)
    assert np.all((a >= indptr[:-1]) & (a < indptr[1:]))


def test_sample_lambda_frequencies():
    # two candidates, q=(0.5,0.5), eta*=(0,10), sigma2=1, r=10
    indptr = np.array([0, 2], dtype=np.int64)
    indices = np.array([0, 1], dtype=np.int64)
    logq = np.log([0.5, 0.5])
    rng = np.random.default_rng(0)
    for impl in (core, _fallback):
        picks = [impl.sample_lambda(indptr, indices, logq, np.array([10.0]), np.array([0.0, 10.0]), 0.5,
                                    rng.random(1))[0] for _ in range(2000)]
        assert np.mean(np.asarray(picks) == 1) >= 0.999


@given(st.integers(1, 60), st.integers(0, 2**32 - 1), st.floats(0, 1))
@settings(max_examples=100, deadline=None)
def test_bond_labels_agree(k, seed, frac):
    rng = np.random.default_rng(seed)
    e = rng.integers(0, k, size=(2 * k, 2))
    e = e[e[:, 0] != e[:, 1]]
    eu = np.ascontiguousarray(e[:, 0], dtype=np.int64)
    ev = np.ascontiguousarray(e[:, 1], dtype=np.int64)
    bonded = (rng.random(len(e)) < frac).astype(np.uint8)
    la, na = core.bond_labels(k, eu, ev, bonded)
    lb, nb = _fallback.bond_labels(k, eu, ev, bonded)
    assert na == nb
    assert np.array_equal(np.asarray(la), np.asarray(lb))
    # canonical: labels appear in increasing order of first occurrence
    first = [int(x) for x in dict.fromkeys(np.asarray(la).tolist())]
    assert first == list(range(na))
