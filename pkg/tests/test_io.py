import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from baum import io as bio
from baum.model import DomainError, validate_input
from baum.simulation import build_scenario, scenario_config


def _write(path, text):
    path.write_text(text)
    return path


def test_toy_fixture(tmp_path):
    stats = _write(tmp_path / "s.tsv", "feature_id\tstatistic\nf1\t2.5\nf2\t-0.5\n")
    matches = _write(tmp_path / "m.tsv", "f1\tglucose\t0.5\nf1\tfructose\t0.5\nf2\tglucose\t1\n")
    network = _write(tmp_path / "n.tsv", "glucose\tfructose\n")
    inp = bio.load_inputs(stats, matches, network)
    assert (inp.p, inp.k) == (2, 2)
    assert inp.feature_ids == ("f1", "f2")
    assert inp.metabolite_ids == ("glucose", "fructose")
    assert inp.network.edges.tolist() == [[0, 1]]
    assert validate_input(inp) == []


def test_duplicate_edges_warn(tmp_path, caplog):
    stats = _write(tmp_path / "s.tsv", "a\t1\n")
    matches = _write(tmp_path / "m.tsv", "a\tx\t1\n")
    network = _write(tmp_path / "n.tsv", "x\ty\ny\tx\nx\ty\n")
    with caplog.at_level(logging.WARNING, logger="baum.io"):
        inp = bio.load_inputs(stats, matches, network)
    assert inp.network.n_edges == 1
    assert "dropped 2 duplicate" in caplog.text


def test_row_sum_rejected(tmp_path):
    stats = _write(tmp_path / "s.tsv", "a\t1\n")
    matches = _write(tmp_path / "m.tsv", "a\tx\t0.6\na\ty\t0.6\n")
    network = _write(tmp_path / "n.tsv", "x\ty\n")
    with pytest.raises(bio.FormatError, match="feature a"):
        bio.load_inputs(stats, matches, network)


def test_row_sum_renormalised_within_tolerance(tmp_path):
    stats = _write(tmp_path / "s.tsv", "a\t1\n")
    matches = _write(tmp_path / "m.tsv", "a\tx\t0.3333333\na\ty\t0.6666665\n")
    network = _write(tmp_path / "n.tsv", "x\ty\n")
    inp = bio.load_inputs(stats, matches, network)
    assert inp.match_confidence.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "stats,matches,network,needle",
    [
        ("a\t1\na\t2\n", "a\tx\t1\n", "x\n", "duplicate feature"),
        ("a\t1\nb\tzz\n", "a\tx\t1\n", "x\n", ":2:"),
        ("a\t1\n", "b\tx\t1\n", "x\n", "no statistic"),
        ("a\t1\n", "a\tx\t-1\n", "x\n", "non-negative"),
        ("a\t1\n", "a\tx\t1\n", "x\tx\n", "self-loop"),
    ],
)
def test_format_errors(tmp_path, stats, matches, network, needle):
    paths = [_write(tmp_path / n, t) for n, t in (("s.tsv", stats), ("m.tsv", matches), ("n.tsv", network))]
    with pytest.raises(bio.FormatError, match=needle):
        bio.load_inputs(*paths)


def test_roundtrip(tmp_path):
    inp, _ = build_scenario(scenario_config("GN2", rng_seed=4, p=150, k=120))
    paths = [tmp_path / n for n in ("s.tsv", "m.tsv", "n.tsv")]
    bio.write_inputs(inp, *paths)
    back = bio.load_inputs(*paths)
    assert back.feature_ids == inp.feature_ids
    assert back.metabolite_ids == inp.metabolite_ids
    assert np.array_equal(back.feature_stats, inp.feature_stats)
    assert (back.match_confidence != inp.match_confidence).nnz == 0
    assert np.array_equal(back.network.edges, inp.network.edges)


def test_transform_pvalue_examples():
    r = bio.transform_pvalues([0.5, 0.0227501, 1.0, 1e-300])
    assert r[0] == pytest.approx(0.0, abs=1e-15)
    assert r[1] == pytest.approx(2.0, abs=1e-5)
    assert np.isfinite(r[3]) and r[3] == pytest.approx(norm.isf(1e-15))
    for bad in ([0.0], [1.5], [np.nan]):
        with pytest.raises(DomainError):
            bio.transform_pvalues(bad)


@given(st.lists(st.floats(1e-10, 1 - 1e-10), min_size=2, max_size=30, unique=True))
@settings(max_examples=100, deadline=None)
def test_transform_pvalue_monotone_and_invertible(ps):
    r = bio.transform_pvalues(ps)
    order = np.argsort(ps)
    step = np.diff(r[order])
    separated = np.diff(np.log(np.asarray(ps)[order])) > 1e-8
    assert np.all(step <= 0) and np.all(step[separated] < 0)
    assert np.allclose(norm.sf(r), ps, rtol=0, atol=1e-9)


def test_rank_normal_examples(caplog):
    r = bio.transform_rank_normal([10, 20])
    assert r == pytest.approx([-0.6744898, 0.6744898], abs=1e-7)
    assert bio.transform_rank_normal([1, 2, 2, 3]).tolist()[1:3] == [0.0, 0.0]
    with caplog.at_level(logging.WARNING):
        assert bio.transform_rank_normal([4, 4, 4]).tolist() == [0, 0, 0]
    assert "all statistics are equal" in caplog.text
    with pytest.raises(DomainError):
        bio.transform_rank_normal([1.0])


@given(st.lists(st.integers(-10_000, 10_000), min_size=2, max_size=40, unique=True))
@settings(max_examples=100, deadline=None)
def test_rank_normal_invariances(x):
    x = np.asarray(x, dtype=float)
    r = bio.transform_rank_normal(x)
    assert np.array_equal(r, bio.transform_rank_normal(np.cbrt(x) * 7 + 3))
    assert abs(r.sum()) < 1e-9


def test_config_and_overrides(tmp_path):
    cfg = _write(tmp_path / "c.cfg", "# sensitivity run\npi1 = 0.3\nG = 2\nmu = 5, 15  # two means\ndegenerate_mean = no\n")
    out = bio.read_config(cfg)
    assert out == {"pi1": 0.3, "G": 2, "mu": (5.0, 15.0), "degenerate_mean": False}
    with pytest.raises(DomainError):
        bio.parse_overrides(["nonsense=1"])
    with pytest.raises(DomainError):
        bio.parse_overrides(["pi1"])
    with pytest.raises(DomainError):
        bio.parse_overrides(["G=two"])


def test_table_format(tmp_path):
    bio.write_table(tmp_path / "t.tsv", ["a", "b", "c"], [(1, 0.123456789, True), ("x", float("nan"), 2.5e-9)])
    rows = bio.read_table(tmp_path / "t.tsv")
    assert rows == [{"a": "1", "b": "0.123457", "c": "1"}, {"a": "x", "b": "NA", "c": "2.5e-09"}]
