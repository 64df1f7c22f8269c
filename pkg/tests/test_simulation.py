import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baum import io as bio
from baum.model import DomainError, validate_input
from baum.simulation import (
    build_scenario,
    default_hyperparameters,
    degenerate_mean_handling,
    degree_label_probabilities,
    scenario_config,
    synthetic_rn_config,
)


def test_default_hyperparameters_published_constants():
    for name in ("GN1", "GN2", "RN1", "RN2"):
        hp = default_hyperparameters(name)
        assert (hp.a1, hp.a2, hp.a3, hp.a4, hp.b1) == (2e4, 1e4, 1e4, 1e4, 1e4)
        assert (hp.b2, hp.b4) == (1.0, 1.0)
        assert hp.rho0 == hp.rho1 == 0.1
        assert set(hp.w) == {1.0}
    assert default_hyperparameters("GN1").pi1 == 0.15
    assert default_hyperparameters("GN2").pi1 == 0.15
    assert default_hyperparameters("RN1").pi1 == 0.2
    rn2 = default_hyperparameters("RN2")
    assert rn2.G == 21 and rn2.mu == tuple(float(x) for x in range(5, 26))
    assert (rn2.a5, rn2.b5, rn2.pi1) == (1e4, 1.0, 0.4)
    assert not rn2.degenerate_mean
    gn1 = default_hyperparameters("GN1")
    assert gn1.G == 1 and gn1.degenerate_mean and gn1.mu == (10.0,)
    with pytest.raises(DomainError):
        default_hyperparameters("GN3")


def test_degenerate_requires_single_cluster():
    with pytest.raises(DomainError):
        degenerate_mean_handling(default_hyperparameters("RN2"))


def test_gn1_every_metabolite_matched():
    inp, truth = build_scenario(scenario_config("GN1", rng_seed=3))
    assert inp.matched_metabolites().all()
    assert validate_input(inp) == []


def test_gn2_half_unmatched():
    inp, truth = build_scenario(scenario_config("GN2", rng_seed=3))
    assert (~inp.matched_metabolites()).sum() == 500
    assert validate_input(inp) == []


def test_noise_free_single_candidates():
    cfg = scenario_config("GN1", rng_seed=1, p=200, k=200, sigma_sim=0.0, multiplicity=(1.0, 0, 0, 0, 0))
    inp, truth = build_scenario(cfg)
    assert np.array_equal(inp.feature_stats, truth.true_scores[truth.true_match])


def test_alternative_fraction_calibrated():
    fracs = [build_scenario(scenario_config("GN1", rng_seed=s))[1].true_z.mean() for s in range(30)]
    assert abs(np.mean(fracs) - 0.15) < 0.02


def test_alternative_labels_favour_hubs():
    inp, truth = build_scenario(scenario_config("GN1", rng_seed=8))
    deg = inp.network.degree()
    assert deg[truth.true_z == 1].mean() > deg[truth.true_z == 0].mean()


@given(st.floats(0.01, 0.6), st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_degree_label_probabilities(pi1, seed):
    deg = np.random.default_rng(seed).integers(1, 50, size=60)
    prob = degree_label_probabilities(deg, pi1)
    assert np.all((prob >= 0) & (prob <= 1 + 1e-12))
    assert prob.mean() == pytest.approx(pi1, abs=1e-9)
    order = np.argsort(deg, kind="stable")
    assert np.all(np.diff(prob[order]) >= -1e-12)


@given(st.sampled_from(["GN1", "GN2"]), st.integers(0, 10_000), st.integers(5, 80), st.integers(5, 80))
@settings(max_examples=40, deadline=None)
def test_generated_inputs_valid(name, seed, p, k):
    inp, truth = build_scenario(scenario_config(name, rng_seed=seed, p=p, k=k))
    assert validate_input(inp) == []
    q = inp.match_confidence
    for i in range(inp.p):
        assert truth.true_match[i] in q.indices[q.indptr[i]:q.indptr[i + 1]]
    counts = np.diff(q.indptr)
    assert counts.min() >= 1 and counts.max() <= 5 + (k if p < k else 0)


def test_regeneration_bitwise():
    a, ta = build_scenario(scenario_config("GN2", rng_seed=12, p=300, k=300))
    b, tb = build_scenario(scenario_config("GN2", rng_seed=12, p=300, k=300))
    assert np.array_equal(a.feature_stats, b.feature_stats)
    assert np.array_equal(a.match_confidence.data, b.match_confidence.data)
    assert np.array_equal(a.network.edges, b.network.edges)
    assert np.array_equal(ta.true_z, tb.true_z)


def test_rn_load_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError, match="missing"):
        build_scenario(scenario_config("RN1", network_path=str(tmp_path / "none.tsv")))


def test_rn_load_roundtrip(tmp_path):
    stand_in, _ = build_scenario(synthetic_rn_config("RN2", rng_seed=5, p=150, k=140))
    paths = [tmp_path / n for n in ("stats.tsv", "matches.tsv", "network.tsv")]
    bio.write_inputs(stand_in, *paths)
    cfg = scenario_config("RN2", rng_seed=5, network_path=str(paths[2]), matches_path=str(paths[1]))
    inp, truth = build_scenario(cfg)
    assert (inp.p, inp.k) == (150, 140)
    assert np.array_equal(inp.network.edges, stand_in.network.edges)
    assert validate_input(inp) == []
    # chi-square alternative scores are positive
    assert np.all(truth.true_scores[truth.true_z == 1] > 0)


def test_synthetic_rn_unmatched_share():
    inp, _ = build_scenario(synthetic_rn_config("RN1", rng_seed=2))
    assert (inp.p, inp.k) == (1153, 1093)
    assert (~inp.matched_metabolites()).mean() == pytest.approx(0.13, abs=0.001)
