"""Synthetic scenarios with known truth (generative and real-network based)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.stats import rankdata

from baum.model import DomainError, Hyperparameters, ProblemInput
from baum.network import Network, generate_barabasi_albert

SCENARIOS = ("GN1", "GN2", "RN1", "RN2")

# total candidate count per feature: 1, 2, 3, 4, 5
DEFAULT_MULTIPLICITY = (0.50, 0.20, 0.12, 0.05, 0.13)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    p: int = 1000
    k: int = 1000
    network_source: str = "generate"
    network_path: str | None = None
    matches_path: str | None = None
    m_attach: int = 1
    alt_law: str = "normal"
    alt_mean: float = 10.0
    alt_var: float = 1.0
    alt_df: float = 10.0
    pi1: float = 0.15
    unmatched_frac: float = 0.0
    multiplicity: tuple[float, ...] = DEFAULT_MULTIPLICITY
    sigma_sim: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.unmatched_frac < 1.0:
            raise DomainError("unmatched fraction must lie in [0, 1)")
        if self.p < 1 or self.k < 1:
            raise DomainError("need p, k >= 1")
        if self.network_source not in ("generate", "load"):
            raise DomainError(f"unknown network source {self.network_source!r}")
        if self.alt_law not in ("normal", "chisq"):
            raise DomainError(f"unknown alternative law {self.alt_law!r}")
        if abs(sum(self.multiplicity) - 1.0) > 1e-9:
            raise DomainError("multiplicity probabilities must sum to 1")


@dataclass(frozen=True)
class ScenarioTruth:
    true_z: np.ndarray
    true_scores: np.ndarray
    true_match: np.ndarray
    notes: dict = field(default_factory=dict)


def scenario_config(name: str, rng_seed: int = 0, **overrides) -> ScenarioConfig:
    """Table-1 style settings for a named scenario."""
    base = {
        "GN1": dict(p=1000, k=1000, unmatched_frac=0.0, pi1=0.15),
        "GN2": dict(p=1000, k=1000, unmatched_frac=0.5, pi1=0.15),
        "RN1": dict(p=1153, k=1093, network_source="load", pi1=0.2),
        "RN2": dict(p=1153, k=1093, network_source="load", pi1=0.4, alt_law="chisq"),
    }
    if name not in base:
        raise DomainError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    return ScenarioConfig(name=name, rng_seed=rng_seed, **{**base[name], **overrides})


def synthetic_rn_config(name: str, rng_seed: int = 0, **overrides) -> ScenarioConfig:
    """Generated stand-in for an RN scenario: same size, laws and 13% unmatched metabolites."""
    cfg = scenario_config(name, rng_seed)
    return replace(cfg, network_source="generate", unmatched_frac=0.13, **overrides)


def default_hyperparameters(name: str, k: int | None = None) -> Hyperparameters:
    if name not in SCENARIOS:
        raise DomainError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    if k is None:
        k = 1000 if name.startswith("GN") else 1093
    common = dict(k=k, a1=2e4, b1=1e4, a2=1e4, a3=1e4, a4=1e4, b2=1.0, b4=1.0, rho0=0.1, rho1=0.1)
    if name == "RN2":
        return Hyperparameters(G=21, mu=tuple(float(x) for x in range(5, 26)), a5=1e4, b5=1.0, pi1=0.4, **common)
    pi1 = 0.2 if name == "RN1" else 0.15
    return degenerate_mean_handling(Hyperparameters(G=1, mu=(10.0,), pi1=pi1, **common))


def degenerate_mean_handling(hp: Hyperparameters, value: float = 10.0) -> Hyperparameters:
    """Pin the single alternative cluster mean at ``value``; the sampler then never updates it."""
    if hp.G != 1:
        raise DomainError(f"a degenerate cluster mean needs G = 1, got G = {hp.G}")
    return replace(hp, mu=(float(value),), degenerate_mean=True)


def degree_label_probabilities(degree, pi1: float) -> np.ndarray:
    """Alternative-label probabilities increasing in degree rank, averaging to ``pi1``."""
    rank = rankdata(degree, method="average")
    k = len(rank)
    prob = pi1 * k * rank / rank.sum()
    # clip at one and spread the excess over the rest until nothing exceeds one
    for _ in range(k):
        over = prob > 1.0
        if not over.any():
            break
        excess = float((prob[over] - 1.0).sum())
        prob[over] = 1.0
        free = prob < 1.0
        if not free.any():
            break
        prob[free] += excess * prob[free] / prob[free].sum()
    return prob


def _alt_scores(cfg: ScenarioConfig, rng, n: int) -> np.ndarray:
    if cfg.alt_law == "normal":
        return rng.normal(cfg.alt_mean, np.sqrt(cfg.alt_var), size=n)
    return rng.chisquare(cfg.alt_df, size=n)


def _synthesize_matches(cfg: ScenarioConfig, rng, k: int):
    """Random candidate lists; returns (q, true_match, eligible mask)."""
    p = cfg.p
    n_um = int(round(cfg.unmatched_frac * k))
    eligible = np.ones(k, dtype=bool)
    eligible[rng.choice(k, size=n_um, replace=False)] = False
    elig = np.flatnonzero(eligible)
    n_el = len(elig)
    # every eligible metabolite is some feature's true match when p allows it
    true_match = np.empty(p, dtype=np.int64)
    order = rng.permutation(p)
    n_cover = min(p, n_el)
    true_match[order[:n_cover]] = rng.permutation(elig)[:n_cover]
    true_match[order[n_cover:]] = elig[rng.integers(n_el, size=p - n_cover)]
    total = rng.choice(len(cfg.multiplicity), size=p, p=cfg.multiplicity) + 1
    rows, cols = [], []
    for i in range(p):
        n_extra = min(int(total[i]) - 1, n_el - 1)
        cands = {int(true_match[i])}
        while len(cands) < n_extra + 1:
            cands.add(int(elig[rng.integers(n_el)]))
        rows.extend([i] * len(cands))
        cols.extend(sorted(cands))
    if p < n_el:
        covered = np.zeros(k, dtype=bool)
        covered[cols] = True
        for j in elig[~covered[elig]]:
            i = int(rng.integers(p))
            rows.append(i)
            cols.append(int(j))
    rows, cols = np.asarray(rows), np.asarray(cols)
    counts = np.bincount(rows, minlength=p)
    q = sp.csr_array((1.0 / counts[rows], (rows, cols)), shape=(p, k))
    q.sum_duplicates()
    return q, true_match, eligible


def build_scenario(cfg: ScenarioConfig) -> tuple[ProblemInput, ScenarioTruth]:
    """Generate (or load) a network, assign truth and simulate feature statistics."""
    rng = np.random.default_rng(cfg.rng_seed)
    if cfg.network_source == "generate":
        net = generate_barabasi_albert(cfg.k, cfg.m_attach, int(rng.integers(2**63)))
        q, true_match, _ = _synthesize_matches(cfg, rng, cfg.k)
        feature_ids = tuple(f"F{i}" for i in range(cfg.p))
        metabolite_ids = tuple(f"M{j}" for j in range(cfg.k))
    else:
        from baum.io import load_inputs

        for path in (cfg.network_path, cfg.matches_path):
            if path is None or not Path(path).exists():
                raise FileNotFoundError(f"scenario {cfg.name} needs network and matches files; missing {path}")
        loaded = load_inputs(None, cfg.matches_path, cfg.network_path)
        net, q = loaded.network, loaded.match_confidence
        feature_ids, metabolite_ids = loaded.feature_ids, loaded.metabolite_ids
        true_match = np.array(
            [q.indices[q.indptr[i] + rng.choice(q.indptr[i + 1] - q.indptr[i], p=q.data[q.indptr[i] : q.indptr[i + 1]])] for i in range(q.shape[0])],
            dtype=np.int64,
        )
    k = net.k
    true_z = (rng.random(k) < degree_label_probabilities(net.degree(), cfg.pi1)).astype(np.int64)
    scores = np.zeros(k)
    alt = np.flatnonzero(true_z)
    scores[alt] = _alt_scores(cfg, rng, len(alt))
    r = scores[true_match] + cfg.sigma_sim * rng.standard_normal(len(true_match))
    inp = ProblemInput(r, q, net, feature_ids, metabolite_ids)
    return inp, ScenarioTruth(true_z, scores, true_match)
