"""Domain types, priors and pointwise densities of the BAUM model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
import scipy.sparse as sp

from baum.network import Network, neighborhood_weights

LOG_2PI = math.log(2.0 * math.pi)


class DomainError(ValueError):
    """Invalid argument to a model-level operation."""


@dataclass(frozen=True, eq=False)
class ProblemInput:
    """Feature statistics, candidate matches and the metabolite network.

    ``match_confidence`` is a ``p x k`` CSR matrix whose stored entries are the
    candidate metabolites of each feature. ``network`` is normally a
    :class:`~baum.network.Network`; a raw adjacency matrix is accepted so that
    :func:`validate_input` can report on unchecked data.
    """

    feature_stats: np.ndarray
    match_confidence: sp.csr_array
    network: Network
    feature_ids: tuple[str, ...] = ()
    metabolite_ids: tuple[str, ...] = ()

    def __post_init__(self):
        r = np.asarray(self.feature_stats, dtype=float)
        q = sp.csr_array(self.match_confidence, dtype=float)
        q.sort_indices()
        object.__setattr__(self, "feature_stats", r)
        object.__setattr__(self, "match_confidence", q)
        if not self.feature_ids:
            object.__setattr__(self, "feature_ids", tuple(f"F{i}" for i in range(len(r))))
        if not self.metabolite_ids:
            object.__setattr__(self, "metabolite_ids", tuple(f"M{j}" for j in range(q.shape[1])))
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        object.__setattr__(self, "metabolite_ids", tuple(self.metabolite_ids))

    @property
    def p(self) -> int:
        return len(self.feature_stats)

    @property
    def k(self) -> int:
        return self.match_confidence.shape[1]

    def candidate_counts(self) -> np.ndarray:
        """Number of features listing each metabolite as a candidate."""
        q = self.match_confidence
        return np.bincount(q.indices[q.data > 0], minlength=self.k)

    def matched_metabolites(self) -> np.ndarray:
        return self.candidate_counts() > 0


@dataclass(frozen=True)
class Hyperparameters:
    """Fixed constants of the model and the chain length."""

    k: int
    a1: float = 2e4
    b1: float = 1e4
    a2: float = 1e4
    b2: float = 1.0
    a3: float = 1e4
    a4: float = 1e4
    b4: float = 1.0
    a5: float = 1e4
    b5: float = 1.0
    G: int = 1
    mu: tuple[float, ...] = (10.0,)
    degenerate_mean: bool = False
    pi1: float = 0.15
    rho0: float = 0.1
    rho1: float = 0.1
    w: tuple[float, ...] | None = None
    tau: float = 1.0
    alpha_fdr: float = 0.2
    n_burnin: int = 1000
    n_iter: int = 4000

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(x) for x in np.atleast_1d(self.mu)))
        w = np.ones(self.k) if self.w is None else np.atleast_1d(self.w)
        object.__setattr__(self, "w", tuple(float(x) for x in w))
        problems = self.violations()
        if problems:
            raise DomainError("; ".join(problems))

    @property
    def pi0(self) -> float:
        return 1.0 - self.pi1

    def violations(self) -> list[str]:
        out = []
        if not 0.0 < self.pi1 < 1.0:
            out.append(f"pi1 must lie in (0, 1), got {self.pi1}")
        if self.rho0 < 0 or self.rho1 < 0:
            out.append("rho0, rho1 must be non-negative")
        for name in ("a1", "b1", "a2", "b2", "a3", "a4", "b4", "a5", "b5", "tau"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                out.append(f"{name} must be positive and finite, got {v}")
        if int(self.G) != self.G or self.G < 1:
            out.append(f"G must be a positive integer, got {self.G}")
        if len(self.mu) != self.G:
            out.append(f"mu has length {len(self.mu)}, expected G={self.G}")
        if len(self.w) != self.k:
            out.append(f"w has length {len(self.w)}, expected k={self.k}")
        if any(x < 0 for x in self.w):
            out.append("node weights must be non-negative")
        if self.degenerate_mean and self.G != 1:
            out.append("a degenerate cluster mean requires G = 1")
        if not 0.0 < self.alpha_fdr < 1.0:
            out.append(f"alpha_fdr must lie in (0, 1), got {self.alpha_fdr}")
        if self.n_burnin < 0 or self.n_iter < 1:
            out.append("need n_burnin >= 0 and n_iter >= 1")
        return out

    def with_overrides(self, **kw) -> "Hyperparameters":
        return replace(self, **kw)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class ChainState:
    """Latent values of one chain at one iteration.

    ``lam`` holds the matched metabolite of each feature and ``lam_pos`` its
    position in the CSR candidate list (kept in sync). Cluster indices ``K``
    are 0-based.
    """

    lam: np.ndarray
    lam_pos: np.ndarray
    z: np.ndarray
    eta0: float
    eta: np.ndarray
    K: np.ndarray
    stick_p: np.ndarray
    stick_v: np.ndarray
    m: np.ndarray
    gamma: np.ndarray
    sigma2: float
    gamma0: float
    beta: np.ndarray
    sigma_g2: np.ndarray

    def eta_star(self) -> np.ndarray:
        return np.where(self.z == 1, self.eta, self.eta0)

    def copy(self) -> "ChainState":
        return ChainState(
            **{
                f.name: (getattr(self, f.name).copy() if isinstance(getattr(self, f.name), np.ndarray) else getattr(self, f.name))
                for f in fields(self)
            }
        )


@dataclass
class PosteriorSummary:
    """Posterior means accumulated over kept iterations."""

    inclusion_prob: np.ndarray
    match_prob: sp.csr_array
    scalar_means: dict[str, float]
    n_kept: int
    scalar_intervals: dict[str, tuple[float, float]] = field(default_factory=dict)

    def merge(self, other: "PosteriorSummary") -> "PosteriorSummary":
        """Pool two chains' summaries, weighting by kept-iteration counts."""
        n = self.n_kept + other.n_kept
        a, b = self.n_kept / n, other.n_kept / n
        return PosteriorSummary(
            inclusion_prob=a * self.inclusion_prob + b * other.inclusion_prob,
            match_prob=sp.csr_array(a * self.match_prob + b * other.match_prob),
            scalar_means={key: a * v + b * other.scalar_means[key] for key, v in self.scalar_means.items()},
            n_kept=n,
        )


def _require_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DomainError(f"non-finite input: {v}")


def log_likelihood_feature(r_i: float, eta_star: float, sigma2: float) -> float:
    """Log-density of N(eta_star, sigma2) at r_i."""
    _require_finite(r_i, eta_star, sigma2)
    if sigma2 <= 0:
        raise DomainError(f"variance must be positive, got {sigma2}")
    d = r_i - eta_star
    return -0.5 * (LOG_2PI + math.log(sigma2)) - d * d / (2.0 * sigma2)


def log_normal(x, mean, var):
    """Vectorised Gaussian log-density; no argument checks."""
    d = np.asarray(x) - mean
    return -0.5 * (LOG_2PI + np.log(var)) - d * d / (2.0 * var)


def _as_network(network) -> Network:
    return network if isinstance(network, Network) else Network.from_adjacency(network)


def potts_log_prior(z, hp: Hyperparameters, network) -> float:
    """Unnormalised log mass of the weighted Potts prior on binary labels."""
    net = _as_network(network)
    z = np.asarray(z)
    if len(z) != net.k or len(hp.w) != net.k:
        raise DomainError(f"length mismatch: z={len(z)}, w={len(hp.w)}, network k={net.k}")
    if not np.isin(z, (0, 1)).all():
        raise DomainError("labels must be binary")
    w = np.asarray(hp.w)
    wt = neighborhood_weights(net, w)
    log_pi = np.log([hp.pi0, hp.pi1])
    rho = np.array([hp.rho0, hp.rho1])
    field_term = float(np.sum(wt * log_pi[z]))
    a, b = net.edges[:, 0], net.edges[:, 1]
    same = z[a] == z[b]
    # each like-labelled edge counts once from each endpoint's sum
    coupling = float(np.sum(same * (rho[z[a]] * w[b] + rho[z[b]] * w[a])))
    return field_term + coupling


def validate_input(inp: ProblemInput) -> list[str]:
    """Every invariant violation of ``inp``; empty iff well formed."""
    out: list[str] = []
    r = inp.feature_stats
    q = inp.match_confidence
    p, k = q.shape
    if p < 1 or k < 1:
        out.append(f"need p >= 1 and k >= 1, got p={p}, k={k}")
    if len(r) != p:
        out.append(f"{len(r)} statistics for {p} confidence rows")
    if not np.all(np.isfinite(r)):
        bad = np.flatnonzero(~np.isfinite(r))
        out.extend(f"feature {inp.feature_ids[i]}: non-finite statistic" for i in bad[:20])
    if len(inp.feature_ids) != p:
        out.append(f"{len(inp.feature_ids)} feature ids for {p} features")
    if len(inp.metabolite_ids) != k:
        out.append(f"{len(inp.metabolite_ids)} metabolite ids for {k} metabolites")
    for ids, kind in ((inp.feature_ids, "feature"), (inp.metabolite_ids, "metabolite")):
        if len(set(ids)) != len(ids):
            out.append(f"duplicate {kind} ids")
    fid = inp.feature_ids if len(inp.feature_ids) == p else tuple(str(i) for i in range(p))
    if np.any(q.data < 0) or not np.all(np.isfinite(q.data)):
        rows = np.unique(np.repeat(np.arange(p), np.diff(q.indptr))[(q.data < 0) | ~np.isfinite(q.data)])
        out.extend(f"feature {fid[i]}: negative or non-finite confidence" for i in rows)
    sums = np.asarray(q.sum(axis=1)).ravel()
    for i in np.flatnonzero(np.abs(sums - 1.0) > 1e-9):
        out.append(f"feature {fid[i]}: confidences sum to {sums[i]:.12g}, not 1")
    positive = np.diff(sp.csr_array(q > 0).indptr) if q.nnz else np.zeros(p, dtype=int)
    for i in np.flatnonzero(positive == 0):
        out.append(f"feature {fid[i]}: no candidate with positive confidence")

    net = inp.network
    if isinstance(net, Network):
        if net.k != k:
            out.append(f"network has {net.k} nodes, expected k={k}")
    else:
        a = np.asarray(net.toarray() if hasattr(net, "toarray") else net)
        if a.shape != (k, k):
            out.append(f"adjacency shape {a.shape}, expected {(k, k)}")
        else:
            mid = inp.metabolite_ids if len(inp.metabolite_ids) == k else tuple(str(j) for j in range(k))
            if not np.isin(a, (0, 1)).all():
                out.append("adjacency entries must be 0 or 1")
            for j in np.flatnonzero(np.diag(a) != 0):
                out.append(f"self-loop at metabolite {mid[j]}")
            jj, ll = np.nonzero((a != 0) != (a != 0).T)
            for j, l in zip(jj, ll):
                if j < l:
                    out.append(f"asymmetric adjacency between {mid[j]} and {mid[l]}")
    return out


def check_input(inp: ProblemInput) -> None:
    problems = validate_input(inp)
    if problems:
        raise DomainError("invalid input: " + "; ".join(problems[:10]))
