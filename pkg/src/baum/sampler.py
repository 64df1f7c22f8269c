"""Blocked Gibbs sampler with Swendsen-Wang label updates.

A sweep updates, in order: feature matches, metabolite labels, the null
score, alternative scores, the truncated stick-breaking mixture, and the two
variances. Every update mutates ``state`` in place and also returns it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, gammaln

from baum import _kernels
from baum.model import (
    ChainState,
    Hyperparameters,
    PosteriorSummary,
    ProblemInput,
    check_input,
    log_normal,
)
from baum.network import bond_probabilities, neighborhood_weights, swendsen_wang_bonds


class ChainDivergence(FloatingPointError):
    def __init__(self, iteration: int, variable: str):
        super().__init__(f"non-finite {variable} at iteration {iteration}")
        self.iteration = iteration
        self.variable = variable


@dataclass(frozen=True)
class ChainConfig:
    n_burnin: int = 1000
    n_iter: int = 4000
    rng_seed: int | None = 0
    thinning: int = 1

    def __post_init__(self):
        if self.n_burnin < 0 or self.n_iter < 1 or self.thinning < 1:
            raise ValueError("need n_burnin >= 0, n_iter >= 1, thinning >= 1")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    sigma2: float
    gamma0: float
    eta0: float
    n_alt: int
    log_joint: float


class _Context:
    """Per-run constants derived from the input and hyperparameters."""

    def __init__(self, inp: ProblemInput, hp: Hyperparameters):
        q = inp.match_confidence
        keep = q.data > 0
        if not keep.all():
            q = sp.csr_array(q.multiply(q > 0))
            q.sort_indices()
        self.inp = inp
        self.hp = hp
        self.p, self.k = q.shape
        self.r = np.ascontiguousarray(inp.feature_stats, dtype=np.float64)
        self.indptr = np.ascontiguousarray(q.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(q.indices, dtype=np.int64)
        self.logq = np.ascontiguousarray(np.log(q.data), dtype=np.float64)
        self.net = inp.network
        self.w = np.asarray(hp.w, dtype=float)
        self.w_tilde = neighborhood_weights(self.net, self.w)
        self.log_pi = np.log([hp.pi0, hp.pi1])
        self.prior_logit = self.w_tilde * (self.log_pi[1] - self.log_pi[0])
        self.bond_prob = bond_probabilities(self.net, hp.rho0, self.w) if hp.rho0 == hp.rho1 else None
        self.mu = np.asarray(hp.mu, dtype=float)
        self.rho = np.array([hp.rho0, hp.rho1])

    def potts(self, z) -> float:
        """Same value as :func:`potts_log_prior`, without re-deriving the weights."""
        a, b = self.net.tails, self.net.heads
        za, zb = z[a], z[b]
        same = za == zb
        coupling = np.dot(same, self.rho[za] * self.w[b] + self.rho[zb] * self.w[a])
        return float(np.dot(self.w_tilde, self.log_pi[z]) + coupling)


def _inv_gamma(rng, shape, rate):
    return rate / rng.standard_gamma(shape)


def initial_state(inp: ProblemInput, hp: Hyperparameters, rng) -> ChainState:
    """Deterministic-given-rng starting point.

    Matches drawn from the prior confidences, all labels null, null score 0,
    each metabolite placed in the cluster whose prior mean is closest to the
    average statistic of its matched features, variances at prior means.
    """
    ctx = inp if isinstance(inp, _Context) else _Context(inp, hp)
    G = hp.G
    pos = _kernels.sample_lambda(
        ctx.indptr, ctx.indices, ctx.logq, ctx.r, np.zeros(ctx.k), 0.0, rng.random(ctx.p)
    )
    lam = ctx.indices[pos]
    n = np.bincount(lam, minlength=ctx.k)
    s = np.bincount(lam, weights=ctx.r, minlength=ctx.k)
    K = rng.integers(G, size=ctx.k)
    has = n > 0
    avg = s[has] / n[has]
    K[has] = np.argmin(np.abs(avg[:, None] - ctx.mu[None, :]), axis=1)
    beta = np.full(G, hp.a4 / hp.b4)
    return ChainState(
        lam=lam,
        lam_pos=pos,
        z=np.zeros(ctx.k, dtype=np.int64),
        eta0=0.0,
        eta=ctx.mu[K].copy(),
        K=K.astype(np.int64),
        stick_p=np.full(G, 1.0 / G),
        stick_v=np.concatenate([1.0 / (G - np.arange(G - 1)), [1.0]]),
        m=ctx.mu.copy(),
        gamma=_prior_mean_ig(hp.a3, beta),
        sigma2=float(_prior_mean_ig(hp.a1, hp.b1)),
        gamma0=float(_prior_mean_ig(hp.a2, hp.b2)),
        beta=beta,
        sigma_g2=np.full(G, _prior_mean_ig(hp.a5, hp.b5)),
    )


def _prior_mean_ig(shape, rate):
    # mode when the mean does not exist
    return rate / (shape - 1.0) if shape > 1 else rate / (shape + 1.0)


def _ctx(inp, hp) -> _Context:
    if isinstance(inp, _Context):
        return inp
    return _Context(inp, hp)


def _match_stats(state: ChainState, ctx: _Context):
    n = np.bincount(state.lam, minlength=ctx.k)
    s = np.bincount(state.lam, weights=ctx.r, minlength=ctx.k)
    return n, s


def update_lambda(state: ChainState, inp, rng, hp: Hyperparameters | None = None) -> ChainState:
    """Resample each feature's match from q_ij * N(r_i; eta*_j, sigma2)."""
    ctx = _ctx(inp, hp)
    pos = _kernels.sample_lambda(
        ctx.indptr,
        ctx.indices,
        ctx.logq,
        ctx.r,
        np.ascontiguousarray(state.eta_star(), dtype=np.float64),
        0.5 / state.sigma2,
        rng.random(ctx.p),
    )
    state.lam_pos = pos
    state.lam = ctx.indices[pos]
    return state


def label_log_odds(state: ChainState, ctx: _Context) -> np.ndarray:
    """Per-metabolite log odds of the alternative label given everything but z."""
    r = ctx.r
    lam = state.lam
    d1 = r - state.eta[lam]
    d0 = r - state.eta0
    diff = np.bincount(lam, weights=(d0 * d0 - d1 * d1), minlength=ctx.k) / (2.0 * state.sigma2)
    return ctx.prior_logit + diff


def update_z(state: ChainState, inp, hp: Hyperparameters, rng) -> ChainState:
    """Swendsen-Wang update: bond like-labelled neighbours, relabel each cluster jointly."""
    ctx = _ctx(inp, hp)
    part = swendsen_wang_bonds(ctx.net, state.z, hp, rng, bond_prob=ctx.bond_prob)
    a = np.bincount(part.cluster_id, weights=label_log_odds(state, ctx), minlength=part.n_clusters)
    new = (rng.random(part.n_clusters) < expit(a)).astype(np.int64)
    state.z = new[part.cluster_id]
    return state


def update_z_single_site(state: ChainState, inp, hp: Hyperparameters, rng) -> ChainState:
    """Heat-bath update of one label at a time, in index order (reference kernel)."""
    ctx = _ctx(inp, hp)
    odds = label_log_odds(state, ctx)
    rho = np.array([hp.rho0, hp.rho1])
    net = ctx.net
    z = state.z
    w = ctx.w
    for j in range(ctx.k):
        nb = net.neighbors(j)
        # like-label energy of each choice, counting both directions of every edge
        e1 = rho[1] * np.sum(w[nb] * (z[nb] == 1)) + np.sum(rho[1] * w[j] * (z[nb] == 1))
        e0 = rho[0] * np.sum(w[nb] * (z[nb] == 0)) + np.sum(rho[0] * w[j] * (z[nb] == 0))
        z[j] = int(rng.random() < expit(odds[j] + e1 - e0))
    return state


def update_eta0(state: ChainState, inp, hp: Hyperparameters, rng) -> ChainState:
    ctx = _ctx(inp, hp)
    in_null = state.z[state.lam] == 0
    n0 = int(in_null.sum())
    s0 = float(ctx.r[in_null].sum())
    v = 1.0 / (1.0 / state.gamma0 + n0 / state.sigma2)
    state.eta0 = float(v * s0 / state.sigma2 + math.sqrt(v) * rng.standard_normal())
    return state


def update_eta(state: ChainState, inp, hp: Hyperparameters, rng) -> ChainState:
    """Alternative scores: conjugate Gaussian for z=1, cluster prior draw for z=0."""
    ctx = _ctx(inp, hp)
    n, s = _match_stats(state, ctx)
    alt = state.z == 1
    n = np.where(alt, n, 0)
    s = np.where(alt, s, 0.0)
    g = state.gamma[state.K]
    prec = 1.0 / g + n / state.sigma2
    mean = (state.m[state.K] / g + s / state.sigma2) / prec
    state.eta = mean + rng.standard_normal(ctx.k) / np.sqrt(prec)
    return state


def update_clusters(state: ChainState, hp: Hyperparameters, rng) -> ChainState:
    """Cluster labels, stick weights, cluster means, cluster variances and their hyperparameters."""
    G = hp.G
    eta = state.eta
    k = len(eta)
    if G > 1:
        with np.errstate(divide="ignore"):
            logp = (
                np.log(state.stick_p)[None, :]
                - 0.5 * np.log(state.gamma)[None, :]
                - (eta[:, None] - state.m[None, :]) ** 2 / (2.0 * state.gamma[None, :])
            )
        state.K = _kernels.sample_rows(np.ascontiguousarray(logp), rng.random(k))
        n = np.bincount(state.K, minlength=G)
        tail = np.concatenate([np.cumsum(n[::-1])[::-1][1:], [0]])
        v = np.ones(G)
        v[:-1] = rng.beta(1.0 + n[:-1], hp.tau + tail[:-1])
        state.stick_v = v
        state.stick_p = v * np.concatenate([[1.0], np.cumprod(1.0 - v[:-1])])
    else:
        n = np.array([k])
    sums = np.bincount(state.K, weights=eta, minlength=G)
    mu = np.asarray(hp.mu, dtype=float)
    if not hp.degenerate_mean:
        prec = 1.0 / state.sigma_g2 + n / state.gamma
        mean = (mu / state.sigma_g2 + sums / state.gamma) / prec
        state.m = mean + rng.standard_normal(G) / np.sqrt(prec)
    ss = np.bincount(state.K, weights=(eta - state.m[state.K]) ** 2, minlength=G)
    state.gamma = _inv_gamma(rng, hp.a3 + 0.5 * n, state.beta + 0.5 * ss)
    state.beta = rng.standard_gamma(hp.a4 + hp.a3, size=G) / (hp.b4 + 1.0 / state.gamma)
    if not hp.degenerate_mean:
        state.sigma_g2 = _inv_gamma(rng, hp.a5 + 0.5, hp.b5 + 0.5 * (state.m - mu) ** 2)
    return state


def update_variances(state: ChainState, inp, hp: Hyperparameters, rng) -> ChainState:
    ctx = _ctx(inp, hp)
    res = ctx.r - state.eta_star()[state.lam]
    state.sigma2 = float(_inv_gamma(rng, hp.a1 + 0.5 * ctx.p, hp.b1 + 0.5 * float(res @ res)))
    state.gamma0 = float(_inv_gamma(rng, hp.a2 + 0.5, hp.b2 + 0.5 * state.eta0**2))
    return state


def sweep(state: ChainState, ctx: _Context, rng) -> ChainState:
    hp = ctx.hp
    update_lambda(state, ctx, rng)
    update_z(state, ctx, hp, rng)
    update_eta0(state, ctx, hp, rng)
    update_eta(state, ctx, hp, rng)
    update_clusters(state, hp, rng)
    update_variances(state, ctx, hp, rng)
    return state


def _log_ig(x, a, b):
    return a * np.log(b) - gammaln(a) - (a + 1.0) * np.log(x) - b / x


def log_joint(state: ChainState, inp, hp: Hyperparameters) -> float:
    """Log joint density of data and latents, up to the Potts normalising constant."""
    ctx = _ctx(inp, hp)
    es = state.eta_star()
    out = float(np.sum(ctx.logq[state.lam_pos]))
    out += float(np.sum(log_normal(ctx.r, es[state.lam], state.sigma2)))
    out += ctx.potts(state.z)
    out += float(log_normal(state.eta0, 0.0, state.gamma0))
    out += float(np.sum(log_normal(state.eta, state.m[state.K], state.gamma[state.K])))
    if hp.G > 1:
        with np.errstate(divide="ignore"):
            out += float(np.sum(np.log(state.stick_p[state.K])))
            v = state.stick_v[:-1]
            out += float(np.sum(math.log(hp.tau) + (hp.tau - 1.0) * np.log1p(-v))) if hp.tau != 1.0 else 0.0
    mu = np.asarray(hp.mu, dtype=float)
    if not hp.degenerate_mean:
        out += float(np.sum(log_normal(state.m, mu, state.sigma_g2)))
        out += float(np.sum(_log_ig(state.sigma_g2, hp.a5, hp.b5)))
    out += float(np.sum(_log_ig(state.gamma, hp.a3, state.beta)))
    out += float(np.sum(hp.a4 * np.log(hp.b4) - gammaln(hp.a4) + (hp.a4 - 1) * np.log(state.beta) - hp.b4 * state.beta))
    out += float(_log_ig(state.sigma2, hp.a1, hp.b1) + _log_ig(state.gamma0, hp.a2, hp.b2))
    return out


_CHECKED = ("sigma2", "gamma0", "eta0", "eta", "m", "gamma", "beta", "sigma_g2", "stick_p")


def _check_finite(state: ChainState, it: int) -> None:
    # one cheap pass; the sum overflowing is harmless, it only triggers the detailed scan
    if math.isfinite(sum(float(np.sum(getattr(state, name))) for name in _CHECKED)):
        return
    for name in _CHECKED:
        if not np.all(np.isfinite(getattr(state, name))):
            raise ChainDivergence(it, name)


def run_chain(
    inp: ProblemInput,
    hp: Hyperparameters,
    cfg: ChainConfig | None = None,
    state: ChainState | None = None,
    callback=None,
) -> tuple[PosteriorSummary, list[TraceRecord]]:
    """Run ``n_burnin + n_iter`` sweeps and summarise the kept iterations.

    ``callback(it, state)`` is invoked after every sweep when given.
    """
    cfg = cfg or ChainConfig(hp.n_burnin, hp.n_iter)
    check_input(inp)
    ctx = _Context(inp, hp)
    rng = np.random.default_rng(cfg.rng_seed)
    if state is None:
        state = initial_state(ctx, hp, rng)
    z_sum = np.zeros(ctx.k)
    lam_count = np.zeros(len(ctx.indices))
    traces: list[TraceRecord] = []
    total = cfg.n_burnin + cfg.n_iter
    for it in range(total):
        sweep(state, ctx, rng)
        _check_finite(state, it)
        if callback is not None:
            callback(it, state)
        if it < cfg.n_burnin or (it - cfg.n_burnin) % cfg.thinning:
            continue
        z_sum += state.z
        lam_count[state.lam_pos] += 1.0
        lj = log_joint(state, ctx, hp)
        if not math.isfinite(lj):
            raise ChainDivergence(it, "log_joint")
        traces.append(TraceRecord(it, state.sigma2, state.gamma0, state.eta0, int(state.z.sum()), lj))
    n_kept = len(traces)
    match_prob = sp.csr_array((lam_count / n_kept, ctx.indices.copy(), ctx.indptr.copy()), shape=(ctx.p, ctx.k))
    scal = {name: np.array([getattr(t, name) for t in traces]) for name in ("sigma2", "gamma0", "eta0")}
    summary = PosteriorSummary(
        inclusion_prob=z_sum / n_kept,
        match_prob=match_prob,
        scalar_means={name: float(v.mean()) for name, v in scal.items()},
        n_kept=n_kept,
        scalar_intervals={name: (float(np.quantile(v, 0.025)), float(np.quantile(v, 0.975))) for name, v in scal.items()},
    )
    return summary, traces
