"""Geweke joint-distribution check for the full sampler.

The marginal-conditional simulator draws (latents, data) forward from the
prior, with the Potts labels drawn by enumerating all 2^k states. The
successive-conditional simulator alternates one Gibbs sweep with a fresh draw
of the data given the latents. Both target the same joint law, so every
summary has the same expectation under both.

The cluster block mixes slowly (a score and its cluster label move together),
so a single successive chain gives unreliable batch-means errors. Instead the
successive draws come from many independent chains, each started from an
exact joint draw; the joint law is then preserved at every step, and the
spread of the chain means gives an honest standard error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from baum import sampler
from baum.model import ChainState, Hyperparameters, potts_log_prior

from conftest import make_input

K_NODES = 8
P_FEATURES = 12
EDGES = [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (2, 6)]  # node 7 isolated
CANDIDATES = [[0], [1, 2], [2], [3, 4, 5], [4], [5, 6], [6], [0, 7], [7], [1], [2, 3], [5]]
CONFIDENCE = [[1.0], [0.7, 0.3], [1.0], [0.5, 0.3, 0.2], [1.0], [0.4, 0.6], [1.0], [0.2, 0.8],
              [1.0], [1.0], [0.5, 0.5], [1.0]]


def geweke_problem():
    hp = Hyperparameters(
        k=K_NODES, a1=3.0, b1=2.0, a2=3.0, b2=2.0, a3=3.0, a4=2.0, b4=2.0, a5=3.0, b5=2.0,
        G=2, mu=(-2.0, 3.0), pi1=0.3, rho0=0.3, rho1=0.3,
    )
    inp = make_input(np.zeros(P_FEATURES), CANDIDATES, K_NODES, EDGES, q=CONFIDENCE)
    return inp, hp


def _potts_table(inp, hp):
    states = np.array(list(itertools.product((0, 1), repeat=inp.k)), dtype=np.int64)
    logp = np.array([potts_log_prior(z, hp, inp.network) for z in states])
    return states, np.exp(logp - logsumexp(logp))


def _ig(rng, a, b, size=None):
    return b / rng.gamma(a, 1.0, size)


def prior_draw(inp, hp, rng, table) -> tuple[ChainState, np.ndarray]:
    """One forward draw of every latent and the data."""
    G, k = hp.G, inp.k
    mu = np.asarray(hp.mu)
    sigma2 = _ig(rng, hp.a1, hp.b1)
    gamma0 = _ig(rng, hp.a2, hp.b2)
    eta0 = rng.normal(0.0, np.sqrt(gamma0))
    beta = rng.gamma(hp.a4, 1.0 / hp.b4, G)
    gamma = _ig(rng, hp.a3, beta)
    sigma_g2 = _ig(rng, hp.a5, hp.b5, G)
    m = rng.normal(mu, np.sqrt(sigma_g2))
    v = np.append(rng.beta(1.0, hp.tau, G - 1), 1.0)
    p = v * np.concatenate([[1.0], np.cumprod(1.0 - v[:-1])])
    K = rng.choice(G, size=k, p=p)
    eta = rng.normal(m[K], np.sqrt(gamma[K]))
    states, probs = table
    z = states[rng.choice(len(states), p=probs)].copy()
    q = inp.match_confidence
    lam_pos = np.array([q.indptr[i] + rng.choice(q.indptr[i + 1] - q.indptr[i], p=q.data[q.indptr[i]:q.indptr[i + 1]])
                        for i in range(inp.p)])
    lam = q.indices[lam_pos].astype(np.int64)
    state = ChainState(lam=lam, lam_pos=lam_pos.astype(np.int64), z=z, eta0=float(eta0), eta=eta, K=K.astype(np.int64),
                       stick_p=p, stick_v=v, m=m, gamma=gamma, sigma2=float(sigma2), gamma0=float(gamma0),
                       beta=beta, sigma_g2=sigma_g2)
    return state, draw_data(state, rng)


def draw_data(state: ChainState, rng) -> np.ndarray:
    es = state.eta_star()[state.lam]
    return es + np.sqrt(state.sigma2) * rng.standard_normal(len(es))


def summaries(state: ChainState, r: np.ndarray) -> dict[str, float]:
    return {
        "log sigma2": np.log(state.sigma2),
        "log gamma0": np.log(state.gamma0),
        "eta0": state.eta0,
        "eta0^2": state.eta0**2,
        "mean z": state.z.mean(),
        "z0 z1": float(state.z[0] * state.z[1]),
        "z7": float(state.z[7]),
        "eta_0": state.eta[0],
        "m_1": state.m[0],
        "m_2": state.m[1],
        "log gamma_1": np.log(state.gamma[0]),
        "log beta_1": np.log(state.beta[0]),
        "log sigma_1^2": np.log(state.sigma_g2[0]),
        "p_1": state.stick_p[0],
        "frac K=1": float(np.mean(state.K == 0)),
        "lam_1 = 1": float(state.lam[1] == 1),
        "lam_3 = 3": float(state.lam[3] == 3),
        "mean r": r.mean(),
        "mean r^2": float(np.mean(r * r)),
        "r_1 z_1": r[1] * state.z[1],
    }


@dataclass(frozen=True)
class GewekeResult:
    name: str
    mc_mean: float
    sc_mean: float
    z: float


def geweke(n: int = 100_000, chain_length: int = 200, seed: int = 7) -> list[GewekeResult]:
    inp, hp = geweke_problem()
    rng = np.random.default_rng(seed)
    table = _potts_table(inp, hp)
    mc = [summaries(*prior_draw(inp, hp, rng, table)) for _ in range(n)]

    ctx = sampler._Context(inp, hp)
    n_chains = n // chain_length
    sc = []
    for _ in range(n_chains):
        state, r = prior_draw(inp, hp, rng, table)
        for _ in range(chain_length):
            ctx.r[:] = r
            sampler.sweep(state, ctx, rng)
            r = draw_data(state, rng)
            sc.append(summaries(state, r))

    out = []
    for name in mc[0]:
        a = np.array([d[name] for d in mc])
        b = np.array([d[name] for d in sc]).reshape(n_chains, chain_length).mean(axis=1)
        se = np.sqrt(a.var(ddof=1) / n + b.var(ddof=1) / n_chains)
        out.append(GewekeResult(name, float(a.mean()), float(b.mean()), float((b.mean() - a.mean()) / se)))
    return out
