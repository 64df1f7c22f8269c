"""Metabolite network: construction, Barabasi-Albert generation, Swendsen-Wang bonds."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from baum import _kernels


class UnsupportedConfiguration(ValueError):
    """Raised for model settings the sampler deliberately refuses."""


@dataclass(frozen=True, eq=False)
class Network:
    """Undirected, unweighted graph over ``k`` nodes.

    ``edges`` is an ``(E, 2)`` int64 array with ``edges[:, 0] < edges[:, 1]``,
    sorted lexicographically. ``indptr``/``indices`` hold the CSR adjacency
    lists (neighbours ascending).
    """

    k: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, k: int, edges) -> "Network":
        """Build from any iterable of pairs; duplicates are collapsed."""
        net, _ = cls.from_edges_counted(k, edges)
        return net

    @classmethod
    def from_edges_counted(cls, k: int, edges) -> tuple["Network", int]:
        """Like :meth:`from_edges`, also returning the number of dropped duplicates."""
        k = int(k)
        if k < 0:
            raise ValueError("node count must be non-negative")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= k):
            raise ValueError(f"edge endpoint out of range for k={k}")
        if np.any(e[:, 0] == e[:, 1]):
            j = int(e[e[:, 0] == e[:, 1]][0, 0])
            raise ValueError(f"self-loop at node {j}")
        e = np.sort(e, axis=1)
        uniq = np.unique(e, axis=0) if e.size else e
        n_dup = len(e) - len(uniq)
        return cls._from_canonical(k, uniq), n_dup

    @classmethod
    def from_adjacency(cls, adj) -> "Network":
        a = np.asarray(adj.toarray() if hasattr(adj, "toarray") else adj)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a != 0, (a != 0).T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have zero diagonal")
        j, l = np.nonzero(np.triu(a != 0, 1))
        return cls._from_canonical(a.shape[0], np.column_stack([j, l]).astype(np.int64))

    @classmethod
    def _from_canonical(cls, k: int, edges: np.ndarray) -> "Network":
        edges = edges.reshape(-1, 2).astype(np.int64)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(k + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=k), out=indptr[1:])
        edges.setflags(write=False)
        indices = dst[order]
        indices.setflags(write=False)
        indptr.setflags(write=False)
        return cls(k, edges, indptr, indices)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.ascontiguousarray(self.edges[:, 0])

    @cached_property
    def heads(self) -> np.ndarray:
        return np.ascontiguousarray(self.edges[:, 1])

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, j: int) -> np.ndarray:
        return self.indices[self.indptr[j] : self.indptr[j + 1]]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.k, self.k), dtype=np.int8)
        a[self.edges[:, 0], self.edges[:, 1]] = 1
        a[self.edges[:, 1], self.edges[:, 0]] = 1
        return a

    def permuted(self, perm) -> "Network":
        """Relabel node ``j`` as ``perm[j]``."""
        perm = np.asarray(perm, dtype=np.int64)
        return Network.from_edges(self.k, perm[self.edges])

    def subgraph_edges(self, nodes) -> np.ndarray:
        mask = np.zeros(self.k, dtype=bool)
        mask[np.asarray(list(nodes), dtype=np.int64)] = True
        keep = mask[self.edges[:, 0]] & mask[self.edges[:, 1]]
        return self.edges[keep]


@dataclass(frozen=True)
class BondPartition:
    cluster_id: np.ndarray
    n_clusters: int

    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.cluster_id, kind="stable")
        bounds = np.cumsum(np.bincount(self.cluster_id, minlength=self.n_clusters))[:-1]
        return np.split(order, bounds)


def generate_barabasi_albert(k: int, m_attach: int = 1, rng_seed=None) -> Network:
    """Preferential-attachment graph grown from a clique of ``m_attach + 1`` nodes.

    Each later node connects to ``m_attach`` distinct existing nodes chosen
    with probability proportional to their current degree.
    """
    k, m_attach = int(k), int(m_attach)
    if m_attach < 1:
        raise ValueError("m_attach must be at least 1")
    if k <= m_attach:
        raise ValueError(f"need k > m_attach, got k={k}, m_attach={m_attach}")
    rng = np.random.default_rng(rng_seed)
    n0 = m_attach + 1
    edges = [(a, b) for a in range(n0) for b in range(a + 1, n0)]
    # each node appears once per incident edge end, so uniform picks are degree-weighted
    ends = np.empty(2 * (len(edges) + (k - n0) * m_attach), dtype=np.int64)
    n_ends = 0
    for a, b in edges:
        ends[n_ends], ends[n_ends + 1] = a, b
        n_ends += 2
    for new in range(n0, k):
        targets: set[int] = set()
        while len(targets) < m_attach:
            targets.add(int(ends[rng.integers(n_ends)]))
        for t in sorted(targets):
            edges.append((t, new))
            ends[n_ends], ends[n_ends + 1] = t, new
            n_ends += 2
    return Network.from_edges(k, edges)


def neighborhood_weights(network: Network, w) -> np.ndarray:
    """Average neighbour weight per node; isolated nodes get 1."""
    w = np.asarray(w, dtype=float)
    deg = network.degree()
    sums = np.zeros(network.k)
    np.add.at(sums, network.edges[:, 0], w[network.edges[:, 1]])
    np.add.at(sums, network.edges[:, 1], w[network.edges[:, 0]])
    out = np.ones(network.k)
    nz = deg > 0
    out[nz] = sums[nz] / deg[nz]
    return out


def bond_probabilities(network: Network, rho: float, w) -> np.ndarray:
    """Per-edge activation probability for like-labelled endpoints."""
    w = np.asarray(w, dtype=float)
    e = network.edges
    return -np.expm1(-rho * (w[e[:, 0]] + w[e[:, 1]]))


def common_rho(hp) -> float:
    if hp.rho0 != hp.rho1:
        raise UnsupportedConfiguration(
            f"Swendsen-Wang updates need rho0 == rho1 (got {hp.rho0}, {hp.rho1})"
        )
    return float(hp.rho0)


def swendsen_wang_bonds(network: Network, z, hp, rng, bond_prob=None) -> BondPartition:
    """Draw Swendsen-Wang bonds between like-labelled neighbours.

    ``hp`` only needs ``rho0``, ``rho1`` and ``w``. ``bond_prob`` may carry
    precomputed :func:`bond_probabilities` to skip recomputation in a chain.
    One uniform is consumed per edge regardless of labels.
    """
    rho = common_rho(hp)
    z = np.asarray(z)
    if len(z) != network.k:
        raise ValueError(f"label vector has length {len(z)}, network has {network.k} nodes")
    if bond_prob is None:
        bond_prob = bond_probabilities(network, rho, hp.w)
    e = network.edges
    u = rng.random(len(e))
    bonded = ((z[e[:, 0]] == z[e[:, 1]]) & (u < bond_prob)).astype(np.uint8)
    labels, n = _kernels.bond_labels(network.k, network.tails, network.heads, bonded)
    return BondPartition(labels, n)


def connected_components(network: Network, node_subset) -> list[list[int]]:
    """Components of the subgraph induced by ``node_subset``, each sorted, ordered by smallest node."""
    nodes = np.unique(np.asarray(list(node_subset), dtype=np.int64))
    if nodes.size == 0:
        return []
    if nodes[0] < 0 or nodes[-1] >= network.k:
        raise ValueError("node subset contains unknown nodes")
    sub = network.subgraph_edges(nodes)
    labels, n = _kernels.bond_labels(
        network.k,
        np.ascontiguousarray(sub[:, 0]),
        np.ascontiguousarray(sub[:, 1]),
        np.ones(len(sub), dtype=np.uint8),
    )
    groups: dict[int, list[int]] = {}
    for j in nodes.tolist():
        groups.setdefault(int(labels[j]), []).append(j)
    return sorted(groups.values(), key=lambda c: c[0])
