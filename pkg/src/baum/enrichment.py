"""Pathway over-representation and selected-subnetwork extraction."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from baum.model import DomainError
from baum.network import Network, connected_components


def _log_comb(n, r):
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


def hypergeometric_test(x: int, n: int, K: int, N: int) -> float:
    """P(X >= x) for X ~ Hypergeometric(population N, K successes, n draws)."""
    x, n, K, N = int(x), int(n), int(K), int(N)
    if N < 0 or not (0 <= K <= N) or not (0 <= n <= N) or not (0 <= x <= min(n, K)):
        raise DomainError(f"inconsistent counts: x={x}, n={n}, K={K}, N={N}")
    lo = max(0, n + K - N)
    if x <= lo:
        return 1.0
    hi = min(n, K)
    j = np.arange(x, hi + 1)
    terms = _log_comb(K, j) + _log_comb(N - K, n - j) - _log_comb(N, n)
    return float(min(1.0, math.exp(logsumexp(terms))))


@dataclass(frozen=True)
class PathwayDB:
    pathways: dict[str, frozenset[str]]

    @classmethod
    def from_pairs(cls, pairs) -> "PathwayDB":
        acc: dict[str, set[str]] = {}
        for name, member in pairs:
            acc.setdefault(name, set()).add(member)
        return cls({name: frozenset(m) for name, m in acc.items()})

    def restricted(self, universe) -> "PathwayDB":
        """Drop members outside ``universe`` and pathways left empty."""
        u = set(universe)
        out = {name: m & u for name, m in self.pathways.items()}
        return PathwayDB({name: m for name, m in out.items() if m})


def read_pathways(path) -> PathwayDB:
    from baum.io import FormatError, _rows

    pairs = []
    for no, f in _rows(path):
        if len(f) < 2:
            raise FormatError(f"{path}:{no}: expected 'pathway_name<TAB>metabolite_id'")
        pairs.append((f[0], f[1]))
    return PathwayDB.from_pairs(pairs)


@dataclass(frozen=True)
class PathwayHit:
    pathway: str
    overlap: int
    size: int
    p: float
    members: tuple[str, ...] = ()


def rank_pathways(db: PathwayDB, selected, universe, min_overlap: int = 3, max_p: float = 0.05) -> list[PathwayHit]:
    """Hypergeometric over-representation of ``selected`` in each pathway, filtered and sorted by p."""
    uni = set(universe)
    sel = set(selected) & uni
    N, n = len(uni), len(sel)
    hits = []
    for name, members in db.pathways.items():
        m = members & uni
        if not m:
            continue
        common = m & sel
        p = hypergeometric_test(len(common), n, len(m), N)
        if len(common) >= min_overlap and p <= max_p:
            hits.append(PathwayHit(name, len(common), len(m), p, tuple(sorted(common))))
    hits.sort(key=lambda h: (h.p, -h.overlap, h.pathway))
    return hits


@dataclass(frozen=True)
class Subnetwork:
    selected: tuple[int, ...]
    connectors: tuple[int, ...]
    features: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    pathways: tuple[PathwayHit, ...] = ()


@dataclass(frozen=True)
class SubnetworkReport:
    components: tuple[Subnetwork, ...] = field(default_factory=tuple)


def _bfs_dist(net: Network, source: int, depth: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if dist[v] == depth:
            continue
        for nb in net.neighbors(v).tolist():
            if nb not in dist:
                dist[nb] = dist[v] + 1
                queue.append(nb)
    return dist


def find_connectors(net: Network, selected, max_path: int = 2) -> set[int]:
    """Unselected nodes lying on a shortest path of length <= ``max_path`` between two selected nodes."""
    sel = sorted(set(int(s) for s in selected))
    sel_set = set(sel)
    dists = {s: _bfs_dist(net, s, max_path) for s in sel}
    out: set[int] = set()
    for a_i, a in enumerate(sel):
        da = dists[a]
        for b in sel[a_i + 1 :]:
            d_ab = da.get(b)
            if d_ab is None or d_ab < 2:
                continue
            db = dists[b]
            for v, dv in da.items():
                if v not in sel_set and v in db and dv + db[v] == d_ab:
                    out.add(v)
    return out


def extract_subnetworks(
    network: Network,
    selected,
    match_assignment=None,
    max_path: int = 2,
    db: PathwayDB | None = None,
    metabolite_ids=None,
    top_pathways: int = 3,
) -> SubnetworkReport:
    """Components of the selected metabolites plus connectors, with their assigned features.

    ``match_assignment[i]`` is the metabolite feature ``i`` is assigned to.
    When ``db`` and ``metabolite_ids`` are given each component lists its most
    over-represented pathways (no overlap or p filter, best ``top_pathways``).
    """
    sel = set(int(s) for s in selected)
    if not sel:
        return SubnetworkReport(())
    connectors = find_connectors(network, sel, max_path)
    nodes = sel | connectors
    assign = np.asarray(match_assignment if match_assignment is not None else [], dtype=np.int64)
    comps = []
    for comp in connected_components(network, nodes):
        cset = set(comp)
        feats = tuple(int(i) for i in np.flatnonzero(np.isin(assign, sorted(cset & sel)))) if assign.size else ()
        edges = tuple(tuple(int(x) for x in e) for e in network.subgraph_edges(comp))
        hits: tuple[PathwayHit, ...] = ()
        if db is not None and metabolite_ids is not None:
            names = [metabolite_ids[j] for j in sorted(cset & sel)]
            ranked = rank_pathways(db, names, metabolite_ids, min_overlap=1, max_p=1.0)
            hits = tuple(ranked[:top_pathways])
        comps.append(
            Subnetwork(
                selected=tuple(sorted(cset & sel)),
                connectors=tuple(sorted(cset & connectors)),
                features=feats,
                edges=edges,
                pathways=hits,
            )
        )
    return SubnetworkReport(tuple(comps))


def write_dot(path, report: SubnetworkReport, metabolite_ids, feature_ids=(), match_assignment=None) -> None:
    """DOT graph: selected metabolites green, connectors gray, matched features blue."""
    lines = ["graph subnetworks {"]
    for c_idx, comp in enumerate(report.components):
        for j in comp.selected:
            lines.append(f'  "{metabolite_ids[j]}" [role=selected, color=green, component={c_idx}];')
        for j in comp.connectors:
            lines.append(f'  "{metabolite_ids[j]}" [role=connector, color=gray, component={c_idx}];')
        for a, b in comp.edges:
            lines.append(f'  "{metabolite_ids[a]}" -- "{metabolite_ids[b]}";')
        for i in comp.features:
            lines.append(f'  "{feature_ids[i]}" [role=feature, color=blue, shape=box, component={c_idx}];')
            if match_assignment is not None:
                lines.append(f'  "{feature_ids[i]}" -- "{metabolite_ids[int(match_assignment[i])]}" [style=dashed];')
    lines.append("}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
