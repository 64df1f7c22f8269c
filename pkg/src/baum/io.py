"""Tab-separated exchange formats, configuration files and statistic transforms."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.stats import norm, rankdata

from baum.model import DomainError, Hyperparameters, ProblemInput
from baum.network import Network

log = logging.getLogger(__name__)

Q_TOLERANCE = 1e-6
P_FLOOR = 1e-15


class FormatError(ValueError):
    """Malformed input file; the message carries path and line number."""


def _rows(path):
    """Yield ``(line_no, fields)`` for non-blank, non-comment lines."""
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield no, line.split("\t")


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


class _Interner:
    def __init__(self):
        self.index: dict[str, int] = {}

    def __call__(self, key: str) -> int:
        if key not in self.index:
            self.index[key] = len(self.index)
        return self.index[key]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self.index)


def read_stats(path) -> tuple[list[str], np.ndarray]:
    ids, vals = [], []
    for no, f in _rows(path):
        if len(f) < 2:
            raise FormatError(f"{path}:{no}: expected 'feature_id<TAB>statistic'")
        if not _is_number(f[1]):
            if not ids:
                continue  # header
            raise FormatError(f"{path}:{no}: statistic {f[1]!r} is not a number")
        ids.append(f[0])
        vals.append(float(f[1]))
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate feature ids")
    return ids, np.asarray(vals)


def read_network(path, metabolites: _Interner | None = None):
    """Edge list; a single-field line declares a metabolite without edges."""
    metabolites = metabolites or _Interner()
    edges = []
    for no, f in _rows(path):
        f = [x for x in f if x != ""]
        if len(f) == 1:
            metabolites(f[0])
        elif len(f) >= 2:
            if f[0] == f[1]:
                raise FormatError(f"{path}:{no}: self-loop on {f[0]}")
            edges.append((metabolites(f[0]), metabolites(f[1])))
        else:
            raise FormatError(f"{path}:{no}: empty record")
    return metabolites, edges


def read_matches(path, features: _Interner, metabolites: _Interner, allow_new_features: bool):
    rows, cols, vals = [], [], []
    for no, f in _rows(path):
        if len(f) < 3:
            raise FormatError(f"{path}:{no}: expected 'feature_id<TAB>metabolite_id<TAB>q'")
        if not _is_number(f[2]):
            if not rows:
                continue  # header
            raise FormatError(f"{path}:{no}: confidence {f[2]!r} is not a number")
        if f[0] not in features.index and not allow_new_features:
            raise FormatError(f"{path}:{no}: feature {f[0]!r} has no statistic")
        q = float(f[2])
        if not (q >= 0 and math.isfinite(q)):
            raise FormatError(f"{path}:{no}: confidence must be a non-negative number, got {f[2]!r}")
        rows.append(features(f[0]))
        cols.append(metabolites(f[1]))
        vals.append(q)
    return rows, cols, vals


def load_inputs(stats_path, matches_path, network_path) -> ProblemInput:
    """Read the three input tables into a validated :class:`ProblemInput`.

    Metabolite indices follow first appearance in the network file, then in
    the matches file. Feature indices follow the statistics file; if
    ``stats_path`` is None they follow the matches file and statistics are 0.
    Confidence rows within 1e-6 of summing to one are renormalised.
    """
    features = _Interner()
    r = None
    if stats_path is not None:
        ids, r = read_stats(stats_path)
        for i in ids:
            features(i)
    metabolites, edges = read_network(network_path)
    rows, cols, vals = read_matches(matches_path, features, metabolites, allow_new_features=stats_path is None)
    p, k = len(features.index), len(metabolites.index)
    if r is None:
        r = np.zeros(p)
    q = sp.coo_array((vals, (rows, cols)), shape=(p, k)).tocsr()
    q.sum_duplicates()
    q.eliminate_zeros()
    sums = np.asarray(q.sum(axis=1)).ravel()
    fid = features.ids
    for i in np.flatnonzero(np.abs(sums - 1.0) > Q_TOLERANCE):
        if sums[i] == 0:
            raise FormatError(f"{matches_path}: feature {fid[i]} has no candidate metabolites")
        raise FormatError(f"{matches_path}: confidences of feature {fid[i]} sum to {sums[i]:.6g}, not 1")
    scale = np.where(sums == 1.0, 1.0, 1.0 / sums)
    q.data = q.data * np.repeat(scale, np.diff(q.indptr))
    net, n_dup = Network.from_edges_counted(k, edges)
    if n_dup:
        log.warning("%s: dropped %d duplicate edge line(s)", network_path, n_dup)
    return ProblemInput(r, q, net, fid, metabolites.ids)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "NA" if not math.isfinite(x) else f"{float(x):.6g}"
    return str(x)


def write_table(path, header, rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def read_table(path) -> list[dict[str, str]]:
    it = _rows(path)
    try:
        _, header = next(it)
    except StopIteration:
        return []
    return [dict(zip(header, f)) for _, f in it]


def write_inputs(inp: ProblemInput, stats_path, matches_path, network_path) -> None:
    """Inverse of :func:`load_inputs`; statistics and confidences keep full precision."""
    Path(stats_path).parent.mkdir(parents=True, exist_ok=True)
    with open(stats_path, "w", encoding="utf-8") as fh:
        fh.write("feature_id\tstatistic\n")
        for fid, v in zip(inp.feature_ids, inp.feature_stats):
            fh.write(f"{fid}\t{float(v)!r}\n")
    q = inp.match_confidence
    with open(matches_path, "w", encoding="utf-8") as fh:
        fh.write("feature_id\tmetabolite_id\tq\n")
        for i, fid in enumerate(inp.feature_ids):
            for a in range(q.indptr[i], q.indptr[i + 1]):
                fh.write(f"{fid}\t{inp.metabolite_ids[q.indices[a]]}\t{float(q.data[a])!r}\n")
    mid = inp.metabolite_ids
    with open(network_path, "w", encoding="utf-8") as fh:
        fh.write("# metabolite declarations, then undirected edges\n")
        for m in mid:
            fh.write(f"{m}\n")
        for a, b in inp.network.edges:
            fh.write(f"{mid[a]}\t{mid[b]}\n")


def read_feature_matrix(path):
    """Subjects x features matrix: header ``subject_id<TAB>feature...``, one row per subject."""
    rows = list(_rows(path))
    if not rows:
        raise FormatError(f"{path}: empty feature matrix")
    header = rows[0][1][1:]
    subjects, values = [], []
    for no, f in rows[1:]:
        if len(f) != len(header) + 1:
            raise FormatError(f"{path}:{no}: expected {len(header) + 1} fields, got {len(f)}")
        try:
            values.append([float(x) for x in f[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{no}: {exc}") from None
        subjects.append(f[0])
    return subjects, header, np.asarray(values)


# -- statistic transforms ----------------------------------------------------


def transform_pvalues(pvalues) -> np.ndarray:
    """Upper-tail normal quantile of each p-value, p floored at 1e-15."""
    p = np.asarray(pvalues, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
        raise DomainError("p-values must lie in (0, 1]")
    return norm.isf(np.maximum(p, P_FLOOR))


def transform_rank_normal(values) -> np.ndarray:
    """Normal scores of average ranks, ``Phi^-1((rank - 0.5) / n)``."""
    x = np.asarray(values, dtype=float)
    if x.size < 2 or not np.all(np.isfinite(x)):
        raise DomainError("need at least two finite values")
    if np.all(x == x[0]):
        log.warning("all statistics are equal; rank-normal transform returns zeros")
        return np.zeros_like(x)
    return norm.ppf((rankdata(x) - 0.5) / x.size)


# -- configuration -----------------------------------------------------------


def _coerce(field_type: str, raw: str):
    t = field_type.replace(" ", "")
    if t == "int":
        return int(raw)
    if t == "float":
        return float(raw)
    if t == "bool":
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    # tuples of floats (mu, w)
    return tuple(float(v) for v in raw.replace(",", " ").split())


def parse_overrides(pairs) -> dict:
    """Turn ``key=value`` strings into typed Hyperparameters overrides."""
    types = {f.name: f.type if isinstance(f.type, str) else f.type.__name__ for f in fields(Hyperparameters)}
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise DomainError(f"override {pair!r} is not key=value")
        key, raw = (s.strip() for s in pair.split("=", 1))
        if key not in types or key == "k":
            raise DomainError(f"unknown hyperparameter {key!r}")
        try:
            out[key] = _coerce(types[key], raw)
        except ValueError as exc:
            raise DomainError(f"bad value for {key}: {exc}") from None
    return out


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                pairs.append(line)
    return parse_overrides(pairs)


def hyperparameters_dict(hp: Hyperparameters) -> dict:
    out = {}
    for f in fields(hp):
        v = getattr(hp, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
