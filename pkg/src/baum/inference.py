"""Decision rules on posterior summaries: Bayesian FDR selection, match assignment, abundance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from baum.model import DomainError


@dataclass(frozen=True)
class SelectionResult:
    selected: np.ndarray
    threshold: float
    xi: int
    alpha: float

    @property
    def n_selected(self) -> int:
        return int(self.selected.sum())


def select_fdr(u, alpha: float = 0.2) -> SelectionResult:
    """Largest descending-``u`` prefix whose mean posterior null probability is at most ``alpha``.

    Every metabolite with ``u >= threshold`` is selected, so ties at the
    threshold are all in. ``xi == 0`` and ``threshold == 1`` with an empty
    selection when no prefix qualifies.
    """
    u = np.asarray(u, dtype=float)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if u.size == 0:
        return SelectionResult(np.zeros(0, dtype=bool), 1.0, 0, alpha)
    if np.any((u < 0) | (u > 1)) or not np.all(np.isfinite(u)):
        raise DomainError("inclusion probabilities must lie in [0, 1]")
    desc = -np.sort(-u)
    prefix_fdr = np.cumsum(1.0 - desc) / np.arange(1, u.size + 1)
    ok = np.flatnonzero(prefix_fdr <= alpha)
    if ok.size == 0:
        return SelectionResult(np.zeros(u.size, dtype=bool), 1.0, 0, alpha)
    xi = int(ok[-1]) + 1
    phi = float(desc[xi - 1])
    return SelectionResult(u >= phi, phi, xi, alpha)


def assign_matches(match_prob) -> np.ndarray:
    """Most probable metabolite per feature; ties go to the smaller metabolite index."""
    q = sp.csr_array(match_prob)
    q.sort_indices()
    p = q.shape[0]
    lengths = np.diff(q.indptr)
    if np.any(lengths == 0):
        raise DomainError(f"feature {int(np.flatnonzero(lengths == 0)[0])} has no candidates")
    rows = np.repeat(np.arange(p), lengths)
    # sort by row, then value descending, then column ascending; take the first per row
    order = np.lexsort((q.indices, -q.data, rows))
    return q.indices[order[q.indptr[:-1]]].astype(np.int64)


@dataclass(frozen=True)
class AbundanceEstimate:
    values: np.ndarray  # subjects x metabolites, NaN where undefined
    weights: sp.csc_array  # features x metabolites, columns sum to 1 where defined
    defined: np.ndarray


def estimate_abundance(match_prob, feature_matrix) -> AbundanceEstimate:
    """Per-subject metabolite abundance as a convex combination of feature values.

    Column ``j`` of ``match_prob`` is rescaled to sum to one and used as the
    feature weights; metabolites with no posterior mass come out as NaN.
    """
    lam = sp.csc_array(match_prob, dtype=float)
    x = np.asarray(feature_matrix, dtype=float)
    if x.ndim != 2 or x.shape[1] != lam.shape[0]:
        raise DomainError(f"feature matrix has shape {x.shape}, expected (subjects, {lam.shape[0]})")
    mass = np.asarray(lam.sum(axis=0)).ravel()
    defined = mass > 0
    scale = np.zeros_like(mass)
    scale[defined] = 1.0 / mass[defined]
    weights = sp.csc_array(lam @ sp.diags_array(scale))
    values = np.asarray(x @ weights)
    values[:, ~defined] = np.nan
    return AbundanceEstimate(values, weights, defined)
