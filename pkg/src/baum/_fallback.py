"""Pure numpy implementations of the sampler kernels.

Same signatures and arithmetic as the compiled ``_core`` module; used when the
extension is not built or ``BAUM_PURE_PYTHON=1``.
"""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


def sample_rows(logw, u):
    """Draw one column per row of ``logw`` with probability proportional to ``exp(logw)``."""
    logw = np.asarray(logw, dtype=np.float64)
    n, g = logw.shape
    if g == 1:
        return np.zeros(n, dtype=np.int64)
    w = np.exp(logw - logw.max(axis=1, keepdims=True))
    cum = np.cumsum(w, axis=1)
    target = u * cum[:, -1]
    idx = (cum <= target[:, None]).sum(axis=1)
    return np.minimum(idx, g - 1).astype(np.int64)


def sample_lambda(indptr, indices, logq, r, eta_star, inv_two_sigma2, u):
    """Categorical draw per CSR row; returns the chosen position into ``indices``."""
    p = len(indptr) - 1
    lengths = np.diff(indptr)
    rows = np.repeat(np.arange(p), lengths)
    slot = np.arange(len(indices)) - np.repeat(indptr[:-1], lengths)
    d = r[rows] - eta_star[indices]
    logw = logq - d * d * inv_two_sigma2
    pad = np.full((p, int(lengths.max()) if p else 1), -np.inf)
    pad[rows, slot] = logw
    return indptr[:-1] + sample_rows(pad, u)


def bond_labels(k, eu, ev, bonded):
    """Connected components over bonded edges, labelled by first appearance in node order."""
    sel = np.asarray(bonded, dtype=bool)
    a = np.asarray(eu)[sel]
    b = np.asarray(ev)[sel]
    g = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(k, k))
    _, labels = connected_components(g, directed=False)
    # canonical relabelling: order of smallest member node
    _, first = np.unique(labels, return_index=True)
    remap = np.empty(len(first), dtype=np.int64)
    remap[labels[np.sort(first)]] = np.arange(len(first))
    return remap[labels], len(first)
