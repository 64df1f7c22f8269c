"""Local-FDR comparators and the accuracy/AUC/FPR/TPR evaluation harness."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import norm, rankdata

from baum.inference import select_fdr
from baum.model import ProblemInput
from baum.simulation import ScenarioTruth


@dataclass(frozen=True)
class MetricReport:
    """Confusion-based metrics over ``n_eval`` items.

    ``auc`` is the rank-sum AUC of the continuous score. ``auc_binary`` is the
    same statistic applied to the 0/1 decisions, i.e. ``(1 + tpr - fpr) / 2``,
    which is how single-operating-point AUCs are usually tabulated.
    """

    acc: float
    auc: float
    fpr: float
    tpr: float
    n_eval: int
    auc_binary: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def rank_auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied scores count one half. NaN if only one class is present."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        return math.nan
    rk = rankdata(s)
    return float((rk[y].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def confusion_report(predicted, truth, scores) -> MetricReport:
    pred = np.asarray(predicted).astype(bool)
    y = np.asarray(truth).astype(bool)
    tp = int(np.sum(pred & y))
    tn = int(np.sum(~pred & ~y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    n = tp + tn + fp + fn
    return MetricReport(
        acc=(tp + tn) / n if n else math.nan,
        auc=rank_auc(scores, y),
        fpr=fp / (fp + tn) if fp + tn else math.nan,
        tpr=tp / (tp + fn) if tp + fn else math.nan,
        n_eval=n,
        auc_binary=rank_auc(pred.astype(float), y),
    )


def evaluate_selection(selected, scores, truth: ScenarioTruth, matched) -> MetricReport:
    """Metabolite-selection metrics restricted to metabolites with at least one candidate feature."""
    m = np.asarray(matched).astype(bool)
    return confusion_report(np.asarray(selected)[m], truth.true_z[m], np.asarray(scores, dtype=float)[m])


def evaluate_matching(assignment, truth: ScenarioTruth, n_candidates, match_prob=None) -> MetricReport:
    """Does each feature land on a metabolite of its true class?

    Positive means assigned to an alternative metabolite. Only features with
    two or more candidates are scored. The continuous score is the posterior
    mass a feature puts on truly alternative metabolites (needs ``match_prob``).
    """
    multi = np.asarray(n_candidates) >= 2
    z = truth.true_z
    pred = z[np.asarray(assignment)] == 1
    y = z[truth.true_match] == 1
    if match_prob is not None:
        lam = sp.csr_array(match_prob)
        score = np.asarray(lam @ z.astype(float)).ravel()
    else:
        score = pred.astype(float)
    return confusion_report(pred[multi], y[multi], score[multi])


# -- local FDR baselines -----------------------------------------------------


def metabolite_statistics(inp: ProblemInput, weights=None):
    """Weighted average of feature statistics per metabolite.

    ``weights`` defaults to equal weight over each feature's candidates.
    Returns ``(t, defined)``; ``t`` is NaN where no feature contributes.
    """
    q = inp.match_confidence
    if weights is None:
        n_c = np.diff(q.indptr)
        w = sp.csr_array((np.repeat(1.0 / n_c, n_c), q.indices, q.indptr), shape=q.shape)
    else:
        w = sp.csr_array(weights, dtype=float)
    mass = np.asarray(w.sum(axis=0)).ravel()
    num = np.asarray(w.T @ inp.feature_stats).ravel()
    defined = mass > 0
    t = np.full(inp.k, np.nan)
    t[defined] = num[defined] / mass[defined]
    return t, defined


@dataclass(frozen=True)
class MixtureFit:
    pi0: float
    mean0: float
    var0: float
    mean1: float
    var1: float
    n_iter: int
    converged: bool


def fit_two_gaussians(t, pi0_init: float = 0.85, max_iter: int = 500, tol: float = 1e-8) -> MixtureFit:
    """EM for a two-component Gaussian mixture; component 0 starts at 0, component 1 at the top-decile mean."""
    t = np.asarray(t, dtype=float)
    top = t[t >= np.quantile(t, 0.9)]
    pi0, m0, m1 = pi0_init, 0.0, float(top.mean())
    v0 = v1 = max(float(t.var()), 1e-6)
    ll_old = -np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        l0 = np.log(pi0) + norm.logpdf(t, m0, math.sqrt(v0))
        l1 = np.log1p(-pi0) + norm.logpdf(t, m1, math.sqrt(v1))
        ll = np.logaddexp(l0, l1)
        r0 = np.exp(l0 - ll)
        r1 = 1.0 - r0
        pi0 = float(np.clip(r0.mean(), 1e-6, 1 - 1e-6))
        m0 = float(r0 @ t / max(r0.sum(), 1e-12))
        m1 = float(r1 @ t / max(r1.sum(), 1e-12))
        v0 = max(float(r0 @ (t - m0) ** 2 / max(r0.sum(), 1e-12)), 1e-6)
        v1 = max(float(r1 @ (t - m1) ** 2 / max(r1.sum(), 1e-12)), 1e-6)
        total = float(ll.sum())
        if abs(total - ll_old) < tol * (1.0 + abs(total)):
            converged = True
            break
        ll_old = total
    if not converged:
        warnings.warn(f"EM did not converge in {max_iter} iterations; using last iterate", RuntimeWarning)
    if m1 < m0:  # keep the null as the lower component
        pi0, m0, v0, m1, v1 = 1.0 - pi0, m1, v1, m0, v0
    return MixtureFit(pi0, m0, v0, m1, v1, it, converged)


def local_fdr(t, fit: MixtureFit) -> np.ndarray:
    l0 = math.log(fit.pi0) + norm.logpdf(t, fit.mean0, math.sqrt(fit.var0))
    l1 = math.log1p(-fit.pi0) + norm.logpdf(t, fit.mean1, math.sqrt(fit.var1))
    return np.exp(l0 - np.logaddexp(l0, l1))


@dataclass(frozen=True)
class BaselineResult:
    statistic: np.ndarray
    lfdr: np.ndarray
    selected: np.ndarray
    evaluable: np.ndarray
    fit: MixtureFit | None


def locfdr_baseline(inp: ProblemInput, weights=None, level: float = 0.2, pi0_init: float = 0.85) -> BaselineResult:
    """Select metabolites by local FDR on averaged feature statistics.

    With ``weights=None`` every candidate of a feature gets equal weight
    (LocFDR); pass the posterior match probabilities for Post-LocFDR.
    Metabolites without contributing features get lfdr 1 and are never selected.
    """
    t, defined = metabolite_statistics(inp, weights)
    lfdr = np.ones(inp.k)
    fit = None
    if defined.sum() >= 2:
        fit = fit_two_gaussians(t[defined], pi0_init=pi0_init)
        lfdr[defined] = local_fdr(t[defined], fit)
    sel = select_fdr(1.0 - lfdr, level).selected & defined
    return BaselineResult(t, lfdr, sel, defined, fit)


def aggregate(rows: list[dict], keys=("scenario", "method"), metrics=("acc", "auc", "auc_binary", "fpr", "tpr")) -> list[dict]:
    """Mean and sample s.d. of each metric per group, in first-seen group order."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for gk, members in groups.items():
        rec = dict(zip(keys, gk))
        rec["n"] = len(members)
        for m in metrics:
            vals = np.array([r[m] for r in members], dtype=float)
            vals = vals[np.isfinite(vals)]
            rec[f"{m}_mean"] = float(vals.mean()) if vals.size else math.nan
            rec[f"{m}_sd"] = float(vals.std(ddof=1)) if vals.size > 1 else math.nan
        out.append(rec)
    return out
