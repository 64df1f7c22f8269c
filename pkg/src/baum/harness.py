"""Seeded simulation replicates comparing BAUM with the local-FDR baselines."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from baum.baselines import evaluate_matching, evaluate_selection, locfdr_baseline
from baum.inference import assign_matches, select_fdr
from baum.sampler import ChainConfig, run_chain
from baum.simulation import ScenarioConfig, build_scenario, default_hyperparameters

METHODS = ("baum", "locfdr", "postlocfdr")


def default_workers() -> int:
    return max(1, int(os.environ.get("BAUM_WORKERS", "1")))


def replicate_seeds(seed: int, n: int) -> list[tuple[int, int]]:
    """Independent (scenario, chain) seed pairs; fixed by ``seed`` alone, not by worker count."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(n):
        a, b = child.generate_state(2, dtype=np.uint64)
        out.append((int(a), int(b)))
    return out


def _realized_fdr(selected, truth_z, matched) -> float:
    s = np.asarray(selected) & np.asarray(matched)
    n = int(s.sum())
    return float(np.sum(s & (truth_z == 0)) / n) if n else 0.0


def run_replicate(cfg: ScenarioConfig, rep: int, seeds: tuple[int, int], methods=METHODS,
                  n_burnin: int = 1000, n_iter: int = 4000, hp_overrides: dict | None = None,
                  hp_name: str | None = None):
    """One replicate; returns ``(selection_rows, matching_rows)`` as lists of dicts."""
    cfg = replace(cfg, rng_seed=seeds[0])
    inp, truth = build_scenario(cfg)
    name = hp_name or cfg.name
    hp = default_hyperparameters(name, k=inp.k)
    if hp_overrides:
        hp = hp.with_overrides(**hp_overrides)
    matched = inp.matched_metabolites()
    sel_rows, match_rows = [], []
    summary = None
    if "baum" in methods or "postlocfdr" in methods:
        summary, _ = run_chain(inp, hp, ChainConfig(n_burnin, n_iter, rng_seed=seeds[1]))

    def row(method, selected, scores):
        rep_ = evaluate_selection(selected, scores, truth, matched).as_dict()
        rep_.update(scenario=cfg.name, method=method, replicate=rep,
                    fdr=_realized_fdr(selected, truth.true_z, matched),
                    n_selected=int(np.sum(np.asarray(selected) & matched)))
        return rep_

    if "baum" in methods:
        sel = select_fdr(summary.inclusion_prob, hp.alpha_fdr).selected
        sel_rows.append(row("baum", sel, summary.inclusion_prob))
        n_cand = np.diff(inp.match_confidence.indptr)
        m = evaluate_matching(assign_matches(summary.match_prob), truth, n_cand, summary.match_prob).as_dict()
        m.update(scenario=cfg.name, method="baum", replicate=rep)
        match_rows.append(m)
    if "locfdr" in methods:
        res = locfdr_baseline(inp, None, level=hp.alpha_fdr, pi0_init=hp.pi0)
        sel_rows.append(row("locfdr", res.selected, -res.lfdr))
    if "postlocfdr" in methods:
        res = locfdr_baseline(inp, summary.match_prob, level=hp.alpha_fdr, pi0_init=hp.pi0)
        sel_rows.append(row("postlocfdr", res.selected, -res.lfdr))
    return sel_rows, match_rows


def _run_one(args):
    return run_replicate(*args[:3], **args[3])


def run_benchmark(cfg: ScenarioConfig, replicates: int, seed: int = 0, methods=METHODS,
                  workers: int | None = None, **kw):
    """All replicates, in replicate order regardless of ``workers``."""
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    seeds = replicate_seeds(seed, replicates)
    jobs = [(cfg, r, seeds[r], dict(methods=tuple(methods), **kw)) for r in range(replicates)]
    workers = workers or default_workers()
    if workers > 1 and replicates > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    sel_rows = [r for s, _ in results for r in s]
    match_rows = [r for _, m in results for r in m]
    return sel_rows, match_rows
