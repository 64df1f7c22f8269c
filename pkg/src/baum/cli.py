"""Command-line interface: ``baum <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import platform
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import scipy
import scipy.sparse as sp

from baum import __version__, _kernels
from baum import io as bio
from baum.baselines import MetricReport, aggregate, evaluate_matching, evaluate_selection
from baum.enrichment import extract_subnetworks, rank_pathways, read_pathways, write_dot
from baum.harness import METHODS, default_workers, run_benchmark
from baum.inference import assign_matches, estimate_abundance, select_fdr
from baum.model import DomainError, Hyperparameters
from baum.network import Network
from baum.sampler import ChainConfig, run_chain
from baum.simulation import (
    SCENARIOS,
    ScenarioTruth,
    build_scenario,
    default_hyperparameters,
    scenario_config,
    synthetic_rn_config,
)

log = logging.getLogger("baum")


class UsageError(Exception):
    pass


def _manifest(args, out: Path, started: float, extra=None) -> None:
    echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    bio.write_json(
        out / "manifest.json",
        {
            "command": args.command,
            "arguments": echo,
            "seed": getattr(args, "seed", None),
            "versions": {
                "baum": __version__,
                "kernel_backend": _kernels.BACKEND,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "wall_time_seconds": time.time() - started,
            **(extra or {}),
        },
    )


def _need(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file: {p}")
    return p


def _hyperparameters(args, k: int) -> Hyperparameters:
    hp = default_hyperparameters(args.scenario, k=k) if args.scenario else Hyperparameters(k=k)
    overrides = {}
    if args.config:
        overrides.update(bio.read_config(_need(args.config)))
    overrides.update(bio.parse_overrides(args.set or []))
    if args.burnin is not None:
        overrides["n_burnin"] = args.burnin
    if args.iter is not None:
        overrides["n_iter"] = args.iter
    return replace(hp, **overrides) if overrides else hp


# -- simulate ------------------------------------------------------------------


def _scenario_from_args(args, seed):
    over = {}
    for key in ("p", "k", "unmatched_frac", "sigma_sim", "m_attach"):
        v = getattr(args, key, None)
        if v is not None:
            over[key] = v
    if args.network or args.matches:
        over.update(network_source="load", network_path=args.network, matches_path=args.matches)
        return scenario_config(args.scenario, seed, **over)
    if args.scenario.startswith("RN"):
        if not args.synthetic_rn:
            return None
        return synthetic_rn_config(args.scenario, seed, **over)
    return scenario_config(args.scenario, seed, **over)


def write_truth(out: Path, inp, truth: ScenarioTruth) -> None:
    bio.write_table(
        out / "truth.tsv",
        ["metabolite_id", "z", "score", "matched"],
        zip(inp.metabolite_ids, truth.true_z, truth.true_scores, inp.matched_metabolites()),
    )
    bio.write_table(
        out / "truth_matches.tsv",
        ["feature_id", "metabolite_id"],
        ((inp.feature_ids[i], inp.metabolite_ids[j]) for i, j in enumerate(truth.true_match)),
    )


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = _scenario_from_args(args, args.seed)
    if cfg is None:
        print(f"{args.scenario}: network/matching files not supplied; skipped (use --synthetic-rn for a stand-in)")
        return 0
    inp, truth = build_scenario(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bio.write_inputs(inp, out / "stats.tsv", out / "matches.tsv", out / "network.tsv")
    write_truth(out, inp, truth)
    _manifest(args, out, started, {"scenario": {k: v for k, v in asdict(cfg).items()}})
    print(f"wrote scenario {cfg.name} (p={inp.p}, k={inp.k}) to {out}")
    return 0


# -- fit -------------------------------------------------------------------------


def cmd_fit(args) -> int:
    started = time.time()
    inp = bio.load_inputs(_need(args.stats), _need(args.matches), _need(args.network))
    hp = _hyperparameters(args, inp.k)
    cfg = ChainConfig(hp.n_burnin, hp.n_iter, rng_seed=args.seed, thinning=args.thin)
    summary, traces = run_chain(inp, hp, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    u = summary.inclusion_prob
    sel = select_fdr(u, hp.alpha_fdr)
    rank = np.empty(len(u), dtype=np.int64)
    rank[np.lexsort((np.arange(len(u)), -u))] = np.arange(1, len(u) + 1)
    matched = inp.matched_metabolites()
    bio.write_table(
        out / "selection.tsv",
        ["metabolite_id", "u", "selected", "rank", "unmatched"],
        zip(inp.metabolite_ids, u, sel.selected, rank, ~matched),
    )
    q = summary.match_prob
    assigned = assign_matches(q)
    rows = []
    for i, fid in enumerate(inp.feature_ids):
        for a in range(q.indptr[i], q.indptr[i + 1]):
            j = q.indices[a]
            rows.append((fid, inp.metabolite_ids[j], q.data[a], j == assigned[i]))
    bio.write_table(out / "matching.tsv", ["feature_id", "metabolite_id", "lambda_hat", "assigned"], rows)
    bio.write_table(
        out / "trace.tsv",
        ["iteration", "sigma2", "gamma0", "eta0", "n_alt", "log_joint"],
        ((t.iteration, t.sigma2, t.gamma0, t.eta0, t.n_alt, t.log_joint) for t in traces),
    )
    bio.write_json(
        out / "summary.json",
        {
            "scalar_means": summary.scalar_means,
            "scalar_intervals_95": summary.scalar_intervals,
            "n_kept": summary.n_kept,
            "fdr_threshold": sel.threshold,
            "xi": sel.xi,
            "alpha": sel.alpha,
            "n_selected": sel.n_selected,
        },
    )
    _manifest(args, out, started, {"hyperparameters": bio.hyperparameters_dict(hp)})
    print(f"selected {sel.n_selected} of {inp.k} metabolites at FDR {hp.alpha_fdr}; results in {out}")
    return 0


# -- evaluate ----------------------------------------------------------------------


def _metric_row(label, rep: MetricReport):
    d = rep.as_dict()
    return (label, d["acc"], d["auc"], d["auc_binary"], d["fpr"], d["tpr"], d["n_eval"])


def cmd_evaluate(args) -> int:
    started = time.time()
    fit_dir, truth_dir = Path(args.fit), Path(args.truth)
    truth_rows = bio.read_table(_need(truth_dir / "truth.tsv"))
    mid = [r["metabolite_id"] for r in truth_rows]
    index = {m: j for j, m in enumerate(mid)}
    z = np.array([int(r["z"]) for r in truth_rows])
    matched = np.array([bool(int(r["matched"])) for r in truth_rows])
    tm_rows = bio.read_table(_need(truth_dir / "truth_matches.tsv"))
    fid = [r["feature_id"] for r in tm_rows]
    findex = {f: i for i, f in enumerate(fid)}
    true_match = np.array([index[r["metabolite_id"]] for r in tm_rows])
    truth = ScenarioTruth(z, np.zeros(len(z)), true_match)

    sel_rows = bio.read_table(_need(fit_dir / "selection.tsv"))
    u = np.zeros(len(z))
    selected = np.zeros(len(z), dtype=bool)
    for r in sel_rows:
        j = index[r["metabolite_id"]]
        u[j] = float(r["u"])
        selected[j] = bool(int(r["selected"]))
    sel_report = evaluate_selection(selected, u, truth, matched)

    assigned = np.zeros(len(fid), dtype=np.int64)
    n_cand = np.zeros(len(fid), dtype=np.int64)
    lam_rows, lam_cols, lam_vals = [], [], []
    for r in bio.read_table(_need(fit_dir / "matching.tsv")):
        i, j = findex[r["feature_id"]], index[r["metabolite_id"]]
        n_cand[i] += 1
        lam_rows.append(i)
        lam_cols.append(j)
        lam_vals.append(float(r["lambda_hat"]))
        if int(r["assigned"]):
            assigned[i] = j
    lam = sp.csr_array((lam_vals, (lam_rows, lam_cols)), shape=(len(fid), len(z)))
    match_report = evaluate_matching(assigned, truth, n_cand, lam)
    out = Path(args.out)
    bio.write_table(
        out / "metrics.tsv",
        ["task", "acc", "auc", "auc_binary", "fpr", "tpr", "n_eval"],
        [_metric_row("selection", sel_report), _metric_row("matching", match_report)],
    )
    _manifest(args, out, started)
    print(f"selection ACC {sel_report.acc:.4f}, matching ACC {match_report.acc:.4f}; written to {out}")
    return 0


# -- benchmark -----------------------------------------------------------------------

SEL_COLS = ["scenario", "method", "replicate", "acc", "auc", "auc_binary", "fpr", "tpr", "fdr", "n_selected", "n_eval"]
MATCH_COLS = ["scenario", "method", "replicate", "acc", "auc", "auc_binary", "fpr", "tpr", "n_eval"]
AGG_METRICS = ("acc", "auc", "auc_binary", "fpr", "tpr")


def _agg_rows(rows, metrics):
    agg = aggregate(rows, metrics=metrics)
    header = ["scenario", "method", "n"] + [f"{m}_{s}" for m in metrics for s in ("mean", "sd")]
    return header, [[a[h] for h in header] for a in agg]


def cmd_benchmark(args) -> int:
    started = time.time()
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = set(methods) - set(METHODS)
    if bad:
        raise UsageError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
    cfg = _scenario_from_args(args, args.seed)
    if cfg is None:
        print(f"{args.scenario}: network/matching files not supplied; skipped (use --synthetic-rn for a stand-in)")
        return 0
    sel_rows, match_rows = run_benchmark(
        cfg, args.replicates, seed=args.seed, methods=methods, workers=args.workers,
        n_burnin=args.burnin if args.burnin is not None else 1000,
        n_iter=args.iter if args.iter is not None else 4000,
        hp_overrides=bio.parse_overrides(args.set or []),
    )
    out = Path(args.out)
    bio.write_table(out / "replicates.tsv", SEL_COLS, ([r[c] for c in SEL_COLS] for r in sel_rows))
    header, rows = _agg_rows(sel_rows, AGG_METRICS + ("fdr",))
    bio.write_table(out / "aggregate.tsv", header, rows)
    if match_rows:
        bio.write_table(out / "matching_replicates.tsv", MATCH_COLS, ([r[c] for c in MATCH_COLS] for r in match_rows))
        header, rows = _agg_rows(match_rows, AGG_METRICS)
        bio.write_table(out / "matching_aggregate.tsv", header, rows)
    _manifest(args, out, started, {"scenario": asdict(cfg)})
    for a in aggregate(sel_rows, metrics=AGG_METRICS):
        print(f"{a['scenario']}\t{a['method']}\tACC {a['acc_mean']:.3f} ({a['acc_sd']:.3f})\tAUC {a['auc_binary_mean']:.3f}")
    return 0


# -- enrich ----------------------------------------------------------------------------


def cmd_enrich(args) -> int:
    started = time.time()
    rows = bio.read_table(_need(args.selection))
    mids = [r["metabolite_id"] for r in rows]
    selected = [r["metabolite_id"] for r in rows if int(r["selected"])]
    metabolites, edges = bio.read_network(_need(args.network))
    # selection order pins the universe; any network-only metabolites follow
    universe = list(dict.fromkeys(mids + list(metabolites.ids)))
    index = {m: j for j, m in enumerate(universe)}
    ids = metabolites.ids
    net = Network.from_edges(len(universe), [(index[ids[a]], index[ids[b]]) for a, b in edges])
    db = read_pathways(_need(args.pathways))
    hits = rank_pathways(db, selected, universe, min_overlap=args.min_overlap, max_p=args.max_p)
    out = Path(args.out)
    bio.write_table(out / "pathways.tsv", ["pathway", "overlap", "size", "p"], ((h.pathway, h.overlap, h.size, h.p) for h in hits))
    feature_ids: list[str] = []
    assignment = None
    if args.matching:
        fidx: dict[str, int] = {}
        assign: dict[int, int] = {}
        for r in bio.read_table(_need(args.matching)):
            i = fidx.setdefault(r["feature_id"], len(fidx))
            if int(r["assigned"]):
                assign[i] = index[r["metabolite_id"]]
        feature_ids = list(fidx)
        assignment = np.array([assign.get(i, -1) for i in range(len(fidx))])
    report = extract_subnetworks(net, [index[m] for m in selected], assignment, max_path=args.max_path,
                                 db=db, metabolite_ids=universe)
    write_dot(out / "subnetworks.dot", report, universe, feature_ids, assignment)
    comp_rows = []
    for c, comp in enumerate(report.components):
        top = comp.pathways[0] if comp.pathways else None
        comp_rows.append((
            c,
            ",".join(universe[j] for j in comp.selected),
            ",".join(universe[j] for j in comp.connectors),
            ",".join(feature_ids[i] for i in comp.features),
            top.pathway if top else "",
            top.p if top else float("nan"),
        ))
    bio.write_table(out / "components.tsv", ["component", "selected", "connectors", "features", "top_pathway", "top_p"], comp_rows)
    _manifest(args, out, started)
    print(f"{len(hits)} pathways pass filters; {len(report.components)} subnetwork components; written to {out}")
    return 0


# -- abundance ---------------------------------------------------------------------------


def cmd_abundance(args) -> int:
    started = time.time()
    subjects, features, x = bio.read_feature_matrix(_need(args.features))
    fidx = {f: i for i, f in enumerate(features)}
    midx: dict[str, int] = {}
    rows, cols, vals = [], [], []
    for r in bio.read_table(_need(args.matching)):
        if r["feature_id"] not in fidx:
            raise UsageError(f"feature {r['feature_id']} missing from the feature matrix")
        rows.append(fidx[r["feature_id"]])
        cols.append(midx.setdefault(r["metabolite_id"], len(midx)))
        vals.append(float(r["lambda_hat"]))
    lam = sp.csr_array((vals, (rows, cols)), shape=(len(features), len(midx)))
    est = estimate_abundance(lam, x)
    mids = list(midx)
    out = Path(args.out)
    bio.write_table(out / "abundance.tsv", ["subject_id", *mids], ([s, *est.values[n]] for n, s in enumerate(subjects)))
    _manifest(args, out, started)
    print(f"estimated {int(est.defined.sum())} metabolites for {len(subjects)} subjects; written to {out}")
    return 0


# -- transform -----------------------------------------------------------------------------


def cmd_transform(args) -> int:
    started = time.time()
    ids, vals = bio.read_stats(_need(args.input))
    r = bio.transform_pvalues(vals) if args.mode == "pvalue" else bio.transform_rank_normal(vals)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("feature_id\tstatistic\n")
        for i, v in zip(ids, r):
            fh.write(f"{i}\t{float(v)!r}\n")
    _manifest(args, out.parent, started)
    print(f"transformed {len(ids)} values ({args.mode}) into {out}")
    return 0


def cmd_replay(args) -> int:
    """Rerun the command recorded in a manifest, optionally into a new directory."""
    import json

    with open(_need(args.manifest), encoding="utf-8") as fh:
        man = json.load(fh)
    recorded = dict(man["arguments"])
    if recorded.get("command") == "replay":
        raise UsageError("refusing to replay a replay manifest")
    if args.out:
        recorded["out"] = args.out
    func = _COMMANDS.get(recorded.get("command"))
    if func is None:
        raise UsageError(f"manifest names unknown command {recorded.get('command')!r}")
    return func(argparse.Namespace(**recorded))


# -- parser --------------------------------------------------------------------------------


def _add_chain(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burnin", type=int, default=None, help="burn-in sweeps (default 1000)")
    p.add_argument("--iter", type=int, default=None, help="kept sweeps (default 4000)")


def _add_scenario(p):
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--unmatched-frac", dest="unmatched_frac", type=float)
    p.add_argument("--sigma-sim", dest="sigma_sim", type=float)
    p.add_argument("--m-attach", dest="m_attach", type=int)
    p.add_argument("--network", help="network TSV for RN scenarios")
    p.add_argument("--matches", help="candidate matches TSV for RN scenarios")
    p.add_argument("--synthetic-rn", action="store_true", help="generated stand-in when RN files are absent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="baum", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated scenario and its truth")
    _add_scenario(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the sampler and write posterior tables")
    p.add_argument("--stats", required=True)
    p.add_argument("--matches", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--scenario", choices=SCENARIOS, help="start from a scenario's hyperparameters")
    p.add_argument("--config", help="key = value hyperparameter file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="hyperparameter override")
    p.add_argument("--thin", type=int, default=1)
    _add_chain(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score a fit against simulation truth")
    p.add_argument("--fit", required=True, help="output directory of 'fit'")
    p.add_argument("--truth", required=True, help="output directory of 'simulate'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="replicated comparison against local-FDR baselines")
    _add_scenario(p)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    _add_chain(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("enrich", help="pathway over-representation and subnetworks")
    p.add_argument("--selection", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--pathways", required=True)
    p.add_argument("--matching")
    p.add_argument("--min-overlap", type=int, default=3)
    p.add_argument("--max-p", type=float, default=0.05)
    p.add_argument("--max-path", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("abundance", help="metabolite abundance from matching posteriors")
    p.add_argument("--matching", required=True)
    p.add_argument("--features", required=True, help="subjects x features TSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_abundance)

    p = sub.add_parser("transform", help="turn p-values or raw statistics into normal scores")
    p.add_argument("--mode", choices=("pvalue", "rank"), required=True)
    p.add_argument("--input", required=True, help="'id<TAB>value' file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)
    p = sub.add_parser("replay", help="rerun a command from its manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out", help="output location (default: the recorded one)")
    p.set_defaults(func=cmd_replay)
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
    "enrich": cmd_enrich,
    "abundance": cmd_abundance,
    "transform": cmd_transform,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DomainError, bio.FormatError, FileNotFoundError, ValueError) as exc:
        print(f"baum {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
