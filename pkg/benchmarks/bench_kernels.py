"""Compare the compiled kernels with the numpy fallback.

Times each kernel on GN1/RN2-sized inputs, checks that both backends return
identical results, then times whole sweeps with each backend swapped in.

    python benchmarks/bench_kernels.py [--repeat 200] [--sweeps 300]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from baum import _fallback, _kernels
from baum.network import generate_barabasi_albert
from baum.sampler import ChainConfig, run_chain
from baum.simulation import build_scenario, default_hyperparameters, scenario_config

try:
    from baum import _core
except ImportError:
    _core = None


def kernel_inputs(seed: int = 0):
    rng = np.random.default_rng(seed)
    inp, _ = build_scenario(scenario_config("GN1", rng_seed=seed))
    q = inp.match_confidence
    lam_args = (q.indptr.astype(np.int64), q.indices.astype(np.int64), np.log(q.data), inp.feature_stats,
                rng.normal(0.0, 5.0, inp.k), 0.5, rng.random(inp.p))
    rows_args = (rng.normal(size=(1093, 21)), rng.random(1093))
    net = generate_barabasi_albert(1000, 1, rng_seed=seed)
    bond_args = (net.k, net.tails, net.heads, (rng.random(net.n_edges) < 0.3).astype(np.uint8))
    return {"sample_lambda": lam_args, "sample_rows": rows_args, "bond_labels": bond_args}


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return bool(np.array_equal(a, b))


def time_kernels(repeat: int) -> None:
    print(f"{'kernel':15s} {'cython us':>10s} {'python us':>10s} {'speedup':>8s} agree")
    for name, args in kernel_inputs().items():
        py = getattr(_fallback, name)
        t_py = min(timeit.repeat(lambda: py(*args), number=repeat, repeat=3)) / repeat * 1e6
        if _core is None:
            print(f"{name:15s} {'n/a':>10s} {t_py:10.1f}")
            continue
        cy = getattr(_core, name)
        t_cy = min(timeit.repeat(lambda: cy(*args), number=repeat, repeat=3)) / repeat * 1e6
        print(f"{name:15s} {t_cy:10.1f} {t_py:10.1f} {t_py / t_cy:8.1f} {_same(cy(*args), py(*args))}")


def _use(module) -> None:
    for name in ("sample_lambda", "sample_rows", "bond_labels"):
        setattr(_kernels, name, getattr(module, name))


def time_sweeps(sweeps: int) -> None:
    for scenario in ("GN1", "RN2"):
        cfg = scenario_config("GN1", rng_seed=1) if scenario == "GN1" else scenario_config(
            "RN2", rng_seed=1, network_source="generate", unmatched_frac=0.13)
        inp, _ = build_scenario(cfg)
        hp = default_hyperparameters(scenario, k=inp.k)
        results = {}
        for label, module in (("cython", _core), ("python", _fallback)):
            if module is None:
                continue
            _use(module)
            start = timeit.default_timer()
            summary, _ = run_chain(inp, hp, ChainConfig(0, sweeps, rng_seed=3))
            results[label] = (timeit.default_timer() - start) / sweeps * 1e3, summary.inclusion_prob
        line = ", ".join(f"{k} {v[0]:.2f} ms/sweep" for k, v in results.items())
        if len(results) == 2:
            line += f", identical chains: {np.array_equal(results['cython'][1], results['python'][1])}"
        print(f"{scenario}: {line}")
    _use(_core or _fallback)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--sweeps", type=int, default=300)
    args = ap.parse_args()
    print(f"active backend: {_kernels.BACKEND}")
    time_kernels(args.repeat)
    time_sweeps(args.sweeps)


if __name__ == "__main__":
    main()
