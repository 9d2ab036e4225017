"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends get identical inputs; the script also checks they agree.
"""

import argparse
import time

import numpy as np

from tcscale import kernels, sim
from tcscale.hardware import rtx4090_profile, fit_throughput, throughput_at
from tcscale.ingest import load_reference_dataset


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(seed):
    rng = np.random.default_rng(seed)
    lx = np.log(np.geomspace(5, 1440, 8))
    ly = 0.56 * lx + 2.8 + rng.normal(0, 0.1, 8)
    idx = rng.integers(0, 8, size=(10_000, 8), dtype=np.int64)
    idx[:, 0] = 0
    idx[:, 1] = 7  # keep every resample non-degenerate

    ref = load_reference_dataset()
    prof = fit_throughput(rtx4090_profile())
    args = sim.default_params().kernel_args()
    sizes = np.geomspace(20, 3000, 400)
    tps = np.array([throughput_at(prof, n, "fit") for n in sizes])
    budgets = np.geomspace(5, 1440, 200)

    recs = ref.grid.records
    pm = np.array([r.params_m for r in recs])
    ctps = np.array([throughput_at(prof, p, "fit") for p in pm])
    cb = np.array([r.budget_min for r in recs])
    target = np.array([r.val_bpb for r in recs])
    return {
        "bootstrap_slopes (10k x 8)": lambda k: k.bootstrap_slopes(lx, ly, idx),
        "sim_grid (400 x 200)": lambda k: k.sim_grid(sizes, tps, budgets, *args),
        "sim_rmse (56 cells) x 2000": lambda k: [k.sim_rmse(pm, ctps, cb, target, *args) for _ in range(2000)],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = {m.BACKEND: m for m in kernels.available_backends()}
    if "cython" not in backends:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases(args.seed).items():
        times, outs = [], []
        for mod in backends.values():
            t, out = best_of(lambda: fn(mod), args.repeat)
            times.append(t)
            outs.append(np.asarray(out, dtype=float))
        if len(outs) > 1 and not np.allclose(outs[0], outs[1], rtol=1e-12, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        line = f"{name:<30}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[1] / times[0]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
