"""Compiled kernels vs the numpy fallback.

Two levels: the individual kernels on a 512x512 layer at DQN batch size, and a
full DQN gradient step on the 6-512-512-3 network. The step timings run in a
subprocess per backend because the backend is fixed at import.

    python benchmarks/bench_kernels.py [--density 0.084] [--repeat 50]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def best_ms(fn, repeat):
    return 1e3 * min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(density, batch, repeat):
    from sparsedrl import _pykernels
    from sparsedrl.numerics import _SparseIndex

    try:
        from sparsedrl import _kernels
    except ImportError:
        print("compiled extension not built; only the fallback is timed")
        _kernels = None

    rng = np.random.default_rng(0)
    mask = rng.random((512, 512)) < density
    idx = _SparseIndex(mask)
    w = rng.standard_normal((512, 512)) * mask
    xT, gT = rng.standard_normal((512, batch)), rng.standard_normal((512, batch))
    out = np.empty((512, batch))
    col_vals, row_vals = w.ravel()[idx.col_flat], w.ravel()[idx.flat]
    grad = np.empty(idx.flat.size)
    n = 512 * 512 + 512
    p, g, m, v = rng.standard_normal(n), rng.standard_normal(n), np.zeros(n), np.zeros(n)
    active = np.sort(rng.choice(n, int(density * n), replace=False)).astype(np.int64)
    hp = (0.9, 0.999, 1e-8, 1e-3, 0.1, 0.001, 1 - 1e-9)

    def cases(mod):
        return {
            "forward spmm": lambda: mod.spmm_segments(xT, col_vals, idx.col_ptr, idx.col_rows, out),
            "input-grad spmm": lambda: mod.spmm_segments(gT, row_vals, idx.row_ptr, idx.cols, out),
            "masked outer (sddmm)": lambda: mod.masked_outer(xT, gT, idx.rows, idx.cols, grad),
            "adam, active subset": lambda: mod.adam_update(p, g, m, v, active, *hp),
        }

    print(f"kernels: 512x512 layer, density {density:.3f} ({mask.sum()} active), batch {batch}, best of {repeat}")
    print(f"{'kernel':24s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    py = cases(_pykernels)
    cc = cases(_kernels) if _kernels is not None else {}
    for name, fn in py.items():
        t_py = best_ms(fn, repeat)
        if name in cc:
            t_cc = best_ms(cc[name], repeat)
            print(f"{name:24s} {t_py:10.3f} {t_cc:12.3f} {t_py / t_cc:7.1f}x")
        else:
            print(f"{name:24s} {t_py:10.3f} {'-':>12s}")
    t_dense = best_ms(lambda: np.matmul(w.T, xT, out=out), repeat)
    print(f"{'dense BLAS matmul':24s} {t_dense:10.3f}  (reference)")


def step_timing(sparsity, repeat):
    """Milliseconds per DQN gradient step with the backend chosen by the environment."""
    from sparsedrl.agents import Batch
    from sparsedrl.harness.build import build_agent
    from sparsedrl.harness.config import ExperimentConfig, resolve
    from sparsedrl.kernels import BACKEND

    if sparsity > 0:
        cfg = ExperimentConfig(agent="dqn", env="acrobot", regime="static", sparsity=sparsity)
    else:
        cfg = ExperimentConfig(agent="dqn", env="acrobot", regime="dense")
    agent = build_agent(resolve(cfg))
    rng = np.random.default_rng(0)
    b = 128
    batch = Batch(rng.standard_normal((b, 6)), rng.integers(0, 3, b), rng.standard_normal(b),
                  rng.standard_normal((b, 6)), np.zeros(b))
    agent.train_step(batch)
    return BACKEND, best_ms(lambda: agent.train_step(batch), repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--density", type=float, default=0.084, help="middle-layer density (ERK at s=0.9 is 0.084)")
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--step-only", type=float, default=None, help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.step_only is not None:
        print(json.dumps(step_timing(args.step_only, args.repeat)))
        return

    kernel_table(args.density, args.batch, args.repeat)
    print()
    print(f"DQN gradient step, 6-512-512-3, batch 128, best of {args.repeat}")
    print(f"{'network':16s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for s in (0.0, 0.9, 0.95):
        times = {}
        for backend in ("python", "compiled"):
            env = dict(os.environ, SPARSEDRL_KERNELS=backend)
            res = subprocess.run([sys.executable, __file__, "--step-only", str(s), "--repeat", str(args.repeat)],
                                 env=env, capture_output=True, text=True, check=True)
            got, ms = json.loads(res.stdout)
            times[got] = ms
        label = "dense" if s == 0 else f"ERK s={s}"
        t_py, t_cc = times.get("python"), times.get("compiled")
        if t_cc is None:
            print(f"{label:16s} {t_py:10.3f} {'-':>12s}")
        else:
            print(f"{label:16s} {t_py:10.3f} {t_cc:12.3f} {t_py / t_cc:7.1f}x")


if __name__ == "__main__":
    main()
