#!/usr/bin/env python3
"""Time the numba and numpy kernel backends on the hot paths.

The backend is fixed when fsep is imported (FSEP_BACKEND), so the
default mode launches one subprocess per backend, collects JSON, and
prints a comparison table.  ``--backend NAME`` runs the measurement
pass in-process and emits JSON on stdout.

Usage:
    python3 benchmarks/bench_backends.py            # compare both
    python3 benchmarks/bench_backends.py --repeats 5
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _build_workloads():
    import numpy as np

    from fsep.backend import kernels
    from fsep.gibbs import sample_even_gibbs, sample_even_gibbs_batch
    from fsep.lattice import fixed_count_ring
    from fsep.rng import RngContext, child_key_array

    rng = RngContext(90_000)
    occ = fixed_count_ring(4096, 1843, rng.child(0))
    key = rng.child(1).ukey
    h_long = np.ascontiguousarray(sample_even_gibbs(0.5, 4096, rng.child(2)))
    occ_big = fixed_count_ring(200_000, 50_000, rng.child(3))

    stacks = np.ascontiguousarray(sample_even_gibbs_batch(0.5, 15, rng.child(4), 100_000))
    bkeys = child_key_array(rng.child(5).key, np.arange(stacks.shape[0]))
    img, lengths = kernels.phi_apply_batch(stacks)
    img = np.ascontiguousarray(img)

    def run_fssep():
        return kernels.fssep_run(occ, key, 0, 2000)

    def run_ssm():
        return kernels.ssm_run(h_long, key, 0, 2000)

    def run_quench():
        out, steps = kernels.fssep_until_frozen(occ_big, key, 0, 1_000_000)
        assert steps >= 0
        return out

    def run_ssm_batch():
        cur = stacks
        for t in range(10):
            cur = kernels.ssm_step_batch(cur, bkeys, t)
        return cur

    def run_fssep_batch():
        cur = img
        for t in range(10):
            cur = kernels.fssep_step_batch(cur, lengths, bkeys, t)
        return cur

    def run_code_rotate():
        im, ln = kernels.phi_apply_batch(stacks)
        return kernels.rotate_batch(im, ln, ln // 2)

    def run_gibbs():
        return sample_even_gibbs_batch(0.5, 25, rng.child(6), 200_000)

    return [
        ("fssep_run            M=4096, 2000 steps", run_fssep),
        ("ssm_run              M=4096, 2000 steps", run_ssm),
        ("fssep_until_frozen   M=200000, rho=0.25", run_quench),
        ("ssm_step_batch       100k x M=15, 10 steps", run_ssm_batch),
        ("fssep_step_batch     100k images, 10 steps", run_fssep_batch),
        ("phi_apply + rotate   100k x M=15", run_code_rotate),
        ("even-Gibbs sampler   200k x M=25", run_gibbs),
    ]


def measure(repeats: int) -> dict:
    from fsep.backend import backend_name

    results = {}
    for name, fn in _build_workloads():
        fn()  # warm once; compiles the jit path on first use
        best = min(_timed(fn) for _ in range(repeats))
        results[name] = best
    return {"backend": backend_name(), "results": results}


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def _run_child(backend: str, repeats: int) -> dict | None:
    env = dict(os.environ, FSEP_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__),
         "--backend", backend, "--repeats", str(repeats)],
        capture_output=True, text=True, env=env,
    )
    if proc.returncode != 0:
        print(f"{backend} backend failed:\n{proc.stderr}", file=sys.stderr)
        return None
    return json.loads(proc.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--backend", choices=("numpy", "numba"),
                    help="measure this backend in-process and print JSON")
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats per workload (best is kept)")
    args = ap.parse_args()

    if args.backend:
        print(json.dumps(measure(args.repeats)))
        return 0

    reports = {b: _run_child(b, args.repeats) for b in ("numpy", "numba")}
    if not any(reports.values()):
        return 1
    names = next(r for r in reports.values() if r)["results"].keys()
    w = max(len(n) for n in names)
    print(f"{'workload':<{w}}  {'numpy':>9}  {'numba':>9}  {'speedup':>8}")
    print("-" * (w + 32))
    for name in names:
        cells = []
        for b in ("numpy", "numba"):
            r = reports[b]
            cells.append(r["results"][name] if r else None)
        np_t, nb_t = cells
        ratio = f"{np_t / nb_t:7.1f}x" if np_t and nb_t else "     n/a"
        fmt = lambda t: f"{t * 1e3:8.1f}ms" if t is not None else "      n/a"
        print(f"{name:<{w}}  {fmt(np_t)}  {fmt(nb_t)}  {ratio}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
