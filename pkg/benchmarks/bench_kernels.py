"""Time the numba kernels against the pure-numpy fallback and check they agree.

    python benchmarks/bench_kernels.py [--repeat 5] [--n-max 30 60 120]

Also times a fig2a-style coupling sweep under each backend in a subprocess
(the backend is fixed at import, via HEATLAB_DISABLE_NUMBA), once at fixed
n_max and once with automatic truncation certification.  The reported state is
always solved in extended precision by numpy, so the compiled kernels pay off
mostly inside certification.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from heatlab.baths import BathSpec
from heatlab.hilbert import HybridSystem
from heatlab.kernels import _numba, _numpy
from heatlab.liouvillian import build_rate_matrices


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def kernel_cases(n_max):
    sys_ = HybridSystem(1.0, 1.0, 0.5, n_max)
    rates = build_rate_matrices(sys_, BathSpec(0.005, 10, 1.5, "a"), BathSpec(0.005, 10, 0.5))
    w = rates.total
    gaps = rates.gap_table
    coupling = np.abs(rates.basis.sigma_tables[(0, 1)]) ** 2
    full = np.zeros_like(gaps)
    lv = n_max + 1
    full[:lv, lv:] = coupling
    full[lv:, :lv] = coupling.T
    p0 = np.full(w.shape[0], 1.0 / w.shape[0])
    dt = 0.1 / np.max(np.abs(np.diag(w)))
    tol = 1e-12 * (lv + 1.0)
    return {
        "displacement_table": lambda m: m.displacement_table(n_max, 3.0),
        "assemble_rates": lambda m: m.assemble_rates(gaps, full, 0.005, 10.0, 0.5, tol),
        "gth_stationary": lambda m: m.gth_stationary(np.ascontiguousarray(w.T)),
        "rk4_steps(1000)": lambda m: m.rk4_steps(w, p0, dt, 1000),
    }


SWEEP_SNIPPET = """
import time, numpy as np
from heatlab.analysis import Setup, SweepSpec, sweep_coupling
from heatlab.baths import BathSpec
from heatlab.hilbert import HybridSystem
from heatlab.steadystate import TruncationPolicy
base = Setup(HybridSystem(1.0, 1.0, 0.0, 30), BathSpec(0.005, 10, 1.5, "a"), BathSpec(0.005, 10, 0.5))
out = []
for policy in (TruncationPolicy(), TruncationPolicy(mode="auto", start=10)):
    spec = SweepSpec("coupling_lambda", np.geomspace(0.01, 4, 25), base, policy=policy)
    sweep_coupling(spec)  # warm-up (jit compile / cache load)
    t = time.perf_counter(); sweep_coupling(spec); out.append(time.perf_counter() - t)
print(*out)
"""


def sweep_time(disable_numba):
    env = dict(os.environ, HEATLAB_DISABLE_NUMBA="1" if disable_numba else "0")
    out = subprocess.run([sys.executable, "-c", SWEEP_SNIPPET], env=env, capture_output=True, text=True,
                         check=True)
    return [float(v) for v in out.stdout.strip().splitlines()[-1].split()]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-max", type=int, nargs="+", default=[30, 60, 120])
    ap.add_argument("--skip-sweep", action="store_true")
    args = ap.parse_args(argv)

    print(f"{'kernel':<22}{'n_max':>6}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}{'max|diff|':>12}")
    for n_max in args.n_max:
        for name, call in kernel_cases(n_max).items():
            call(_numba)  # compile outside the timed region
            t_np, a = best_of(lambda: call(_numpy), args.repeat)
            t_nb, b = best_of(lambda: call(_numba), args.repeat)
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            print(f"{name:<22}{n_max:>6}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}{diff:>12.2e}")

    if not args.skip_sweep:
        print()
        for label, t_np, t_nb in zip(("n_max=30", "auto truncation"), sweep_time(True), sweep_time(False)):
            print(f"25-point coupling sweep, {label}: numpy {t_np:.3f} s, numba {t_nb:.3f} s ({t_np / t_nb:.1f}x)")


if __name__ == "__main__":
    main()
