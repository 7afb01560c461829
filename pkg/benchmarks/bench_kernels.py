"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--em-iters 2000] [--rl-iters 1000] [--repeat 3]

Workloads are the Fig. 2 EM reconstruction (100 settings, 5 levels) and the
Fig. 3 pointwise Richardson-Lucy batch (2500 points, 30 efficiencies, 12 levels).
"""
import argparse
import time

import numpy as np

from biastomo import _backend
from biastomo.experiments import efficiencies, fig2_plan, fig2_state, fig3_grid, fig3_state
from biastomo.mle import ReconstructionConfig, em_reconstruct
from biastomo.povm import build_elements, transfer_from_elements
from biastomo.simulate import ExperimentPlan, counts_array, simulate_counts
from biastomo.wigner import point_probabilities, reconstruct_frequencies


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--em-iters", type=int, default=2000)
    ap.add_argument("--rl-iters", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    settings, policy = fig2_plan()
    elements = build_elements(settings, policy)
    tf = transfer_from_elements(elements)
    counts = counts_array(simulate_counts(fig2_state(), ExperimentPlan(settings, policy, 42), elements))

    nus = efficiencies(30)
    freqs = point_probabilities(fig3_state(), fig3_grid().points(), nus)

    names = sorted(_backend.BACKENDS)
    if len(names) < 2:
        print("compiled kernels unavailable (not built, or BIASTOMO_PURE_PYTHON set); numpy only")
    rows = {}
    for name in names:
        cfg = ReconstructionConfig(max_iterations=args.em_iters, likelihood_tolerance=1e-300, backend=name)
        t_em, res = best_of(lambda: em_reconstruct(counts, elements, tf, cfg), args.repeat)
        t_rl, r = best_of(lambda: reconstruct_frequencies(freqs, nus, 12, args.rl_iters, name), args.repeat)
        rows[name] = (t_em, t_rl, res.rho.matrix, r)

    print(f"{'backend':<8} {'EM us/iter':>12} {'RL ms/sweep':>12}")
    for name, (t_em, t_rl, *_) in rows.items():
        print(f"{name:<8} {1e6 * t_em / args.em_iters:>12.2f} {1e3 * t_rl / args.rl_iters:>12.3f}")
    if len(rows) == 2:
        (ea, ra, rho_a, r_a), (eb, rb, rho_b, r_b) = rows["cython"], rows["python"]
        print(f"speed-up  EM x{eb / ea:.1f}   RL x{rb / ra:.1f}")
        print(f"max |rho diff| {np.max(np.abs(rho_a - rho_b)):.1e}   max |R diff| {np.max(np.abs(r_a - r_b)):.1e}")


if __name__ == "__main__":
    main()
