"""Benchmark the numba kernels against the pure-numpy fallback.

Times the five hot kernels on realistic drop-sized inputs plus one
end-to-end drop (best response + power control + metrics per backend).

    python benchmarks/bench_kernels.py --drops 300

Select what the package itself uses via MCMIMO_BACKEND={numba,numpy}.
"""

import argparse
import time

import numpy as np

from mcmimo.asymptotics import identity_assignment, interferer_signs
from mcmimo.kernels import numpy_backend
from mcmimo.pilot_allocation import enumerate_permutations
from mcmimo.scenario import compute_beta, drop_users, generate_layout

try:
    from mcmimo.kernels import numba_backend
except ImportError:
    numba_backend = None


def make_inputs(seed, num_users=4):
    rng = np.random.default_rng(seed)
    layout = generate_layout(1, 1600.0)
    drop = drop_users(layout, num_users, rng)
    beta = compute_beta(layout, drop, rng=rng)
    L, K, _ = beta.shape
    gamma = np.full((L, K), 10.0)
    phi = np.full((L, K), 10.0)
    return beta, gamma, phi, identity_assignment(L, K)


def time_kernel(fn, args, repeats):
    fn(*args)  # warm-up (JIT compile / cache load)
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def bench_kernels(repeats):
    beta, gamma, phi, assign = make_inputs(0)
    signs = interferer_signs(beta.shape[0])
    perms = enumerate_permutations(beta.shape[1])
    alpha2 = numpy_backend.pilot_alpha_sq(beta, gamma, assign)
    cases = [
        ("pilot_alpha_sq", (beta, gamma, assign)),
        ("sinr_pilotwise", (beta, phi, assign, alpha2)),
        ("ber_pilotwise", (beta, phi, assign, alpha2, signs)),
        ("interference_pilotwise", (beta, phi, assign, alpha2)),
        ("score_permutations", (perms, beta, gamma, phi, assign, 0, 3, signs)),
    ]
    print(f"{'kernel':<24} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, args in cases:
        t_np = time_kernel(getattr(numpy_backend, name), args, repeats)
        if numba_backend is None:
            print(f"{name:<24} {t_np * 1e6:>10.1f}us {'n/a':>12}")
            continue
        t_nb = time_kernel(getattr(numba_backend, name), args, repeats)
        print(
            f"{name:<24} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us "
            f"{t_np / t_nb:>8.1f}x"
        )


def bench_drops(num_drops):
    import mcmimo.kernels as kernels
    from mcmimo.harness import ExperimentConfig, run_experiment

    cfg = ExperimentConfig(
        criterion="maxminsinr", pc="opc", zeta_db=6.0, num_drops=num_drops, seed=3
    )
    run_experiment(ExperimentConfig(num_drops=2, seed=3))  # warm caches
    start = time.perf_counter()
    run_experiment(cfg)
    elapsed = time.perf_counter() - start
    print(
        f"\nend-to-end ({kernels.BACKEND} backend): {num_drops} drops with "
        f"allocation + power control in {elapsed:.2f}s "
        f"({1e3 * elapsed / num_drops:.2f} ms/drop)"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=2000)
    parser.add_argument("--drops", type=int, default=300)
    args = parser.parse_args()
    bench_kernels(args.repeats)
    bench_drops(args.drops)


if __name__ == "__main__":
    main()
