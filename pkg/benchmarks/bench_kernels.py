"""Time the Monte Carlo kernels under both backends.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]

The first numba call compiles (or loads the on-disk cache); that warm-up is
run once and left out of the timings.
"""
import argparse
import time

from turbokey import AttackModel, SignalAmplitude, TurbulenceParams, kernels
from turbokey.montecarlo import McConfig, mc_ber, mc_skr, sample_transmittances


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = TurbulenceParams.from_eta_bar(4, 0.5, 0.1)
    beta = SignalAmplitude.from_photons(2.0)
    cases = {
        "sample_transmittances": lambda cfg: sample_transmittances(params, cfg),
        "mc_ber kennedy": lambda cfg: mc_ber("kennedy", beta, params, cfg),
        "mc_ber homodyne": lambda cfg: mc_ber("homodyne", beta, params, cfg),
        "mc_skr kennedy": lambda cfg: mc_skr("kennedy", beta, params, AttackModel.COLLECTIVE, cfg),
        "mc_skr homodyne": lambda cfg: mc_skr("homodyne", beta, params, AttackModel.COLLECTIVE, cfg),
    }
    backends = sorted(kernels.BACKENDS)
    print(f"trials={args.trials} repeat={args.repeat} active={kernels.BACKEND}")
    print(f"{'case':<24}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        row = {}
        for b in backends:
            cfg = McConfig(args.trials, seed=1, backend=b)
            fn(McConfig(1000, seed=1, backend=b))  # warm-up
            row[b] = best_of(lambda: fn(cfg), args.repeat)
        speed = row["numpy"] / row["numba"] if "numba" in row else float("nan")
        print(f"{name:<24}" + "".join(f"{row[b]:>11.3f}s" for b in backends) + f"{speed:>9.2f}x")


if __name__ == "__main__":
    main()
