"""Time the compiled and pure-Python sample loops on the adaptive comparison setup.

Usage: python3 benchmarks/bench_kernels.py [--n 50000] [--M 41] [--repeat 3]
"""

import argparse
import time

import numpy as np

from blindeq import adaptive, qpsk_alphabet
from blindeq._backend import compiled_kernels
from blindeq.signal import REFERENCE_CHANNEL, ChannelSpec, simulate, snr_to_noise_variance


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50_000)
    ap.add_argument("--M", type=int, default=41)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    qpsk = qpsk_alphabet()
    sb2 = snr_to_noise_variance(20.0, qpsk, REFERENCE_CHANNEL)
    record = simulate(qpsk, ChannelSpec(REFERENCE_CHANNEL, sb2), args.n + args.M - 1, 1)
    runs = {
        "lms": lambda b: adaptive.run_lms(record, args.M, 0.001, 22, backend=b),
        "cma": lambda b: adaptive.run_cma(record, args.M, 0.001, 1.0, backend=b),
        "blind": lambda b: adaptive.blind_receiver_run(record, args.M, 0.001, qpsk, backend=b),
    }
    backends = ["python"] + (["cython"] if compiled_kernels is not None else [])
    print(f"{args.n} symbols, M={args.M}, best of {args.repeat}")
    print(f"{'kernel':<8}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>11}")
    for name, run in runs.items():
        timed = {b: best_of(lambda: run(b), args.repeat) for b in backends}
        line = f"{name:<8}" + "".join(f"{timed[b][0]:>11.3f}s" for b in backends)
        if len(backends) == 2:
            diff = np.max(np.abs(timed["python"][1].taps - timed["cython"][1].taps))
            line += f"{timed['python'][0] / timed['cython'][0]:>9.1f}x{diff:>11.1e}"
        print(line)


if __name__ == "__main__":
    main()
