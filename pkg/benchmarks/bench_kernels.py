"""Compare the numba-compiled recurrent kernels against their pure-numpy versions.

Usage: python3 benchmarks/bench_kernels.py [--batch 32] [--window 60] [--units 32] [--repeat 5]

Both paths run the same source; the numpy timing calls ``kernel.py_func`` so a
single process can measure both. Outputs are compared before timing.
"""
import argparse
import time

import numpy as np

from rnnforecast import kernels
from rnnforecast.cells import GruParams, LstmParams
from rnnforecast.numerics import make_rng


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def _cases(batch, window, units, rng):
    xt = np.ascontiguousarray(rng.uniform(size=(window, batch)))
    dh = rng.normal(size=(batch, units))
    lstm = LstmParams.init(units, rng).kernel_args()
    gru = GruParams.init(units, rng).kernel_args()
    lstm_trace = kernels.lstm_forward(xt, *lstm, True)
    gru_trace = kernels.gru_forward(xt, *gru)
    return [
        ("lstm_forward", kernels.lstm_forward, (xt, *lstm, True)),
        ("lstm_backward", kernels.lstm_backward, (xt, *lstm_trace, *lstm[4:], dh, True)),
        ("gru_forward", kernels.gru_forward, (xt, *gru)),
        ("gru_backward", kernels.gru_backward, (xt, *gru_trace, *gru[3:], dh)),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--window", type=int, default=60)
    parser.add_argument("--units", type=int, default=32)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if kernels.BACKEND != "numba":
        print("numba unavailable or disabled; nothing to compare")
        return 1
    rng = make_rng(args.seed)
    print(f"batch={args.batch} window={args.window} units={args.units} best of {args.repeat}")
    print(f"{'kernel':<15}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, fn, fargs in _cases(args.batch, args.window, args.units, rng):
        fast, slow = fn(*fargs), fn.py_func(*fargs)
        for a, b in zip(fast, slow):
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)
        t_fast = _time(fn, fargs, args.repeat)
        t_slow = _time(fn.py_func, fargs, args.repeat)
        print(f"{name:<15}{t_fast * 1e3:>12.3f}{t_slow * 1e3:>12.3f}{t_slow / t_fast:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
