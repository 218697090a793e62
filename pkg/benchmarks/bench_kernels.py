"""Compare the numba and numpy kernels on window power sums and Fourier
inversion.

    python benchmarks/bench_kernels.py --ticks 2000000 --windows 500
"""

import argparse
import time

import numpy as np

from mbpm import _kernels


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_power_sums(n_ticks, n_windows, n_max, repeat):
    rng = np.random.default_rng(0)
    price = 100 * np.exp(np.cumsum(rng.normal(0, 1e-3, n_ticks)))
    volume = rng.integers(1, 20, n_ticks).astype(np.float64)
    value = price * volume
    edges = np.linspace(0, n_ticks, n_windows + 1).astype(np.int64)
    starts, stops = edges[:-1], edges[1:]
    args = (value, volume, price, starts, stops, n_max)

    _kernels.power_sums_numba(*args)  # compile
    t_nb, a = best_of(lambda: _kernels.power_sums_numba(*args), repeat)
    t_np, b = best_of(lambda: _kernels.power_sums_numpy(*args), max(1, repeat // 2))
    rel = np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))
    return t_nb, t_np, rel


def bench_inverse_fourier(n_points, freq_points, repeat):
    x = np.linspace(0.0, 12.0, freq_points)
    w = np.full(freq_points, x[1] - x[0])
    w[0] = w[-1] = 0.5 * w[0]
    f = np.exp(-0.5 * x**2 - 1j * 0.2 * x**3 / 6)
    offsets = np.linspace(-8.0, 8.0, n_points)
    args = (f.real, f.imag, x, w, offsets)

    _kernels.inverse_fourier_numba(*args)
    t_nb, a = best_of(lambda: _kernels.inverse_fourier_numba(*args), repeat)
    t_np, b = best_of(lambda: _kernels.inverse_fourier_numpy(*args), repeat)
    return t_nb, t_np, float(np.max(np.abs(a - b)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--ticks", type=int, default=1_000_000)
    ap.add_argument("--windows", type=int, default=1000)
    ap.add_argument("--max-n", type=int, default=4)
    ap.add_argument("--grid-points", type=int, default=4096)
    ap.add_argument("--freq-points", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    _kernels.configure_threads()

    t_nb, t_np, rel = bench_power_sums(args.ticks, args.windows, args.max_n, args.repeat)
    print(f"power_sums      ticks={args.ticks:>10d}  numba {t_nb * 1e3:9.2f} ms  "
          f"numpy {t_np * 1e3:9.2f} ms  speedup {t_np / t_nb:6.1f}x  max rel diff {rel:.1e}")
    t_nb, t_np, err = bench_inverse_fourier(args.grid_points, args.freq_points, args.repeat)
    print(f"inverse_fourier points={args.grid_points:>9d}  numba {t_nb * 1e3:9.2f} ms  "
          f"numpy {t_np * 1e3:9.2f} ms  speedup {t_np / t_nb:6.1f}x  max abs diff {err:.1e}")


if __name__ == "__main__":
    main()
