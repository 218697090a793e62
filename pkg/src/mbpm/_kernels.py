"""Hot loops: per-window compensated power sums and real Fourier inversion.

Each kernel has a numba implementation and a pure-numpy one with identical
semantics. ``MBPM_BACKEND=numpy`` forces the numpy path; the numba path is
used otherwise whenever numba imports. ``MBPM_THREADS`` caps numba threads.
"""

from __future__ import annotations

import math
import os

import numpy as np

# the bundled TBB is too old for numba; workqueue is always available
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
    from numba import njit, prange
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_REQUESTED = os.environ.get("MBPM_BACKEND", "numba").strip().lower()
if _REQUESTED not in ("numba", "numpy"):
    raise ImportError(f"MBPM_BACKEND must be 'numba' or 'numpy', got {_REQUESTED!r}")

HAVE_NUMBA = numba is not None
BACKEND = "numba" if (HAVE_NUMBA and _REQUESTED == "numba") else "numpy"


def configure_threads() -> None:
    """Apply the ``MBPM_THREADS`` cap to numba's thread pool, if set."""
    raw = os.environ.get("MBPM_THREADS")
    if not raw or not HAVE_NUMBA:
        return
    try:
        n = int(raw)
    except ValueError:
        return
    if n >= 1:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# power sums
# ---------------------------------------------------------------------------

def power_sums_numpy(value, volume, price, starts, stops, n_max):
    """Sums of x**n, n = 0..n_max, over each segment [starts[s], stops[s]).

    Returns an array of shape (3, n_seg, n_max + 1) holding the value,
    volume and price sums. Column 0 is the tick count. Segment sums are
    exactly rounded (``math.fsum``).
    """
    n_seg = len(starts)
    out = np.zeros((3, n_seg, n_max + 1))
    counts = (np.asarray(stops) - np.asarray(starts)).astype(np.float64)
    out[:, :, 0] = counts
    for j, col in enumerate((value, volume, price)):
        col = np.asarray(col, dtype=np.float64)
        pw = np.ones_like(col)
        for n in range(1, n_max + 1):
            # repeated multiplication, same as the compiled kernel
            pw = pw * col
            for s in range(n_seg):
                out[j, s, n] = math.fsum(pw[starts[s]:stops[s]])
    return out


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _power_sums_nb(value, volume, price, starts, stops, n_max):
        n_seg = starts.shape[0]
        out = np.zeros((3, n_seg, n_max + 1))
        for s in prange(n_seg):
            a = starts[s]
            b = stops[s]
            acc = np.zeros((3, n_max + 1))
            comp = np.zeros((3, n_max + 1))
            for i in range(a, b):
                for j in range(3):
                    if j == 0:
                        x = value[i]
                    elif j == 1:
                        x = volume[i]
                    else:
                        x = price[i]
                    pw = 1.0
                    for n in range(1, n_max + 1):
                        pw = pw * x
                        # Neumaier compensated add
                        t = acc[j, n] + pw
                        if abs(acc[j, n]) >= abs(pw):
                            comp[j, n] += (acc[j, n] - t) + pw
                        else:
                            comp[j, n] += (pw - t) + acc[j, n]
                        acc[j, n] = t
            for j in range(3):
                out[j, s, 0] = b - a
                for n in range(1, n_max + 1):
                    out[j, s, n] = acc[j, n] + comp[j, n]
        return out

    def power_sums_numba(value, volume, price, starts, stops, n_max):
        return _power_sums_nb(
            np.ascontiguousarray(value, dtype=np.float64),
            np.ascontiguousarray(volume, dtype=np.float64),
            np.ascontiguousarray(price, dtype=np.float64),
            np.ascontiguousarray(starts, dtype=np.int64),
            np.ascontiguousarray(stops, dtype=np.int64),
            int(n_max),
        )

else:  # pragma: no cover
    power_sums_numba = None


def power_sums(value, volume, price, starts, stops, n_max):
    if BACKEND == "numba":
        return power_sums_numba(value, volume, price, starts, stops, n_max)
    return power_sums_numpy(value, volume, price, starts, stops, n_max)


# ---------------------------------------------------------------------------
# Fourier inversion
# ---------------------------------------------------------------------------
#
# eta(o) = (1/pi) * sum_m w_m [Re F(x_m) cos(x_m o) + Im F(x_m) sin(x_m o)]
# which is the trapezoid rule for (1/2pi) * int F(x) exp(-i x o) dx on
# [-X, X] using F(-x) = conj F(x).

def inverse_fourier_numpy(f_re, f_im, x, w, offsets, chunk=512):
    offsets = np.asarray(offsets, dtype=np.float64)
    a = w * f_re
    b = w * f_im
    eta = np.empty_like(offsets)
    for lo in range(0, offsets.size, chunk):
        phase = np.outer(offsets[lo:lo + chunk], x)
        eta[lo:lo + chunk] = np.cos(phase) @ a + np.sin(phase) @ b
    return eta / math.pi


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _inverse_fourier_nb(f_re, f_im, x, w, offsets):
        n = offsets.shape[0]
        m = x.shape[0]
        eta = np.empty(n)
        for j in prange(n):
            o = offsets[j]
            s = 0.0
            for k in range(m):
                ph = x[k] * o
                s += w[k] * (f_re[k] * math.cos(ph) + f_im[k] * math.sin(ph))
            eta[j] = s / math.pi
        return eta

    def inverse_fourier_numba(f_re, f_im, x, w, offsets):
        return _inverse_fourier_nb(
            np.ascontiguousarray(f_re, dtype=np.float64),
            np.ascontiguousarray(f_im, dtype=np.float64),
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(w, dtype=np.float64),
            np.ascontiguousarray(offsets, dtype=np.float64),
        )

else:  # pragma: no cover
    inverse_fourier_numba = None


def inverse_fourier(f_re, f_im, x, w, offsets):
    if BACKEND == "numba":
        return inverse_fourier_numba(f_re, f_im, x, w, offsets)
    return inverse_fourier_numpy(f_re, f_im, x, w, offsets)
