import os
import subprocess
import sys

import numpy as np
import pytest

from mbpm import _kernels

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not importable")


def test_power_sums_backends_agree():
    rng = np.random.default_rng(0)
    n = 20_000
    price = rng.lognormal(4, 0.3, n)
    volume = rng.integers(1, 50, n).astype(float)
    value = price * volume
    cuts = np.sort(rng.choice(np.arange(1, n), 40, replace=False))
    starts = np.concatenate(([0], cuts))
    stops = np.concatenate((cuts, [n]))
    a = _kernels.power_sums_numba(value, volume, price, starts, stops, 4)
    b = _kernels.power_sums_numpy(value, volume, price, starts, stops, 4)
    assert a.shape == (3, 41, 5)
    np.testing.assert_allclose(a, b, rtol=1e-15, atol=0)
    assert (a[:, :, 0] == (stops - starts)).all()


def test_compensated_sum_beats_naive():
    # a large term followed by many small ones loses the small ones naively
    x = np.concatenate(([1e16], np.ones(10_000)))
    one = np.ones_like(x)
    s = _kernels.power_sums_numba(x, one, one, np.array([0]), np.array([x.size]), 1)[0, 0, 1]
    assert s == 1e16 + 10_000


def test_inverse_fourier_backends_agree():
    x = np.linspace(0.0, 12.0, 1024)
    w = np.full(x.size, x[1] - x[0])
    w[0] = w[-1] = 0.5 * w[0]
    f = np.exp(-0.5 * x ** 2 - 1j * x ** 3 / 6)
    offsets = np.linspace(-10, 10, 1500)
    a = _kernels.inverse_fourier_numba(f.real, f.imag, x, w, offsets)
    b = _kernels.inverse_fourier_numpy(f.real, f.imag, x, w, offsets)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


def test_backend_env_flag():
    code = "from mbpm import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, MBPM_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["MBPM_BACKEND"] = "fortran"
    bad = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert bad.returncode != 0
