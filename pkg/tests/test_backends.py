import json
import os
import subprocess
import sys

import numpy as np
import pytest

from panelseg import _accel, _kernels
from panelseg.cusum import DcMode

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def weights(n):
    return np.ascontiguousarray(np.stack([DcMode.exponent(0).weights(n), DcMode.exponent(1).weights(n),
                                          DcMode.combined().weights(n)]))


@needs_numba
class TestKernelEquivalence:
    @pytest.mark.parametrize("n,T", [(1, 9), (3, 20), (12, 41)])
    def test_cusum_block(self, rng, n, T):
        X = rng.standard_normal((n, T))
        np.testing.assert_allclose(_kernels._cusum_block_nb(X, 2, T - 3), _kernels._cusum_block_np(X, 2, T - 3),
                                   rtol=0, atol=1e-12)

    @pytest.mark.parametrize("n,T", [(1, 12), (4, 30), (15, 50)])
    def test_scan(self, rng, n, T):
        C = _kernels._cusum_block_np(rng.standard_normal((n, T)), 0, T - 1)
        W = weights(n)
        a = _kernels._scan_nb(C, W, 3, T - 4)
        b = _kernels._scan_np(C, W, 3, T - 4)
        np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-12)
        np.testing.assert_array_equal(a[1], b[1])
        np.testing.assert_array_equal(a[2], b[2])

    @pytest.mark.parametrize("w", [12, 25, 40])
    def test_window_stats(self, rng, w):
        X = rng.standard_normal((3, 6, 40))
        W = weights(6)
        a = _kernels._window_stats_batch_nb(X, w, 2, w - 3, W)
        b = _kernels._window_stats_batch_np(X, w, 2, w - 3, W)
        assert a.shape == (3, 3, 40 - w + 1)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_ties(self):
        X = np.tile(np.r_[np.zeros(10), np.ones(10)], (4, 1))
        C = _kernels._cusum_block_np(X, 0, 19)
        a = _kernels._scan_nb(C, weights(4), 0, 19)
        b = _kernels._scan_np(C, weights(4), 0, 19)
        np.testing.assert_array_equal(a[1], b[1])
        np.testing.assert_array_equal(a[2], b[2])


def _detect_json(tmp_path, backend):
    env = dict(os.environ, PANELSEG_BACKEND=backend)
    out = subprocess.run([sys.executable, "-m", "panelseg", "detect", "--input", str(tmp_path / "x.csv"),
                          "--boot-reps", "10", "--seed", "3"], capture_output=True, text=True, env=env, check=True)
    return json.loads(out.stdout)


@needs_numba
def test_backends_agree_end_to_end(tmp_path):
    g = np.random.default_rng(4)
    X = g.standard_normal((8, 80))
    X[:4, 40:] += 1.5
    np.savetxt(tmp_path / "x.csv", X, delimiter=",", fmt="%.17g")
    a = _detect_json(tmp_path, "numba")
    b = _detect_json(tmp_path, "numpy")
    assert [c["eta"] for c in a["change_points"]] == [c["eta"] for c in b["change_points"]]
    for ca, cb in zip(a["change_points"], b["change_points"]):
        assert ca["contributors"] == cb["contributors"]
        assert ca["stat"] == pytest.approx(cb["stat"], rel=1e-10)
        assert ca["threshold"] == pytest.approx(cb["threshold"], rel=1e-10)


def test_backend_switch_is_respected():
    code = "from panelseg import _accel, _kernels; print(_accel.BACKEND, _kernels.scan.__name__)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True,
                         env=dict(os.environ, PANELSEG_BACKEND="numpy"))
    assert out.stdout.split() == ["numpy", "_scan_np"]
