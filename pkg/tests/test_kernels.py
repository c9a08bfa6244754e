import importlib

import numpy as np
import pytest

from topomap import _accel, _kernels_py
from oracles import linear_scan_nearest

try:
    _compiled = importlib.import_module("topomap._kernels")
except ImportError:  # pragma: no cover
    _compiled = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _compiled is not None:
    BACKENDS.append(pytest.param(_compiled, id="cython"))


def test_accel_reports_backend():
    assert _accel.BACKEND in ("cython", "python")


@pytest.mark.parametrize("kern", BACKENDS)
class TestKernels:
    def test_nearest_centroid_matches_linear_scan(self, kern):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 3))
        C = rng.normal(size=(7, 3))
        labels, dist = kern.nearest_centroid(X, C)
        np.testing.assert_array_equal(labels, linear_scan_nearest(X, C))
        np.testing.assert_allclose(dist, np.sum((X - C[labels]) ** 2, axis=1), rtol=1e-12)

    def test_nearest_centroid_tie_goes_low(self, kern):
        C = np.array([[5.0, 0.0], [9.0, 9.0], [-1.0, 0.0], [0.0, 7.0], [9.0, -9.0], [1.0, 0.0]])
        labels, _ = kern.nearest_centroid(np.array([[0.0, 0.0]]), C)
        assert labels[0] == 2

    def test_pair_confusion(self, kern):
        pred = np.array([0, 1, 2, 0, 2, 1])
        truth = np.array([0, 1, 1, 0, 0, 2])
        M = kern.pair_confusion(pred, truth, 3)
        expected = np.zeros((3, 3), dtype=int)
        for p, t in zip(pred, truth):
            expected[t, p] += 1
        np.testing.assert_array_equal(M, expected)

    def test_tsne_gradient_matches_finite_differences(self, kern):
        rng = np.random.default_rng(0)
        n = 8
        P = rng.random((n, n))
        P = P + P.T
        np.fill_diagonal(P, 0.0)
        P /= P.sum()
        Y = rng.normal(size=(n, 2))
        grad, kl = kern.tsne_gradient(Y, P)
        eps = 1e-6
        fd = np.zeros_like(Y)
        for i in range(n):
            for j in range(2):
                Yp, Ym = Y.copy(), Y.copy()
                Yp[i, j] += eps
                Ym[i, j] -= eps
                fd[i, j] = (kern.tsne_gradient(Yp, P)[1] - kern.tsne_gradient(Ym, P)[1]) / (2 * eps)
        np.testing.assert_allclose(grad, fd, atol=1e-6)


@pytest.mark.skipif(_compiled is None, reason="compiled kernels not built")
def test_backends_agree():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(300, 5))
    C = rng.normal(size=(12, 5))
    a = _kernels_py.nearest_centroid(X, C)
    b = _compiled.nearest_centroid(X, C)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12)

    P = rng.random((30, 30))
    P = P + P.T
    np.fill_diagonal(P, 0)
    P /= P.sum()
    Y = rng.normal(size=(30, 2))
    ga, ka = _kernels_py.tsne_gradient(Y, P)
    gb, kb = _compiled.tsne_gradient(Y, P)
    np.testing.assert_allclose(ga, gb, rtol=1e-9, atol=1e-12)
    assert ka == pytest.approx(kb, rel=1e-12)
    gc, kc = _compiled.tsne_gradient(Y, P, False)
    np.testing.assert_allclose(gc, ga, rtol=1e-9, atol=1e-12)
    assert np.isnan(kc) and np.isnan(_kernels_py.tsne_gradient(Y, P, False)[1])


def test_pure_python_switch():
    import os
    import subprocess
    import sys

    env = dict(os.environ, TOPOMAP_PURE_PYTHON="1")
    r = subprocess.run([sys.executable, "-c", "import topomap; print(topomap.BACKEND)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"
