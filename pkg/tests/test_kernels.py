import numpy as np
import pytest

from passive_ifir import _kernels_py, kernels
from passive_ifir.lti import c2d_zoh
from passive_ifir.plants import CARTS, CARTS_NL, DEFAULT_TS, two_cart

compiled = pytest.importorskip("passive_ifir._kernels")


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def test_backend_selected():
    assert kernels.BACKEND == "cython"


def test_ss_filter(rng):
    a = rng.normal(size=(3, 3)) * 0.3
    b, c = rng.normal(size=3), rng.normal(size=3)
    u = rng.normal(size=500)
    np.testing.assert_allclose(compiled.ss_filter(a, b, c, 0.7, u),
                               _kernels_py.ss_filter(a, b, c, 0.7, u), rtol=1e-12, atol=1e-12)


def test_tf_filter(rng):
    num, den = rng.normal(size=4), np.array([1.0, -0.5, 0.06])
    u = rng.normal(size=500)
    np.testing.assert_allclose(compiled.tf_filter(num, den, u),
                               _kernels_py.tf_filter(num, den, u), rtol=1e-12, atol=1e-12)


def test_closed_loop_linear(rng):
    d = c2d_zoh(two_cart(), DEFAULT_TS)
    cnum, cden = np.array([1.2, -1.0, 0.1]), np.array([1.0, -1.0])
    r = np.ones(800)
    args = (d.a_mat, d.b_vec[:, 0], d.c_vec[0], d.d, cnum, cden, r)
    for got, want in zip(compiled.closed_loop_linear(*args), _kernels_py.closed_loop_linear(*args)):
        np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("params", [CARTS, CARTS_NL])
def test_two_cart(rng, params):
    u = 3.0 * rng.normal(size=300)
    p = params.as_tuple()
    np.testing.assert_allclose(compiled.two_cart_open_loop(p, u, DEFAULT_TS, 10),
                               _kernels_py.two_cart_open_loop(p, u, DEFAULT_TS, 10),
                               rtol=1e-11, atol=1e-12)
    cnum, cden = np.array([2.0, -1.9]), np.array([1.0, -1.0])
    r = np.ones(300)
    for got, want in zip(compiled.two_cart_closed_loop(p, cnum, cden, r, DEFAULT_TS, 10),
                         _kernels_py.two_cart_closed_loop(p, cnum, cden, r, DEFAULT_TS, 10)):
        np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-12)


def test_pure_python_flag(monkeypatch):
    import importlib
    monkeypatch.setenv("PASSIVE_IFIR_PURE_PYTHON", "1")
    try:
        reloaded = importlib.reload(kernels)
        assert reloaded.BACKEND == "python"
    finally:
        monkeypatch.delenv("PASSIVE_IFIR_PURE_PYTHON")
        importlib.reload(kernels)
    assert kernels.BACKEND == "cython"
