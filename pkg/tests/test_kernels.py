import numpy as np
import pytest

from sparse_evo import kernels

pytestmark = pytest.mark.skipif(
    "numba" not in kernels.IMPLEMENTATIONS,
    reason="numba backend unavailable")


def random_layer(rng, n_prev=17, n_next=13, density=0.3, batch=9):
    mask = rng.random((n_prev, n_next)) < density
    rows, cols = np.nonzero(mask)
    weights = rng.normal(size=rows.size)
    x_t = np.ascontiguousarray(rng.normal(size=(batch, n_prev)).T)
    d_t = np.ascontiguousarray(rng.normal(size=(batch, n_next)).T)
    return rows.astype(np.int64), cols.astype(np.int64), weights, x_t, d_t


@pytest.mark.parametrize("name", ["forward_t", "backward_delta_t",
                                  "weight_grad_t", "edge_dots"])
def test_backends_agree(name, rng):
    np_fn = kernels.IMPLEMENTATIONS["numpy"][name]
    nb_fn = kernels.IMPLEMENTATIONS["numba"][name]
    for _ in range(10):
        rows, cols, weights, x_t, d_t = random_layer(rng)
        if name == "forward_t":
            args = (x_t, rows, cols, weights, d_t.shape[0])
        elif name == "backward_delta_t":
            args = (d_t, rows, cols, weights, x_t.shape[0])
        elif name == "weight_grad_t":
            args = (x_t, d_t, rows, cols)
        else:
            args = (x_t, d_t, rows, cols)
        a, b = np_fn(*args), nb_fn(*args)
        assert a.shape == b.shape
        assert np.abs(a - b).max() < 1e-12


@pytest.mark.parametrize("name", ["forward_t", "backward_delta_t",
                                  "weight_grad_t", "edge_dots"])
def test_backends_agree_on_empty_edge_set(name):
    empty = np.zeros(0, dtype=np.int64)
    x_t = np.zeros((4, 3))
    d_t = np.zeros((5, 3))
    for backend in ("numpy", "numba"):
        fn = kernels.IMPLEMENTATIONS[backend][name]
        if name == "forward_t":
            out = fn(x_t, empty, empty, np.zeros(0), 5)
            assert out.shape == (5, 3) and np.all(out == 0)
        elif name == "backward_delta_t":
            out = fn(d_t, empty, empty, np.zeros(0), 4)
            assert out.shape == (4, 3) and np.all(out == 0)
        else:
            assert fn(x_t, d_t, empty, empty).size == 0


def test_forward_matches_dense_matmul(rng):
    rows, cols, weights, x_t, _ = random_layer(rng)
    dense = np.zeros((17, 13))
    dense[rows, cols] = weights
    expected = (x_t.T @ dense).T
    for backend in kernels.IMPLEMENTATIONS.values():
        out = backend["forward_t"](x_t, rows, cols, weights, 13)
        assert np.abs(out - expected).max() < 1e-12


def test_active_backend_is_exported():
    assert kernels.BACKEND in kernels.IMPLEMENTATIONS
    assert kernels.forward_t is kernels.IMPLEMENTATIONS[kernels.BACKEND]["forward_t"]
