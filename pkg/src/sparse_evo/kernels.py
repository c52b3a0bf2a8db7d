"""Edge-indexed kernels for sparsely connected layers.

All hot inner loops live here. Two interchangeable backends are provided:
numba-compiled loops (the default) and a pure-numpy path. Select one with
the environment variable ``SPARSE_EVO_BACKEND`` set to ``numba`` or
``numpy``; if numba is unavailable the numpy path is used regardless.

Every kernel works on edge arrays ``rows``/``cols`` (int64, sorted
lexicographically) and activations in transposed, feature-major layout so
the per-edge inner loop runs over contiguous sample axes.
"""

import os

import numpy as np

_THREADS = os.environ.get("SPARSE_EVO_THREADS", "1")


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _np_forward_t(x_t, rows, cols, weights, n_next):
    # x_t: (n_prev, batch) -> (n_next, batch)
    out_t = np.zeros((n_next, x_t.shape[1]))
    if rows.size:
        np.add.at(out_t, cols, x_t[rows] * weights[:, None])
    return out_t


def _np_backward_delta_t(delta_t, rows, cols, weights, n_prev):
    # delta_t: (n_next, batch) -> (n_prev, batch)
    out_t = np.zeros((n_prev, delta_t.shape[1]))
    if rows.size:
        np.add.at(out_t, rows, delta_t[cols] * weights[:, None])
    return out_t


def _np_weight_grad_t(a_t, delta_t, rows, cols):
    # a_t: (n_prev, batch), delta_t: (n_next, batch) -> (E,)
    if not rows.size:
        return np.zeros(0)
    return np.einsum("eb,eb->e", a_t[rows], delta_t[cols])


def _np_edge_dots(a_prev, a_next, rows, cols):
    # a_prev: (n_prev, s), a_next: (n_next, s) -> per-edge dot products
    if not rows.size:
        return np.zeros(0)
    return np.einsum("es,es->e", a_prev[rows], a_next[cols])


_NUMPY_IMPL = {
    "forward_t": _np_forward_t,
    "backward_delta_t": _np_backward_delta_t,
    "weight_grad_t": _np_weight_grad_t,
    "edge_dots": _np_edge_dots,
}


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

try:
    import numba

    try:
        numba.set_num_threads(max(1, int(_THREADS)))
    except (ValueError, RuntimeError):
        pass

    @numba.njit(cache=True)
    def _nb_forward_t(x_t, rows, cols, weights, n_next):
        n_samples = x_t.shape[1]
        out_t = np.zeros((n_next, n_samples))
        for e in range(rows.shape[0]):
            r = rows[e]
            c = cols[e]
            w = weights[e]
            for b in range(n_samples):
                out_t[c, b] += x_t[r, b] * w
        return out_t

    @numba.njit(cache=True)
    def _nb_backward_delta_t(delta_t, rows, cols, weights, n_prev):
        n_samples = delta_t.shape[1]
        out_t = np.zeros((n_prev, n_samples))
        for e in range(rows.shape[0]):
            r = rows[e]
            c = cols[e]
            w = weights[e]
            for b in range(n_samples):
                out_t[r, b] += delta_t[c, b] * w
        return out_t

    @numba.njit(cache=True)
    def _nb_weight_grad_t(a_t, delta_t, rows, cols):
        out = np.zeros(rows.shape[0])
        n_samples = a_t.shape[1]
        for e in range(rows.shape[0]):
            r = rows[e]
            c = cols[e]
            acc = 0.0
            for b in range(n_samples):
                acc += a_t[r, b] * delta_t[c, b]
            out[e] = acc
        return out

    @numba.njit(cache=True)
    def _nb_edge_dots(a_prev, a_next, rows, cols):
        out = np.zeros(rows.shape[0])
        s = a_prev.shape[1]
        for e in range(rows.shape[0]):
            r = rows[e]
            c = cols[e]
            acc = 0.0
            for j in range(s):
                acc += a_prev[r, j] * a_next[c, j]
            out[e] = acc
        return out

    _NUMBA_IMPL = {
        "forward_t": _nb_forward_t,
        "backward_delta_t": _nb_backward_delta_t,
        "weight_grad_t": _nb_weight_grad_t,
        "edge_dots": _nb_edge_dots,
    }
except ImportError:  # pragma: no cover - numba is a declared dependency
    _NUMBA_IMPL = None


IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}
if _NUMBA_IMPL is not None:
    IMPLEMENTATIONS["numba"] = _NUMBA_IMPL

_requested = os.environ.get("SPARSE_EVO_BACKEND", "numba").lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"SPARSE_EVO_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = _requested if _requested in IMPLEMENTATIONS else "numpy"
_impl = IMPLEMENTATIONS[BACKEND]

forward_t = _impl["forward_t"]
backward_delta_t = _impl["backward_delta_t"]
weight_grad_t = _impl["weight_grad_t"]
edge_dots = _impl["edge_dots"]
