"""Per-epoch activation records and cosine-similarity structures.

Activation matrices have one row per neuron and one column per recorded
sample of the epoch, in arrival order. Similarities are absolute cosines,
so every entry lies in [0, 1]; a neuron whose recorded vector has zero norm
contributes 0 everywhere.
"""

import numpy as np

from . import kernels


class DegenerateSimilarityError(ValueError):
    """All similarities are zero; no distribution can be formed."""


class DotProductCounter:
    """Counts vector dot-product evaluations behind cosine computations."""

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)


class EpochRecorder:
    """Collects per-layer activation columns for one training epoch.

    Layer 0 holds the raw (normalized) inputs; the last layer holds the
    softmax outputs. With a sample cap, only the first ``cap`` samples of
    the epoch are kept (prefix sampling).
    """

    def __init__(self, widths, cap=None):
        self.widths = list(widths)
        self.cap = cap
        self._chunks = [[] for _ in self.widths]
        self.columns = 0

    def record(self, layer_activations):
        """Append one column per sample of the batch, in sample order."""
        if len(layer_activations) != len(self.widths):
            raise ValueError(
                f"expected activations for {len(self.widths)} layers, "
                f"got {len(layer_activations)}")
        batch = layer_activations[0].shape[0]
        for width, act in zip(self.widths, layer_activations):
            if act.shape != (batch, width):
                raise ValueError(
                    f"activation shape {act.shape} does not match "
                    f"(batch={batch}, width={width})")
        take = batch
        if self.cap is not None:
            take = min(batch, self.cap - self.columns)
            if take <= 0:
                return
        for chunks, act in zip(self._chunks, layer_activations):
            chunks.append(act[:take].T.copy())
        self.columns += take

    def matrix(self, layer_index):
        """The (n_neurons, s) activation matrix of one layer."""
        chunks = self._chunks[layer_index]
        if not chunks:
            return np.zeros((self.widths[layer_index], 0))
        return np.concatenate(chunks, axis=1)

    def clear(self):
        self._chunks = [[] for _ in self.widths]
        self.columns = 0


def _row_norms(a):
    return np.sqrt(np.einsum("ns,ns->n", a, a))


def cosine_full(a_prev, a_next, counter=None):
    """Absolute cosine similarity between every pre/post neuron pair.

    a_prev is (n_prev, s), a_next is (n_next, s); the result is
    (n_prev, n_next). Zero-norm activation vectors yield zero rows/columns.
    """
    a_prev = np.asarray(a_prev, dtype=float)
    a_next = np.asarray(a_next, dtype=float)
    if a_prev.shape[1] != a_next.shape[1]:
        raise ValueError(
            f"column counts differ: {a_prev.shape[1]} vs {a_next.shape[1]}")
    if counter is not None:
        counter.add(3 * a_prev.shape[0] * a_next.shape[0])
    norm_p = _row_norms(a_prev)
    norm_n = _row_norms(a_next)
    safe_p = np.where(norm_p > 0, norm_p, 1.0)
    safe_n = np.where(norm_n > 0, norm_n, 1.0)
    c = np.abs((a_prev / safe_p[:, None]) @ (a_next / safe_n[:, None]).T)
    c[norm_p == 0, :] = 0.0
    c[:, norm_n == 0] = 0.0
    return np.clip(c, 0.0, 1.0)


def cosine_edges(a_prev, a_next, rows, cols, counter=None):
    """Per-edge absolute cosine similarities, one value per (row, col) edge.

    Equals cosine_full at those positions but touches only existing
    connections: 3 dot products per edge.
    """
    a_prev = np.asarray(a_prev, dtype=float)
    a_next = np.asarray(a_next, dtype=float)
    if a_prev.shape[1] != a_next.shape[1]:
        raise ValueError(
            f"column counts differ: {a_prev.shape[1]} vs {a_next.shape[1]}")
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= a_prev.shape[0]
                      or cols.min() < 0 or cols.max() >= a_next.shape[0]):
        raise IndexError("edge index out of range for the layer shape")
    if counter is not None:
        counter.add(3 * rows.size)
    if not rows.size:
        return np.zeros(0)
    dots = kernels.edge_dots(a_prev, a_next, rows, cols)
    norm_p = np.sqrt(kernels.edge_dots(a_prev, a_prev, rows, rows))
    norm_n = np.sqrt(kernels.edge_dots(a_next, a_next, cols, cols))
    denom = norm_p * norm_n
    values = np.zeros(rows.size)
    ok = denom > 0
    values[ok] = np.abs(dots[ok]) / denom[ok]
    return np.clip(values, 0.0, 1.0)


def addition_distribution(cosine_matrix):
    """Normalize a cosine matrix into an addition probability matrix."""
    c = np.asarray(cosine_matrix, dtype=float)
    total = c.sum()
    if total <= 0:
        raise DegenerateSimilarityError("all cosine similarities are zero")
    return c / total
