"""Sparse MLP core: topology initialization, SReLU, feedforward, backprop.

Connectivity is stored per bipartite layer as parallel edge arrays
(rows, cols, birth epoch) kept sorted lexicographically by (row, col).
Weights, momentum velocities and per-neuron SReLU parameters are aligned
with the edge arrays. Gradients exist only for active edges; a weight for
a non-edge is never materialized.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import TrainConfig


class InvalidArchitectureError(ValueError):
    pass


class TrainingDivergenceError(RuntimeError):
    def __init__(self, epoch, batch_index, loss):
        super().__init__(
            f"non-finite loss {loss!r} at epoch {epoch}, batch {batch_index}"
        )
        self.epoch = epoch
        self.batch_index = batch_index


@dataclass
class LayerTopology:
    n_prev: int
    n_next: int
    rows: np.ndarray    # int64, sorted by (row, col)
    cols: np.ndarray    # int64
    birth: np.ndarray   # int64, epoch each edge was added

    @property
    def edge_count(self) -> int:
        return int(self.rows.size)

    def edge_keys(self) -> np.ndarray:
        """Edges encoded as row * n_next + col; sorted and duplicate-free."""
        return self.rows * self.n_next + self.cols


@dataclass
class Topology:
    layer_shapes: list
    layers: list  # list[LayerTopology]


@dataclass
class SparseLayer:
    weights: np.ndarray   # (E,), aligned with the layer's edge arrays
    biases: np.ndarray    # (n_next,)
    srelu: np.ndarray     # (n_next, 4): t_left, a_left, t_right, a_right
    w_vel: np.ndarray = None
    b_vel: np.ndarray = None
    s_vel: np.ndarray = None

    def __post_init__(self):
        if self.w_vel is None:
            self.w_vel = np.zeros_like(self.weights)
        if self.b_vel is None:
            self.b_vel = np.zeros_like(self.biases)
        if self.s_vel is None:
            self.s_vel = np.zeros_like(self.srelu)


@dataclass
class Model:
    topology: Topology
    layers: list  # list[SparseLayer]
    policy: str
    config: TrainConfig
    epoch: int = 0

    @property
    def n_inputs(self) -> int:
        return self.topology.layer_shapes[0][0]

    @property
    def n_outputs(self) -> int:
        return self.topology.layer_shapes[-1][1]


def connection_probability(n_prev: int, n_next: int, epsilon: float) -> float:
    return min(1.0, epsilon * (n_prev + n_next) / (n_prev * n_next))


def init_topology(layer_shapes, epsilon, rng) -> Topology:
    """Sparse Erdos-Renyi initialization: every possible edge of each
    bipartite layer is included by an independent Bernoulli draw."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    shapes = [(int(a), int(b)) for a, b in layer_shapes]
    for n_prev, n_next in shapes:
        if n_prev <= 0 or n_next <= 0:
            raise InvalidArchitectureError(f"layer widths must be positive, got {shapes}")
    layers = []
    for n_prev, n_next in shapes:
        p = connection_probability(n_prev, n_next, epsilon)
        mask = rng.random((n_prev, n_next)) < p
        rows, cols = np.nonzero(mask)  # np.nonzero is row-major, so lexicographic
        layers.append(LayerTopology(
            n_prev=n_prev, n_next=n_next,
            rows=rows.astype(np.int64), cols=cols.astype(np.int64),
            birth=np.zeros(rows.size, dtype=np.int64),
        ))
    return Topology(layer_shapes=shapes, layers=layers)


def weight_init_std(n_prev: int, n_next: int) -> float:
    return np.sqrt(2.0 / (n_prev + n_next))


SRELU_INIT = np.array([0.0, 0.0, 1.0, 1.0])  # exactly ReLU at initialization


def init_weights(topology: Topology, rng) -> list:
    layers = []
    for topo in topology.layers:
        std = weight_init_std(topo.n_prev, topo.n_next)
        layers.append(SparseLayer(
            weights=rng.normal(0.0, std, topo.edge_count),
            biases=np.zeros(topo.n_next),
            srelu=np.tile(SRELU_INIT, (topo.n_next, 1)),
        ))
    return layers


def build_model(config: TrainConfig, n_inputs: int, n_outputs: int, policy: str = "SET") -> Model:
    config.validate()
    dims = [n_inputs] + list(config.hidden_dims) + [n_outputs]
    shapes = list(zip(dims[:-1], dims[1:]))
    rng = np.random.default_rng([config.seed, 0])
    topology = init_topology(shapes, config.epsilon, rng)
    layers = init_weights(topology, rng)
    return Model(topology=topology, layers=layers, policy=policy, config=config)


# ---------------------------------------------------------------------------
# SReLU
# ---------------------------------------------------------------------------

def srelu(x, params):
    """Piecewise-linear S-shaped activation.

    params broadcasts over the last axis of x as (t_left, a_left, t_right,
    a_right) per neuron. Upper hinge wins when the hinges cross.
    """
    x = np.asarray(x, dtype=float)
    params = np.asarray(params, dtype=float)
    tl, al, tr, ar = params[..., 0], params[..., 1], params[..., 2], params[..., 3]
    upper = x >= tr
    lower = ~upper & (x <= tl)
    return np.where(upper, tr + ar * (x - tr),
                    np.where(lower, tl + al * (x - tl), x))


def _srelu_regions(z, params):
    tl, al, tr, ar = params[:, 0], params[:, 1], params[:, 2], params[:, 3]
    upper = z >= tr
    lower = ~upper & (z <= tl)
    return tl, al, tr, ar, upper, lower


def _srelu_forward(z, params):
    tl, al, tr, ar, upper, lower = _srelu_regions(z, params)
    return np.where(upper, tr + ar * (z - tr), np.where(lower, tl + al * (z - tl), z))


def _srelu_backward(z, params, grad_h):
    """Given dL/dh, return (dL/dz, per-neuron param gradients (n, 4))."""
    tl, al, tr, ar, upper, lower = _srelu_regions(z, params)
    grad_z = grad_h * np.where(upper, ar, np.where(lower, al, 1.0))
    g_low = grad_h * lower
    g_up = grad_h * upper
    grads = np.stack([
        (g_low * (1.0 - al)).sum(axis=0),
        (g_low * (z - tl)).sum(axis=0),
        (g_up * (1.0 - ar)).sum(axis=0),
        (g_up * (z - tr)).sum(axis=0),
    ], axis=1)
    return grad_z, grads


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------

def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _forward_full(model: Model, x, mode="eval", recorder=None, rng=None):
    """Full forward pass returning everything backprop needs.

    Returns dict with: inputs (post-dropout input to each layer), zs
    (pre-activations), hiddens (post-SReLU, pre-dropout), masks (dropout),
    probs (softmax outputs).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise ValueError(
            f"batch has feature width {x.shape[1] if x.ndim == 2 else x.shape}, "
            f"expected {model.n_inputs}")
    train = mode == "train"
    if train and model.config.dropout_rate > 0 and rng is None:
        raise ValueError("train-mode forward with dropout requires an rng")

    n_layers = len(model.layers)
    inputs = [x]
    zs, hiddens, masks = [], [], []
    a = x
    for i, (topo, layer) in enumerate(zip(model.topology.layers, model.layers)):
        a_t = np.ascontiguousarray(a.T)
        z = kernels.forward_t(a_t, topo.rows, topo.cols, layer.weights, topo.n_next).T
        z = z + layer.biases
        zs.append(z)
        if i == n_layers - 1:
            probs = _softmax(z)
            hiddens.append(probs)
            break
        h = _srelu_forward(z, layer.srelu)
        hiddens.append(h)
        if train and model.config.dropout_rate > 0:
            keep = 1.0 - model.config.dropout_rate
            mask = (rng.random(h.shape) < keep) / keep
            a = h * mask
        else:
            mask = None
            a = h
        masks.append(mask)
        inputs.append(a)

    if recorder is not None:
        recorder.record([x] + hiddens)

    return {"inputs": inputs, "zs": zs, "hiddens": hiddens, "masks": masks, "probs": probs}


def forward(model: Model, x, mode="eval", recorder=None, rng=None):
    """Run the network. Returns (per-layer activations, output probabilities).

    Activations are the raw inputs followed by post-SReLU, pre-dropout
    hidden activations; the output entry is the softmax distribution.
    """
    cache = _forward_full(model, x, mode=mode, recorder=recorder, rng=rng)
    return [cache["inputs"][0]] + cache["hiddens"], cache["probs"]


def predict(model: Model, x):
    _, probs = forward(model, x, mode="eval")
    return np.argmax(probs, axis=1)


def _check_labels(model, y, batch):
    y = np.asarray(y)
    if y.shape[0] != batch:
        raise ValueError(f"got {y.shape[0]} labels for a batch of {batch}")
    if y.min() < 0 or y.max() >= model.n_outputs:
        raise ValueError(f"labels must lie in [0, {model.n_outputs})")
    return y.astype(np.int64)


def _backward(model: Model, cache, y):
    """Loss and per-layer gradients from a completed forward cache."""
    batch = cache["inputs"][0].shape[0]
    y = _check_labels(model, y, batch)

    logp = _log_softmax(cache["zs"][-1])
    loss = -float(np.mean(logp[np.arange(batch), y]))

    delta = cache["probs"].copy()
    delta[np.arange(batch), y] -= 1.0
    delta /= batch

    srelu_grads = [np.zeros_like(layer.srelu) for layer in model.layers]
    grads = [None] * len(model.layers)
    for i in reversed(range(len(model.layers))):
        topo = model.topology.layers[i]
        layer = model.layers[i]
        a_prev_t = np.ascontiguousarray(cache["inputs"][i].T)
        delta_t = np.ascontiguousarray(delta.T)
        gw = kernels.weight_grad_t(a_prev_t, delta_t, topo.rows, topo.cols)
        gb = delta.sum(axis=0)
        grads[i] = {"weights": gw, "biases": gb}
        if i == 0:
            break
        grad_prev = kernels.backward_delta_t(
            delta_t, topo.rows, topo.cols, layer.weights, topo.n_prev).T
        mask = cache["masks"][i - 1]
        if mask is not None:
            grad_prev = grad_prev * mask
        prev_layer = model.layers[i - 1]
        delta, srelu_grads[i - 1] = _srelu_backward(
            cache["zs"][i - 1], prev_layer.srelu, grad_prev)
    for g, gs in zip(grads, srelu_grads):
        g["srelu"] = gs
    return loss, grads


def loss_and_gradients(model: Model, x, y, mode="eval", rng=None):
    """Softmax cross-entropy loss and per-layer analytic gradients.

    Returns (loss, grads) with grads a list of dicts holding "weights",
    "biases" and "srelu" arrays aligned with each layer. Gradients flow only
    through active edges.
    """
    cache = _forward_full(model, x, mode=mode, rng=rng)
    return _backward(model, cache, y)


def backward_and_update(model: Model, x, y, rng=None, recorder=None,
                        epoch=None, batch_index=None):
    """One train-mode forward/backward pass plus an SGD-with-momentum update.

    Returns the batch loss. Raises TrainingDivergenceError on non-finite loss.
    """
    cache = _forward_full(model, x, mode="train", recorder=recorder, rng=rng)
    loss, grads = _backward(model, cache, y)
    if not np.isfinite(loss):
        raise TrainingDivergenceError(epoch, batch_index, loss)

    mu = model.config.momentum
    eta = model.config.eta
    for layer, g in zip(model.layers, grads):
        layer.w_vel = mu * layer.w_vel - eta * g["weights"]
        layer.weights = layer.weights + layer.w_vel
        layer.b_vel = mu * layer.b_vel - eta * g["biases"]
        layer.biases = layer.biases + layer.b_vel
        layer.s_vel = mu * layer.s_vel - eta * g["srelu"]
        layer.srelu = layer.srelu + layer.s_vel
    return loss


def densify(topo: LayerTopology, layer: SparseLayer) -> np.ndarray:
    """Dense n_prev x n_next matrix with edge weights in place, 0 elsewhere."""
    dense = np.zeros((topo.n_prev, topo.n_next))
    dense[topo.rows, topo.cols] = layer.weights
    return dense
