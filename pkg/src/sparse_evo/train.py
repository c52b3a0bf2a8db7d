"""Training loop, epoch metrics, and model persistence."""

import json
import time
from dataclasses import dataclass

import numpy as np

from .activations import EpochRecorder
from .config import TrainConfig
from .evolution import evolve_epoch
from .network import (LayerTopology, Model, SparseLayer, Topology,
                      backward_and_update, forward)

METRICS_HEADER = "epoch,train_loss,train_accuracy,test_accuracy,edges_total,rewired"
REWIRE_HEADER = "epoch,layer,removed,added,dot_products,fallback_flag"
TIMINGS_HEADER = "epoch,wall_time_ms"


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_accuracy: float
    edges_total: int
    rewired: int
    wall_time_ms: float


def evaluate(model: Model, dataset, batch_size=500):
    """Classification accuracy in eval mode (no dropout)."""
    correct = 0
    for start in range(0, dataset.n_samples, batch_size):
        x = dataset.features[start:start + batch_size]
        y = dataset.labels[start:start + batch_size]
        _, probs = forward(model, x, mode="eval")
        correct += int(np.count_nonzero(np.argmax(probs, axis=1) == y))
    return correct / dataset.n_samples


def _edges_total(model):
    return sum(t.edge_count for t in model.topology.layers)


def train_model(model: Model, train_ds, test_ds, out_dir=None,
                checkpoint_epochs=(), verbose=False):
    """Train for the configured number of epochs, rewiring after each one.

    Per epoch: shuffle, minibatch SGD with activation recording, end-of-epoch
    rewiring, then evaluation (so logged accuracies match the stored model).
    Returns the list of EpochLog rows. When out_dir is set, writes
    metrics.csv, rewiring.csv, timings.csv and model checkpoints there.
    """
    cfg = model.config
    rng = np.random.default_rng([cfg.seed, 1])
    widths = ([model.n_inputs] + list(cfg.hidden_dims) + [model.n_outputs])
    recorder = EpochRecorder(widths, cap=cfg.activation_sample_cap)

    logs = []
    rewire_rows = []
    checkpoint_epochs = set(checkpoint_epochs)
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(train_ds.n_samples)
        x_all = train_ds.features[order]
        y_all = train_ds.labels[order]
        losses = []
        for b, start in enumerate(range(0, train_ds.n_samples, cfg.batch_size)):
            loss = backward_and_update(
                model, x_all[start:start + cfg.batch_size],
                y_all[start:start + cfg.batch_size],
                rng=rng, recorder=recorder, epoch=epoch, batch_index=b)
            losses.append(loss)
        report = evolve_epoch(model, recorder)
        train_acc = evaluate(model, train_ds)
        test_acc = evaluate(model, test_ds)
        wall_ms = (time.perf_counter() - t0) * 1e3
        log = EpochLog(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            train_accuracy=train_acc,
            test_accuracy=test_acc,
            edges_total=_edges_total(model),
            rewired=report.total_rewired,
            wall_time_ms=wall_ms,
        )
        logs.append(log)
        for entry in report.layers:
            rewire_rows.append((epoch, entry.layer, entry.removed, entry.added,
                                entry.dot_products, int(entry.fallback)))
        if verbose:
            print(f"epoch {epoch}: loss={log.train_loss:.4f} "
                  f"train={train_acc:.4f} test={test_acc:.4f} "
                  f"rewired={report.total_rewired} ({wall_ms:.0f} ms)")
        if out_dir is not None and epoch in checkpoint_epochs:
            save_model(model, f"{out_dir}/model_epoch{epoch}.json")

    if out_dir is not None:
        write_metrics(logs, f"{out_dir}/metrics.csv")
        with open(f"{out_dir}/rewiring.csv", "w") as fh:
            fh.write(REWIRE_HEADER + "\n")
            for row in rewire_rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        with open(f"{out_dir}/timings.csv", "w") as fh:
            fh.write(TIMINGS_HEADER + "\n")
            for log in logs:
                fh.write(f"{log.epoch},{log.wall_time_ms:.3f}\n")
        save_model(model, f"{out_dir}/model.json")
    return logs


def write_metrics(logs, path):
    """Fixed header, 6-decimal fixed point, \\n line endings: byte-exact for
    a given seed and config. Wall times go to timings.csv instead."""
    with open(path, "w", newline="") as fh:
        fh.write(METRICS_HEADER + "\n")
        for log in logs:
            fh.write(f"{log.epoch},{log.train_loss:.6f},{log.train_accuracy:.6f},"
                     f"{log.test_accuracy:.6f},{log.edges_total},{log.rewired}\n")


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_model(model: Model, path):
    """Single JSON document; float values round-trip exactly."""
    doc = {
        "config": {k: v for k, v in vars(model.config).items()},
        "policy": model.policy,
        "epoch": model.epoch,
        "layers": [],
    }
    for topo, layer in zip(model.topology.layers, model.layers):
        doc["layers"].append({
            "shape": [topo.n_prev, topo.n_next],
            "edges": [[int(r), int(c), int(b), float(w)]
                      for r, c, b, w in zip(topo.rows, topo.cols,
                                            topo.birth, layer.weights)],
            "biases": [float(v) for v in layer.biases],
            "srelu": [[float(v) for v in row] for row in layer.srelu],
        })
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> Model:
    with open(path) as fh:
        doc = json.load(fh)
    config = TrainConfig(**doc["config"])
    shapes, topo_layers, layers = [], [], []
    for entry in doc["layers"]:
        n_prev, n_next = entry["shape"]
        shapes.append((n_prev, n_next))
        edges = entry["edges"]
        rows = np.asarray([e[0] for e in edges], dtype=np.int64)
        cols = np.asarray([e[1] for e in edges], dtype=np.int64)
        birth = np.asarray([e[2] for e in edges], dtype=np.int64)
        weights = np.asarray([e[3] for e in edges], dtype=float)
        topo_layers.append(LayerTopology(n_prev, n_next, rows, cols, birth))
        layers.append(SparseLayer(
            weights=weights,
            biases=np.asarray(entry["biases"], dtype=float),
            srelu=np.asarray(entry["srelu"], dtype=float),
        ))
    return Model(
        topology=Topology(layer_shapes=shapes, layers=topo_layers),
        layers=layers,
        policy=doc["policy"],
        config=config,
        epoch=doc["epoch"],
    )
