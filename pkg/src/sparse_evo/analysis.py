"""Topology analytics: input-neuron degrees, histograms, ablation curves.

Input-neuron degree in the first bipartite layer is read as learned feature
importance. "Removing" an input feature means zeroing its column (the
neutral value under zscore normalization); the model is never retrained.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .network import Model
from .train import evaluate


@dataclass
class DegreeProfile:
    degrees: np.ndarray        # per input neuron, first bipartite layer
    exclusion_epoch: int | None  # epoch whose additions were disregarded


@dataclass
class AblationCurve:
    order: str                 # "ascending" | "descending"
    points: list               # [(neurons_removed, test_accuracy), ...]


def input_degrees(model: Model, exclude_final_epoch=True) -> DegreeProfile:
    """Connection count per input neuron, optionally skipping edges added in
    the final epoch (those were never trained after being added)."""
    topo = model.topology.layers[0]
    if exclude_final_epoch:
        keep = topo.birth < model.epoch
        exclusion_epoch = model.epoch
    else:
        keep = np.ones(topo.edge_count, dtype=bool)
        exclusion_epoch = None
    degrees = np.bincount(topo.rows[keep], minlength=topo.n_prev)
    return DegreeProfile(degrees=degrees, exclusion_epoch=exclusion_epoch)


def _removal_order(degrees, order):
    # ties broken by neuron index ascending
    idx = np.arange(degrees.size)
    if order == "ascending":
        return idx[np.lexsort((idx, degrees))]
    if order == "descending":
        return idx[np.lexsort((idx, -degrees))]
    raise ValueError(f"order must be 'ascending' or 'descending', got {order!r}")


def _removal_grid(n_features, step):
    grid = list(range(0, n_features + 1, step))
    if grid[-1] != n_features:
        grid.append(n_features)
    return grid


def ablation_curve(model: Model, dataset, order="ascending", step=20) -> AblationCurve:
    """Test accuracy as input features are zeroed in degree order."""
    n = dataset.n_features
    if n != model.n_inputs:
        raise ValueError(f"dataset width {n} does not match model input {model.n_inputs}")
    if step >= n:
        raise ValueError(f"step {step} must be smaller than n_features {n}")
    profile = input_degrees(model, exclude_final_epoch=True)
    removal = _removal_order(profile.degrees, order)
    features = dataset.features.copy()
    masked = dataset.subset(np.arange(dataset.n_samples))
    masked.features = features
    points = []
    removed_so_far = 0
    for k in _removal_grid(n, step):
        cols = removal[removed_so_far:k]
        features[:, cols] = 0.0
        removed_so_far = k
        points.append((k, evaluate(model, masked)))
    return AblationCurve(order=order, points=points)


def degree_histogram(profile: DegreeProfile, n_bins):
    """Equal-width bins over [0, max degree]; counts sum to the neuron count."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    top = max(int(profile.degrees.max()), 1)
    counts, edges = np.histogram(profile.degrees, bins=n_bins, range=(0, top))
    return edges, counts


def snapshot_curves(checkpoints, dataset, step=20):
    """Ascending ablation curve per checkpoint, on a shared removal grid."""
    widths = {m.n_inputs for m in checkpoints}
    if len(widths) > 1:
        raise ValueError(f"checkpoint input widths differ: {sorted(widths)}")
    return [ablation_curve(m, dataset, order="ascending", step=step)
            for m in checkpoints]


# ---------------------------------------------------------------------------
# plot-ready CSV output
# ---------------------------------------------------------------------------

def write_degrees_csv(profile: DegreeProfile, path, roles=None):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["neuron", "degree", "role"])
        for i, d in enumerate(profile.degrees):
            role = roles[i] if roles else ""
            writer.writerow([i, int(d), role])


def write_histogram_csv(edges, counts, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def write_ablation_csv(curve: AblationCurve, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["removed", "accuracy"])
        for removed, acc in curve.points:
            writer.writerow([removed, f"{acc:.6f}"])
