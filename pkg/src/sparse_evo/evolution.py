"""End-of-epoch topology rewiring.

Six policies combine two removal rules (weight magnitude, or weight times
cosine similarity) with three addition rules (uniform random, deterministic
top cosine, probabilistic cosine). Every policy conserves the per-layer
edge count: additions equal removals.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .activations import (DegenerateSimilarityError, DotProductCounter,
                          addition_distribution, cosine_edges, cosine_full)
from .network import LayerTopology, Model, Topology, weight_init_std


@dataclass(frozen=True)
class EvolutionPolicy:
    removal_rule: str   # "magnitude" | "cosine_weighted"
    addition_rule: str  # "random" | "top_cosine" | "probabilistic_cosine"


POLICIES = {
    "SET": EvolutionPolicy("magnitude", "random"),
    "CoDASET": EvolutionPolicy("magnitude", "top_cosine"),
    "CoPASET": EvolutionPolicy("magnitude", "probabilistic_cosine"),
    "CoRSET": EvolutionPolicy("cosine_weighted", "random"),
    "CoDACoRSET": EvolutionPolicy("cosine_weighted", "top_cosine"),
    "CoPACoRSET": EvolutionPolicy("cosine_weighted", "probabilistic_cosine"),
}


@dataclass
class LayerRewire:
    layer: int
    removed: int
    added: int
    dot_products: int
    fallback: bool


@dataclass
class RewireReport:
    epoch: int
    layers: list = field(default_factory=list)

    @property
    def total_rewired(self):
        return sum(entry.removed for entry in self.layers)

    @property
    def total_dot_products(self):
        return sum(entry.dot_products for entry in self.layers)


def _removal_count(weights, zeta):
    """floor(zeta * positives) + floor(zeta * negatives); zeros count as positive."""
    positives = int(np.count_nonzero(weights >= 0))
    negatives = weights.size - positives
    return math.floor(zeta * positives) + math.floor(zeta * negatives), positives, negatives


def remove_magnitude(topo: LayerTopology, weights, zeta):
    """Indices of the smallest positive and highest negative weights.

    Removes floor(zeta*P) positives closest to zero and floor(zeta*N)
    negatives closest to zero; ties broken by (row, col) order.
    """
    _, positives, negatives = _removal_count(weights, zeta)
    pos = weights >= 0
    removed = []
    k_pos = math.floor(zeta * positives)
    if k_pos:
        idx = np.flatnonzero(pos)
        order = np.lexsort((topo.cols[idx], topo.rows[idx], weights[idx]))
        removed.append(idx[order[:k_pos]])
    k_neg = math.floor(zeta * negatives)
    if k_neg:
        idx = np.flatnonzero(~pos)
        order = np.lexsort((topo.cols[idx], topo.rows[idx], -weights[idx]))
        removed.append(idx[order[:k_neg]])
    if not removed:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(removed)


def remove_cosine_weighted(topo: LayerTopology, weights, edge_similarities, zeta):
    """Indices of the edges with smallest |weight| * similarity metric.

    Removes the same total count as remove_magnitude would, keeping the
    policies comparable edge-for-edge.
    """
    if len(edge_similarities) != weights.size:
        raise ValueError("one similarity per edge required")
    n_remove, _, _ = _removal_count(weights, zeta)
    if n_remove == 0:
        return np.zeros(0, dtype=np.int64)
    metric = np.abs(weights) * np.asarray(edge_similarities, dtype=float)
    order = np.lexsort((topo.cols, topo.rows, metric))
    return order[:n_remove].astype(np.int64)


def _existing_keys(topo: LayerTopology):
    return set((topo.rows * topo.n_next + topo.cols).tolist())


def _nonedge_keys(topo: LayerTopology):
    total = topo.n_prev * topo.n_next
    all_keys = np.arange(total, dtype=np.int64)
    mask = np.ones(total, dtype=bool)
    mask[topo.rows * topo.n_next + topo.cols] = False
    return all_keys[mask]


def add_random(topo: LayerTopology, k, rng, epoch):
    """k distinct non-existing edges, uniformly at random (rejection sampled)."""
    if k <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    total = topo.n_prev * topo.n_next
    existing = _existing_keys(topo)
    n_free = total - len(existing)
    if n_free <= k:
        keys = _nonedge_keys(topo)
        return keys // topo.n_next, keys % topo.n_next
    chosen = []
    seen = set(existing)
    while len(chosen) < k:
        draw = max(16, 2 * (k - len(chosen)))
        r = rng.integers(0, topo.n_prev, size=draw)
        c = rng.integers(0, topo.n_next, size=draw)
        for key in (r * topo.n_next + c).tolist():
            if key in seen:
                continue
            seen.add(key)
            chosen.append(key)
            if len(chosen) == k:
                break
    keys = np.sort(np.asarray(chosen, dtype=np.int64))
    return keys // topo.n_next, keys % topo.n_next


def add_top_cosine(topo: LayerTopology, cosine_matrix, k, epoch):
    """The k non-existing edges with largest similarity; ties lexicographic."""
    c = np.asarray(cosine_matrix, dtype=float)
    if c.shape != (topo.n_prev, topo.n_next):
        raise ValueError(
            f"cosine matrix shape {c.shape} does not match layer "
            f"({topo.n_prev}, {topo.n_next})")
    if k <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    keys = _nonedge_keys(topo)
    if keys.size <= k:
        return keys // topo.n_next, keys % topo.n_next
    values = c.ravel()[keys]
    # keys are lexicographic already, so a stable sort on -value keeps the
    # (row, col) tie order
    order = np.argsort(-values, kind="stable")[:k]
    keys = np.sort(keys[order])
    return keys // topo.n_next, keys % topo.n_next


def add_probabilistic_cosine(topo: LayerTopology, cosine_matrix, k, rng, epoch):
    """Draw k non-existing edges without replacement, proportional to similarity.

    Sequential renormalized draws are realized as an exponential race:
    candidate i gets key Exp(1)/c_i and the k smallest keys win. If the
    similarity mass runs out the remainder is filled uniformly; the second
    return flags that fallback.
    """
    c = np.asarray(cosine_matrix, dtype=float)
    if c.shape != (topo.n_prev, topo.n_next):
        raise ValueError(
            f"cosine matrix shape {c.shape} does not match layer "
            f"({topo.n_prev}, {topo.n_next})")
    if k <= 0:
        return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)), False
    keys = _nonedge_keys(topo)
    if keys.size <= k:
        return (keys // topo.n_next, keys % topo.n_next), False
    weights = c.ravel()[keys]
    positive = weights > 0
    chosen = []
    fallback = False
    n_pos = int(positive.sum())
    if n_pos:
        race = rng.exponential(size=n_pos) / weights[positive]
        take = min(k, n_pos)
        order = np.argsort(race, kind="stable")[:take]
        chosen.append(keys[positive][order])
    if len(chosen) == 0 or chosen[0].size < k:
        fallback = True
        already = chosen[0] if chosen else np.zeros(0, dtype=np.int64)
        pool = np.setdiff1d(keys, already, assume_unique=False)
        extra = rng.choice(pool, size=k - already.size, replace=False)
        chosen.append(np.asarray(extra, dtype=np.int64))
    keys = np.sort(np.concatenate(chosen))
    return (keys // topo.n_next, keys % topo.n_next), fallback


def _apply_rewire(topo: LayerTopology, layer, removed_idx, new_rows, new_cols,
                  new_weights, epoch):
    keep = np.ones(topo.edge_count, dtype=bool)
    keep[removed_idx] = False
    rows = np.concatenate([topo.rows[keep], new_rows])
    cols = np.concatenate([topo.cols[keep], new_cols])
    birth = np.concatenate([topo.birth[keep],
                            np.full(new_rows.size, epoch, dtype=np.int64)])
    weights = np.concatenate([layer.weights[keep], new_weights])
    w_vel = np.concatenate([layer.w_vel[keep], np.zeros(new_rows.size)])
    order = np.lexsort((cols, rows))
    topo.rows = rows[order]
    topo.cols = cols[order]
    topo.birth = birth[order]
    layer.weights = weights[order]
    layer.w_vel = w_vel[order]


def evolve_epoch(model: Model, recorder) -> RewireReport:
    """Rewire every bipartite layer after a finished epoch.

    Applies the model policy's removal rule then its addition rule with an
    equal count, computing cosine structures only where the rules need them.
    Increments the epoch counter and clears the records.
    """
    policy = POLICIES[model.policy]
    epoch = model.epoch + 1
    report = RewireReport(epoch=epoch)

    for i, (topo, layer) in enumerate(zip(model.topology.layers, model.layers)):
        rng = np.random.default_rng([model.config.seed, 2, epoch, i])
        counter = DotProductCounter()
        fallback = False

        full_c = None
        if policy.addition_rule in ("top_cosine", "probabilistic_cosine"):
            full_c = cosine_full(recorder.matrix(i), recorder.matrix(i + 1), counter)

        if policy.removal_rule == "magnitude":
            removed_idx = remove_magnitude(topo, layer.weights, model.config.zeta)
        else:
            if full_c is not None:
                sims = full_c[topo.rows, topo.cols]
            else:
                sims = cosine_edges(recorder.matrix(i), recorder.matrix(i + 1),
                                    topo.rows, topo.cols, counter)
            removed_idx = remove_cosine_weighted(topo, layer.weights, sims,
                                                 model.config.zeta)
        k = int(removed_idx.size)

        # removal must be applied before addition so just-removed edges stay
        # eligible and k free slots are guaranteed
        kept_topo = LayerTopology(
            n_prev=topo.n_prev, n_next=topo.n_next,
            rows=np.delete(topo.rows, removed_idx),
            cols=np.delete(topo.cols, removed_idx),
            birth=np.delete(topo.birth, removed_idx),
        )
        if policy.addition_rule == "random":
            new_rows, new_cols = add_random(kept_topo, k, rng, epoch)
        elif policy.addition_rule == "top_cosine":
            new_rows, new_cols = add_top_cosine(kept_topo, full_c, k, epoch)
        else:
            try:
                addition_distribution(full_c)
                (new_rows, new_cols), fallback = add_probabilistic_cosine(
                    kept_topo, full_c, k, rng, epoch)
            except DegenerateSimilarityError:
                fallback = True
                new_rows, new_cols = add_random(kept_topo, k, rng, epoch)

        std = weight_init_std(topo.n_prev, topo.n_next)
        new_weights = rng.normal(0.0, std, new_rows.size)
        _apply_rewire(topo, layer, removed_idx, new_rows, new_cols, new_weights, epoch)
        report.layers.append(LayerRewire(
            layer=i, removed=k, added=int(new_rows.size),
            dot_products=counter.count, fallback=fallback))

    model.epoch = epoch
    recorder.clear()
    return report
