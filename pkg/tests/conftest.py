import numpy as np
import pytest

from sparse_evo.activations import EpochRecorder
from sparse_evo.config import TrainConfig
from sparse_evo.network import build_model


def make_model(n_in=6, hidden=(5,), n_out=3, policy="SET", seed=0, epsilon=3.0,
               dropout_rate=0.0, **kw):
    cfg = TrainConfig(hidden_dims=list(hidden), epsilon=epsilon, seed=seed,
                      dropout_rate=dropout_rate, **kw)
    return build_model(cfg, n_in, n_out, policy=policy)


def fill_recorder(model, rng, n_samples=16):
    """A recorder populated with random activations for every layer."""
    widths = ([model.n_inputs] + list(model.config.hidden_dims)
              + [model.n_outputs])
    rec = EpochRecorder(widths)
    rec.record([rng.normal(size=(n_samples, w)) for w in widths])
    return rec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
