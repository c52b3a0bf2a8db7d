"""Sparse MLPs with evolving topology and connectivity-based feature analysis."""

from .config import POLICY_NAMES, RunConfig, TrainConfig
from .data import Dataset, gen_madelon_like, load_csv, split
from .evolution import POLICIES, EvolutionPolicy, RewireReport, evolve_epoch
from .network import (InvalidArchitectureError, Model, SparseLayer, Topology,
                      TrainingDivergenceError, backward_and_update, build_model,
                      densify, forward, init_topology, init_weights, srelu)
from .train import evaluate, load_model, save_model, train_model

__all__ = [
    "POLICY_NAMES", "POLICIES", "RunConfig", "TrainConfig", "Dataset",
    "EvolutionPolicy", "RewireReport", "InvalidArchitectureError", "Model",
    "SparseLayer", "Topology", "TrainingDivergenceError",
    "backward_and_update", "build_model", "densify", "evaluate",
    "evolve_epoch", "forward", "gen_madelon_like", "init_topology",
    "init_weights", "load_csv", "load_model", "save_model", "split", "srelu",
    "train_model",
]
