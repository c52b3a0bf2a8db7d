"""Training and run configuration."""

import json
from dataclasses import dataclass, field, asdict, fields

POLICY_NAMES = ("SET", "CoDASET", "CoPASET", "CoRSET", "CoDACoRSET", "CoPACoRSET")


@dataclass
class TrainConfig:
    hidden_dims: list = field(default_factory=lambda: [1000, 1000, 1000])
    epsilon: float = 20.0
    zeta: float = 0.3
    eta: float = 0.01
    dropout_rate: float = 0.3
    epochs: int = 100
    batch_size: int = 100
    momentum: float = 0.9
    seed: int = 0
    activation_sample_cap: int | None = None

    def validate(self):
        if not 0 < self.zeta < 1:
            raise ValueError(f"zeta must be in (0, 1), got {self.zeta}")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if any(d <= 0 for d in self.hidden_dims):
            raise ValueError(f"hidden layer widths must be positive, got {self.hidden_dims}")
        return self


@dataclass
class RunConfig(TrainConfig):
    policy: str = "SET"
    data: str | None = None
    out: str = "run"
    checkpoint_epochs: list = field(default_factory=list)
    test_fraction: float = 0.2
    label_column: str = "label"
    normalize: str = "zscore"
    data_samples: int = 2600
    data_seed: int = 0

    def validate(self):
        super().validate()
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}, expected one of {POLICY_NAMES}")
        if not 0 < self.test_fraction < 1:
            raise ValueError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        return self

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in asdict(self).items() if k in names})


# Per-dataset defaults. "madelon" mirrors the high-learning-rate setting used
# for very noisy data; "default" is the generic setting.
PRESETS = {
    "default": {},
    "madelon": {
        "hidden_dims": [1000, 1000, 1000],
        "epsilon": 20.0,
        "zeta": 0.3,
        "dropout_rate": 0.3,
        "eta": 0.1,
        "momentum": 0.9,
        "batch_size": 100,
        "epochs": 100,
        "checkpoint_epochs": [5, 20, 50, 100],
        "test_fraction": 600 / 2600,
    },
}


def resolve_run_config(preset: str | None = None, config_file: str | None = None,
                       overrides: dict | None = None) -> RunConfig:
    """Merge preset defaults, a flat JSON config file, and explicit overrides.

    Precedence, lowest to highest: built-in defaults, preset, config file,
    overrides (command-line flags).
    """
    merged = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}, expected one of {sorted(PRESETS)}")
        merged.update(PRESETS[preset])
    if config_file is not None:
        with open(config_file) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {config_file} must contain a JSON object")
        merged.update(loaded)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged).validate()
