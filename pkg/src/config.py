"""
Experiment configuration.

Precedence: dataclass defaults < YAML file (--config) < flags given on the
command line. YAML keys are the field names below; `bf` and `bp` are nested
mappings with the fields of BfConfig / BpConfig.
"""
from __future__ import annotations
import argparse
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .decoders import BfConfig, BpConfig
from .errors import ConfigError, InvalidParameterError, MissingArtifactError
from .parity_code import MIN_K

DEFAULT_OUT_DIR = Path("data/runs")
INSTANCE_DIR = Path("data/instances")

KINDS = ("iid_bench", "hybrid_landscape", "error_matrix", "decode_one", "gen_instances", "sampler_validate")
BENCH_DECODERS = ("bf", "bp", "mcmc")
DESK_TRIALS = 2000
FULL_TRIALS = 5000


@dataclass
class ExperimentConfig:
    kind: str = "iid_bench"
    seed: int = 12345
    out_dir: Path = DEFAULT_OUT_DIR
    n_jobs: int = 1
    full: bool = False
    # iid benchmark
    sizes: list[int] = field(default_factory=lambda: [10, 20, 30, 40])
    epsilons: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
    decoders: list[str] = field(default_factory=lambda: list(BENCH_DECODERS))
    trials: int = DESK_TRIALS
    bf: BfConfig = field(default_factory=BfConfig)
    bp: BpConfig = field(default_factory=BpConfig)
    bp_true_epsilon: bool = False
    mcmc_gamma: float = 1.0
    # instances
    instance_k: int = 14
    n_instances: int = 12
    coupling_bound: float = 0.25
    instance_dir: Path = INSTANCE_DIR
    # landscape
    kernel: str = "rejection_free"
    penalty_weight: int = 4
    beta_min: float = 0.0
    beta_max: float = 35.0
    gamma_min: float = 0.0
    gamma_max: float = 3.5
    grid_n: int = 8
    chains: int = 4
    # sampler validation
    validate_points: list[list[float]] = field(default_factory=lambda: [[0.5, 0.5], [1.0, 1.0], [0.3, 2.0]])
    validate_samples: int = 1_000_000
    validate_chains: int = 64

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.instance_dir = Path(self.instance_dir)
        if isinstance(self.bf, dict):
            self.bf = _nested(BfConfig, self.bf, "bf")
        if isinstance(self.bp, dict):
            self.bp = _nested(BpConfig, self.bp, "bp")

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for k in list(self.sizes) + [self.instance_k]:
            if int(k) < MIN_K:
                raise ConfigError(f"code sizes must be >= {MIN_K}, got {k}")
        for eps in self.epsilons:
            if not (0.0 <= eps < 0.5):
                raise ConfigError(f"epsilon must be in [0, 0.5), got {eps}")
        unknown = set(self.decoders) - set(BENCH_DECODERS)
        if unknown:
            raise ConfigError(f"unknown decoders {sorted(unknown)}; choose from {BENCH_DECODERS}")
        if self.trials < 1 or self.chains < 1 or self.n_instances < 1 or self.validate_samples < 1:
            raise ConfigError("trial, chain, instance and sample counts must be >= 1")
        if self.grid_n < 1 or self.beta_max < self.beta_min or self.gamma_max < self.gamma_min:
            raise ConfigError("parameter grid needs grid_n >= 1 and max >= min")
        if self.beta_min < 0 or self.gamma_min < 0:
            raise ConfigError("beta and gamma must be >= 0")
        if self.penalty_weight not in (3, 4):
            raise ConfigError(f"penalty_weight must be 3 or 4, got {self.penalty_weight}")
        if self.kernel not in ("metropolis", "rejection_free"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.coupling_bound < 0:
            raise ConfigError("coupling_bound must be >= 0")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs must be nonzero (use -1 for all cores)")
        return self

    @property
    def effective_trials(self) -> int:
        return FULL_TRIALS if self.full else self.trials

    def beta_values(self) -> np.ndarray:
        return np.linspace(self.beta_min, self.beta_max, self.grid_n)

    def gamma_values(self) -> np.ndarray:
        return np.linspace(self.gamma_min, self.gamma_max, self.grid_n)

    def bp_for(self, epsilon: float) -> BpConfig:
        if self.bp_true_epsilon and 0.0 < epsilon < 0.5:
            return replace(self.bp, prior_epsilon=epsilon)
        return self.bp

    def as_meta(self) -> dict:
        d = asdict(self)
        d["out_dir"] = str(self.out_dir)
        d["instance_dir"] = str(self.instance_dir)
        return d


def _nested(cls, values: dict, name: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**values)
    except InvalidParameterError as e:
        raise ConfigError(f"{name}: {e}") from e


def load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"config file not found: {path}")
    with open(path) as f:
        try:
            doc = yaml.load(f, Loader=yaml.SafeLoader) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: not valid YAML ({e})") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def build_config(kind: str, file_values: dict | None = None, flag_values: dict | None = None) -> ExperimentConfig:
    allowed = {f.name for f in fields(ExperimentConfig)}
    merged: dict = {}
    for source in (file_values or {}, {k: v for k, v in (flag_values or {}).items() if v is not None}):
        unknown = set(source) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in source.items():
            if key in ("bf", "bp") and isinstance(value, dict):
                merged[key] = {**merged.get(key, {}), **value}
            else:
                merged[key] = value
    merged["kind"] = kind
    try:
        return ExperimentConfig(**merged).validate()
    except InvalidParameterError as e:
        raise ConfigError(str(e)) from e


# ---------- argparse glue ----------
def add_common_arguments(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", type=Path, default=None, help="YAML file mirroring the flags")
    ap.add_argument("--seed", type=int, default=None, help="master seed")
    ap.add_argument("--out-dir", dest="out_dir", type=Path, default=None, help="where tables are written")
    ap.add_argument("--jobs", dest="n_jobs", type=int, default=None, help="joblib workers (-1 = all cores)")
    ap.add_argument("--verbose", action="store_true", help="debug logging")


COMMON_FLAGS = ("config", "verbose")


def config_from_args(kind: str, args: argparse.Namespace) -> ExperimentConfig:
    flags = {k: v for k, v in vars(args).items() if k not in COMMON_FLAGS and not k.startswith("_")}
    flags = {k: v for k, v in flags.items() if k in {f.name for f in fields(ExperimentConfig)}}
    # store_true flags left at False are "not given"
    if flags.get("full") is False:
        flags.pop("full")
    if flags.get("bp_true_epsilon") is False:
        flags.pop("bp_true_epsilon")
    bf = {k[3:]: v for k, v in vars(args).items() if k.startswith("bf_") and v is not None}
    bp = {k[3:]: v for k, v in vars(args).items() if k.startswith("bp_") and k != "bp_true_epsilon" and v is not None}
    if bf:
        flags["bf"] = bf
    if bp:
        flags["bp"] = bp
    return build_config(kind, load_config_file(getattr(args, "config", None)), flags)
