"""Pipeline configuration: TOML file, environment overrides, CLI flags."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..edge_features.hoprec import EmbedParams

ENV_PREFIX = "TEMPLINK_"


@dataclass
class PipelineConfig:
    records: str | None = None
    pairs: str | None = None
    labels: str | None = None
    out_dir: str = "run"

    t0: float = 0.9
    dt: float = 0.15
    t_predict: float = 1.0
    newborn_width: float = 0.1
    t_cut: float = 0.5
    inject_fraction: float = 0.07
    fit_fraction: float = 0.75
    k_folds: int = 4
    imputation: str = "newborn"     # newborn | seen | zero

    classifier: str = "mlp"         # mlp | logistic
    arch: tuple = (13, 13, 13, 13, 13)
    mlp_lr: float = 1e-3
    mlp_batch: int = 200
    mlp_max_epochs: int = 200
    mlp_alpha: float = 1e-4
    mlp_patience: int = 10
    logistic_l2: float = 1.0

    embed: EmbedParams = field(default_factory=EmbedParams)

    data_seed: int = 0
    embed_seed: int = 0
    model_seed: int = 0
    threads: int = 1
    deterministic: bool = True

    def __post_init__(self):
        self.arch = tuple(int(a) for a in self.arch)
        if isinstance(self.embed, dict):
            self.embed = EmbedParams(**self.embed)
        self.validate()

    def validate(self) -> None:
        if not self.t0 - 2 * self.dt > 0:
            raise ValueError("config: t0 - 2*dt must be positive")
        if not self.t_predict - 2 * self.dt > 0:
            raise ValueError("config: t_predict - 2*dt must be positive")
        for name in ("inject_fraction", "fit_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"config: {name} must lie in [0, 1]")
        if self.imputation not in ("newborn", "seen", "zero"):
            raise ValueError(f"config: unknown imputation {self.imputation!r}")
        if self.classifier not in ("mlp", "logistic"):
            raise ValueError(f"config: unknown classifier {self.classifier!r}")

    def embed_params(self) -> EmbedParams:
        threads = 1 if self.deterministic else self.threads
        return dataclasses.replace(self.embed, seed=self.embed_seed, threads=threads)

    def with_seed(self, seed: int) -> "PipelineConfig":
        return dataclasses.replace(self, data_seed=seed, embed_seed=seed, model_seed=seed)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["arch"] = list(self.arch)
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_SECTION_KEYS = {
    "paths": ("records", "pairs", "labels", "out_dir"),
    "time": ("t0", "dt", "t_predict", "newborn_width", "t_cut"),
    "dataset": ("inject_fraction", "fit_fraction", "k_folds", "imputation"),
    "model": ("classifier", "arch", "mlp_lr", "mlp_batch", "mlp_max_epochs", "mlp_alpha",
              "mlp_patience", "logistic_l2"),
    "seeds": ("data_seed", "embed_seed", "model_seed"),
    "run": ("threads", "deterministic"),
}


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, tuple):
        return tuple(int(x) for x in value.replace("x", ",").split(",") if x.strip())
    return value


def load_config(path=None, env: dict | None = None, **overrides) -> PipelineConfig:
    """Defaults, then the TOML file, then ``TEMPLINK_*`` variables, then ``overrides``.

    TOML sections: ``[paths] [time] [dataset] [model] [seeds] [run] [embedding]``.
    """
    values: dict = {}
    embed: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
        for section, body in doc.items():
            if section == "embedding":
                embed.update(body)
            elif section in _SECTION_KEYS:
                for k, v in body.items():
                    if k not in _SECTION_KEYS[section]:
                        raise ValueError(f"config: unknown key {section}.{k}")
                    values[k] = v
            else:
                raise ValueError(f"config: unknown section [{section}]")
    base = PipelineConfig()
    env = os.environ if env is None else env
    for key, raw in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name.startswith("embed_") and hasattr(base.embed, name[6:]):
            embed[name[6:]] = _coerce(raw, getattr(base.embed, name[6:]))
        elif hasattr(base, name) and name != "embed":
            values[name] = _coerce(raw, getattr(base, name))
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg_embed = dataclasses.asdict(base.embed)
    cfg_embed.update(embed)
    return PipelineConfig(**values, embed=EmbedParams(**cfg_embed))


def config_from_dict(d: dict) -> PipelineConfig:
    d = dict(d)
    d["embed"] = EmbedParams(**d.get("embed", {}))
    return PipelineConfig(**d)
