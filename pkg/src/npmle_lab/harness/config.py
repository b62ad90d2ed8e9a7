"""Experiment configuration for rate studies, loaded from and saved to JSON.

Schema (all keys optional except ``n_grid`` and ``seeds``)::

    {
      "model": {"name": "stock-gam", "params": {"beta": 1.0}},
      "law": {"family": "uniform"},
      "n_grid": [256, 512, 1024],
      "seeds": [0, 1, 2],
      "architecture": {"source": "theory", "c_L": 1.0, "c_m": 1.0, "c_B": 1.0},
      "train": {"epochs": 200, "batch_size": 256, "lr": 0.001, "restarts": 3},
      "risk": {"method": "quadrature", "budget": null},
      "output_dir": "results"
    }

An explicit architecture reads ``{"source": "explicit", "hidden": [16, 16], "B": 50.0}``.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..datagen import InputLaw
from ..errors import ArgumentError
from ..models import build_model
from ..network.core import ArchSpec
from ..training import TrainConfig, architecture_from_theory

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    n_grid: tuple
    seeds: tuple
    model: dict = field(default_factory=lambda: {"name": "stock-gam", "params": {"beta": 1.0}})
    law: dict = field(default_factory=lambda: {"family": "uniform"})
    architecture: dict = field(default_factory=lambda: {"source": "theory"})
    train: dict = field(default_factory=dict)
    risk: dict = field(default_factory=lambda: {"method": "quadrature"})
    output_dir: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ArgumentError("n_grid must be nonempty and strictly increasing")
        if self.n_grid[0] < 2:
            raise ArgumentError("sample sizes must be at least 2")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ArgumentError("seeds must be nonempty and distinct")
        src = self.architecture.get("source", "theory")
        if src not in ("theory", "explicit"):
            raise ArgumentError("architecture source must be 'theory' or 'explicit'")
        if src == "explicit" and "hidden" not in self.architecture:
            raise ArgumentError("explicit architecture needs 'hidden' widths")
        TrainConfig(**self.train_kwargs())
        self.build_model()

    def train_kwargs(self):
        known = {f.name for f in fields(TrainConfig)}
        extra = set(self.train) - known
        if extra:
            raise ArgumentError(f"unknown train keys: {sorted(extra)}")
        return dict(self.train)

    def build_model(self):
        return build_model(self.model["name"], self.model.get("params", {}))

    def input_law(self, d):
        return InputLaw(self.law.get("family", "uniform"), d)

    def arch_for(self, spec, n):
        a = self.architecture
        if a.get("source", "theory") == "theory":
            return architecture_from_theory(spec, n, a.get("c_L", 1.0), a.get("c_m", 1.0), a.get("c_B", 1.0))
        B = a.get("B")
        return ArchSpec((spec.input_dim, *a["hidden"], spec.K), B=float("inf") if B is None else float(B))

    def train_config(self, seed):
        return TrainConfig(**{**self.train_kwargs(), "seed": seed})

    def to_dict(self):
        out = asdict(self)
        out["n_grid"], out["seeds"] = list(self.n_grid), list(self.seeds)
        return out

    def content_hash(self):
        """Hash of everything that affects numbers (the output directory does not)."""
        body = {k: v for k, v in self.to_dict().items() if k != "output_dir"}
        body["schema_version"] = SCHEMA_VERSION
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_output(self, path):
        return replace(self, output_dir=str(path))

    @classmethod
    def from_dict(cls, obj):
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known - {"schema_version"}
        if extra:
            raise ArgumentError(f"unknown config keys: {sorted(extra)}")
        if "n_grid" not in obj or "seeds" not in obj:
            raise ArgumentError("config needs 'n_grid' and 'seeds'")
        return cls(**{k: v for k, v in obj.items() if k in known})


def load_config(path):
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(obj)


def save_config(cfg, path):
    body = {"schema_version": SCHEMA_VERSION, **cfg.to_dict()}
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
