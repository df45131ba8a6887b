"""
Sweep configuration.

A config is a JSON object::

    {"operation": "free-energy",
     "grid": {"beta": [0.0, 0.5], "h": [0.0, 0.1], "N": [200]},
     "replicas": 1000, "master_seed": 7, "store": "runs"}

Grid keys are named after the model parameters (alpha, gamma, a, beta, h, N,
theta, M, eta, A, ell).  Keys that are absent take the defaults below.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

PARAMS = ("alpha", "gamma", "a", "beta", "h", "N", "theta", "M", "eta", "A", "ell")

DEFAULTS = {"gamma": 1.5, "a": 0.5, "beta": 0.5, "h": 0.0, "N": 100, "theta": 0.8,
            "M": 1.0, "eta": 0.5, "A": 1.0, "ell": 64}

# parameters each estimator depends on; alpha defaults to 1 - 1/gamma
OPERATIONS = {
    "free-energy": ("alpha", "gamma", "a", "beta", "h", "N"),
    "frac-moment": ("alpha", "gamma", "a", "beta", "h", "N", "theta"),
    "dual-peak": ("gamma", "a", "M", "ell"),
    "penalty-cost": ("gamma", "a", "M", "ell", "theta"),
    "block-benefit": ("alpha", "gamma", "a", "beta", "M", "eta", "ell"),
}

ESTIMATE_COLUMN = {"free-energy": "f_hat", "frac-moment": "moment_hat", "dual-peak": "p_hat",
                   "penalty-cost": "cost_hat", "block-benefit": "benefit_hat"}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid sweep config:\n" + "\n".join(f"  - {p}" for p in problems))


def _open(lo, hi):
    return lambda v: lo < v < hi


_DOMAINS = {
    "alpha": (_open(0, 1), "in (0, 1)"),
    "gamma": (_open(1, 2), "in (1, 2)"),
    "a": (_open(0, 1), "in (0, 1)"),
    "beta": (lambda v: 0 <= v <= 1, "in [0, 1]"),
    "h": (lambda v: True, "real"),
    "N": (lambda v: float(v).is_integer() and v >= 1, "an integer >= 1"),
    "theta": (_open(0, 1), "in (0, 1)"),
    "M": (lambda v: v >= 0, ">= 0"),
    "eta": (_open(0, 1), "in (0, 1)"),
    "A": (lambda v: v > 0, "> 0"),
    "ell": (lambda v: float(v).is_integer() and v >= 3, "an integer >= 3"),
}


@dataclass(frozen=True)
class SweepConfig:
    operation: str
    grid: dict = field(default_factory=dict)
    replicas: int = 1000
    master_seed: int = 0
    store: str | None = None
    n_max: int = 10**6

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        problems = []
        known = {"operation", "grid", "replicas", "master_seed", "store", "n_max"}
        problems += [f"unknown field {k!r}" for k in sorted(set(data) - known)]
        if "operation" not in data:
            problems.append("missing field 'operation'")
        if problems:
            raise ConfigError(problems)
        cfg = cls(operation=data["operation"],
                  grid={k: list(v) if isinstance(v, (list, tuple)) else [v]
                        for k, v in dict(data.get("grid", {})).items()},
                  replicas=data.get("replicas", 1000),
                  master_seed=data.get("master_seed", 0),
                  store=data.get("store"),
                  n_max=data.get("n_max", 10**6))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def validate(self):
        problems = []
        if self.operation not in OPERATIONS:
            problems.append(f"operation must be one of {sorted(OPERATIONS)}, got {self.operation!r}")
        if not isinstance(self.replicas, int) or self.replicas < 1:
            problems.append(f"replicas must be an integer >= 1, got {self.replicas!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            problems.append(f"master_seed must be a nonnegative integer, got {self.master_seed!r}")
        if not isinstance(self.n_max, int) or self.n_max < 2:
            problems.append(f"n_max must be an integer >= 2, got {self.n_max!r}")
        allowed = OPERATIONS.get(self.operation, PARAMS)
        for key, values in self.grid.items():
            if key not in PARAMS:
                problems.append(f"grid: unknown parameter {key!r}")
                continue
            if key not in allowed:
                problems.append(f"grid: {key!r} is not used by {self.operation!r}")
            check, text = _DOMAINS[key]
            for v in values:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not check(v):
                    problems.append(f"grid: {key} = {v!r} must be {text}")
        if problems:
            raise ConfigError(problems)

    def to_dict(self) -> dict:
        return {"operation": self.operation, "grid": self.grid, "replicas": self.replicas,
                "master_seed": self.master_seed, "n_max": self.n_max}

    def canonical(self) -> str:
        # the store location does not change results, so it stays out of the id
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def experiment_id(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def points(self) -> list[dict]:
        """Grid points in a fixed order: cartesian product over the operation's keys."""
        keys = OPERATIONS[self.operation]
        if any(len(self.grid.get(k, [None])) == 0 for k in keys):
            return []
        axes = []
        for k in keys:
            if k in self.grid:
                axes.append(self.grid[k])
            elif k == "alpha":
                axes.append([None])
            else:
                axes.append([DEFAULTS[k]])
        out = []
        for combo in itertools.product(*axes):
            point = dict(zip(keys, combo))
            if point.get("alpha", 0) is None:
                point["alpha"] = 1 - 1 / point["gamma"]
            for k in ("N", "ell"):
                if k in point:
                    point[k] = int(point[k])
            out.append(point)
        return out

    def varied(self) -> list[str]:
        return [k for k in OPERATIONS[self.operation] if k in self.grid]


def write_example(path: str | Path):
    example = {"operation": "free-energy",
               "grid": {"beta": [0.0, 0.5], "h": [-0.05, 0.0, 0.05, 0.1], "N": [200]},
               "replicas": 512, "master_seed": 1}
    Path(path).write_text(json.dumps(example, indent=2) + "\n")
