"""
Append-only result store.

Layout under the store root (``$PINLAB_STORE`` or ``./pinlab-store``)::

    <experiment id>/manifest.json   config, seed, tool version, creation time
    <experiment id>/results.jsonl   one ResultRecord per line, append-only
    <experiment id>/timings.jsonl   wall time per record

Wall times live in their own file so that ``results.jsonl`` is a pure
function of the config and the seed.
"""
from __future__ import annotations

import datetime as _dt
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from .. import __version__

STORE_ENV = "PINLAB_STORE"


class StoreError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResultRecord:
    experiment_id: str
    operation: str
    point: dict
    estimate: float
    stderr: float
    n_samples: int
    seed_range: tuple      # (point seed, first replica, last replica + 1)

    def key(self) -> str:
        return json.dumps([self.experiment_id, self.operation, self.point], sort_keys=True)

    def to_json(self) -> str:
        d = asdict(self)
        d["seed_range"] = list(self.seed_range)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "ResultRecord":
        d = json.loads(line)
        d["seed_range"] = tuple(d["seed_range"])
        return cls(**d)


@dataclass(frozen=True)
class ExperimentManifest:
    experiment_id: str
    created: str
    tool_version: str
    master_seed: int
    config: dict


def store_root(root=None) -> Path:
    return Path(root or os.environ.get(STORE_ENV) or "pinlab-store")


class Store:
    def __init__(self, root=None):
        self.root = store_root(root)

    def ensure_writable(self):
        """Fail early, before any computation, when the root cannot be written."""
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            probe = self.root / ".write-probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise StoreError(f"store {self.root} is not writable: {exc}") from exc

    def exp_dir(self, exp_id: str) -> Path:
        return self.root / exp_id

    def experiments(self) -> list[str]:
        if not self.root.is_dir():
            return []
        return sorted(p.name for p in self.root.iterdir() if (p / "manifest.json").is_file())

    def open_experiment(self, exp_id: str, config: dict, master_seed: int) -> ExperimentManifest:
        d = self.exp_dir(exp_id)
        d.mkdir(parents=True, exist_ok=True)
        path = d / "manifest.json"
        if path.exists():
            return self.manifest(exp_id)
        created = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        man = ExperimentManifest(exp_id, created, __version__, master_seed, config)
        path.write_text(json.dumps(asdict(man), indent=2, sort_keys=True) + "\n")
        return man

    def manifest(self, exp_id: str) -> ExperimentManifest:
        path = self.exp_dir(exp_id) / "manifest.json"
        if not path.is_file():
            known = ", ".join(self.experiments()) or "none"
            raise StoreError(f"unknown experiment {exp_id!r}; known ids: {known}")
        return ExperimentManifest(**json.loads(path.read_text()))

    def records(self, exp_id: str) -> list[ResultRecord]:
        self.manifest(exp_id)
        path = self.exp_dir(exp_id) / "results.jsonl"
        if not path.exists():
            return []
        with open(path) as fh:
            return [ResultRecord.from_json(line) for line in fh if line.strip()]

    def append(self, record: ResultRecord, wall_time: float):
        d = self.exp_dir(record.experiment_id)
        with open(d / "results.jsonl", "a") as fh:
            fh.write(record.to_json() + "\n")
        with open(d / "timings.jsonl", "a") as fh:
            fh.write(json.dumps({"key": record.key(), "wall_time": wall_time}) + "\n")
