"""Configuration, result store, sweeps, acceptance checks and the CLI."""
from .checks import CheckResult, verify
from .config import ConfigError, SweepConfig
from .store import ExperimentManifest, ResultRecord, Store, StoreError
from .sweep import MarginalRow, marginal_scan, run_sweep
