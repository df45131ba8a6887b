"""Numerical laboratory for the disordered pinning model with heavy-tailed disorder."""
from .disorder import (EnvironmentLaw, EnvironmentSample, TiltedLaw, env_tail, make_env_law,
                       sample_env, sample_tilted, tilted_cdf, tilted_tail)
from .errors import DomainError
from .mc import Estimate, replica_rng, run_replicas
from .polymer import (FreeEnergyEstimate, PartitionTable, PolymerParams, contact_profile,
                      critical_point_scan, default_params, forward_partition, homogeneous_free_energy,
                      homogeneous_g, homogeneous_log_partition, quenched_free_energy_mc,
                      window_partition)
from .renewal import (InterArrivalLaw, RenewalMassTable, RenewalPath, doney_constant,
                      enumerate_paths, make_zeta_law, renewal_mass, sample_bridge, sample_path)

__version__ = "0.1.0"
