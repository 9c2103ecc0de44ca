"""Cooperative (superradiant) decay of cold Rydberg gases.

Quantum-defect levels and Coulomb-approximation dipoles, a reduced two-atom
model of collective decay per channel, cascades through the level scheme
with dense-gas rates, and the superradiant/ASE boundary in the (C, ϱ) plane.
"""

from .atomic import (ConfigurationError, LevelRef, QuantumDefectTable, TransitionChannel,
                     TransitionError, downward_channels, einstein_A, exchange_splitting,
                     level_energy, load_defect_table, make_channel, radial_matrix_element,
                     transition_wavelength, vacuum_lifetime, zero_defect_table)
from .cascade import CascadeNetwork, PopulationTrajectory, build_network, evolve
from .config import RunConfig, RunManifest, load_config
from .dynamics import (EXPERIMENT_GEOMETRY, ChannelParameters, IntegrationError, IntegratorSettings,
                       RateSolverError, Regime, SampleGeometry, Trajectory, TruncationError,
                       classify, dicke_I, effective_decay_time, integrate_channel, simulate,
                       solve_rates, total_lifetime)
from .phasemap import CriticalCurve, critical_C, critical_curve, map_channels

__version__ = "0.1.0"
