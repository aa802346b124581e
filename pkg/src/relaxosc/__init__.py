"""Relaxation oscillations in Gause-type predator-prey systems with a small
predator death rate: singular-limit predictions and full-system checks."""

__version__ = "0.1.0"

from .criteria import (AnalysisReport, ChiRoot, SmallCLimits, Stability, Verdict,
                       classify_roots, holling4_kappa_star, holling4_q, predict_dynamics,
                       scan_chi_roots, small_c_limits)
from .fast_orbit import (FastOrbit, OrbitIntegrationError, SingularConfiguration, chi,
                         chi_crosscheck, integrate_fast_orbit, lambda_, singular_configuration)
from .full_sim import (CycleResult, EquilibriumInfo, NoReturnError, SimulationError, Trajectory,
                       empirical_entry_exit, equilibrium, find_cycles, floquet_integral,
                       hausdorff_distance, hausdorff_to_config, isocline_return_map, simulate)
from .model import (ConfigError, Family, HumpClass, IsoclineShape, ModelSpec, H_conjugate, H_eval,
                    classify_isocline, dump_config, isocline_eval, load_config, parse_config,
                    response_eval, ybar)
