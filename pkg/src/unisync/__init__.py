"""Master-slave synchronisation of nonlinear ODEs.

Three controllers are provided: phase synchronisation of limit cycles
(:mod:`unisync.phase_sync`), finite-time tracking by discontinuous feedback
(:mod:`unisync.sliding_sync`) and chattering-free tracking by a singularly
perturbed dynamic feedback (:mod:`unisync.singular_sync`). Shared numerics
live in :mod:`unisync.numeric` and :mod:`unisync.limit_cycle`.
"""
from .errors import *  # noqa: F401,F403
from .limit_cycle import (AdjointCycle, FloquetData, LimitCycle, adjoint_cycle,
                          find_limit_cycle, monodromy)
from .models import CATALOG, get_model
from .numeric import (SymExp, Trajectory, VectorField, detect_crossing, integrate_adaptive,
                      integrate_fixed, sym_expm)
from .phase_sync import (MalkinProfile, PhaseCoupling, distance_integral, malkin_F, phase_lag,
                         simulate_phase_sync, theta_star)
from .report import SyncReport
from .singular_sync import (DynamicFeedback, SFunction, equivalent_control, reduced_solution,
                            simulate_dynamic, simulate_dynamic_perturbed)
from .sliding_sync import (Box, GainCertificate, StaticFeedback, certify_gains, simulate_static)

__version__ = "0.1.0"
