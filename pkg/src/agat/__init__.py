"""Almost-global tracking control of underactuated planar chains.

Simulation and control of the pendubot (two links, shoulder-actuated) and
its n-link generalization: group-exact SO(2) kinematics, Lagrangian
dynamics, navigation-function tracking of the passive joints, a
group-preserving fixed-step integrator, and reproducible scenario
fixtures behind a small CLI.
"""

from . import so2
from .pendubot import (CoeffSet, DegenerateInertiaError, PendubotParams,
                       PendubotState, accelerations, coefficients,
                       kinetic_energy, potential_energy, total_energy)
from .tracking import (CouplingSingularityError, ErrorState, GainSet,
                       ReferenceTrajectory, closed_loop_energy,
                       error_acceleration, error_state, psi,
                       psi_critical_points, simulate_error_flow,
                       stabilizing_force, tracking_torque)
from .chains import (ChainConfig, ChainState, DynamicsBlocks,
                     RankDeficiencyError, SingularMassMatrixError,
                     TorusNavigation, chain_accelerations, chain_blocks,
                     chain_dynamics, chain_tracking_torque,
                     coupling_rank_check, schur_inertia, torque_from_blocks,
                     torus_psi)
from .integrate import (IntegratorSpec, NonFiniteStateError, TrackingProbes,
                        TrajectoryRecord, lie_rk4_step, simulate, step,
                        zero_torque)
from .scenarios import (RefSpec, Scenario, apply_overrides,
                        builtin_scenarios, parse_scenario, run_scenario,
                        serialize_scenario, write_csv)

__version__ = "0.1.0"
