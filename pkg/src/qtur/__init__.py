"""Simulation and analysis of continuously measured open quantum systems
under Markovian feedback control: master equations, trajectory unravelings,
quantum Fisher information / dynamical activity, and numerical checks of
the measurement uncertainty relations."""

from .operator_algebra import (
    commutator_generator,
    dissipator,
    kron_sandwich,
    pseudoinverse,
    steady_state,
    superop_exp,
    trace_distance,
    unvectorize,
    vectorize,
)
from .master_equation import (
    HomodyneModelSpec,
    JumpModelSpec,
    default_dt,
    feedback_generator,
    lindblad_generator,
    load_homodyne_model,
    load_jump_model,
    propagate,
    save_model,
    wiseman_milburn_generator,
)
from .trajectories import (
    EnsembleStats,
    HomodyneTrajectory,
    JumpTrajectory,
    child_seed,
    homodyne_ensemble,
    homodyne_step,
    jump_ensemble,
    jump_step,
    simulate_homodyne,
    simulate_jump,
)
from .fisher import (
    ActivityResult,
    AsymptoticActivityResult,
    Parametrization,
    TwoSidedState,
    activity_homodyne,
    activity_jump,
    asymptotic_activity,
    evolve_two_sided,
    overlap,
    qfi,
    two_sided_homodyne_generator,
    two_sided_jump_generator,
)
from .experiments import (
    SweepRanges,
    SweepRecord,
    TwoLevelParams,
    bound_margin,
    emit_report,
    excited_state,
    ground_state,
    rabi_homodyne_observable,
    rabi_model,
    random_sweep,
)

__version__ = "0.1.0"
