"""Quantum-jump trajectories and photon counting statistics.

Unravels the feedback master equation into stochastic trajectories, counts
emissions, and checks the ensemble against both the deterministic solution
and an exact closed form in the pure-decay limit.
"""

import numpy as np

from qtur import (
    JumpModelSpec,
    TwoLevelParams,
    excited_state,
    feedback_generator,
    ground_state,
    jump_ensemble,
    propagate,
    rabi_model,
    simulate_jump,
    trace_distance,
)

# One trajectory, fully reproducible from its seed.
model = rabi_model(TwoLevelParams(delta=1.0, omega=1.5, kappa=1.0, nu=1.0))
traj = simulate_jump(model, ground_state(), tau=4.0, dt=1e-3, seed=8)
print("single trajectory, tau = 4:")
print("  jumps at t =", np.round(traj.jump_times, 3))
print("  total count =", int(traj.counts[0]))

# Pure decay from the excited state is a Bernoulli experiment: at most one
# emission, with success probability 1 - exp(-kappa tau).
decay = JumpModelSpec(
    H=np.zeros((2, 2)),
    jumps=(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),),
    F=np.zeros((2, 2)),
    nus=(1.0,),
)
stats = jump_ensemble(decay, excited_state(), tau=1.0, dt=1e-3, n_traj=50_000, master_seed=42)
p = 1.0 - np.exp(-1.0)
print("\npure decay, 5e4 trajectories:")
print(f"  <N>    = {stats.mean:.5f}   exact p        = {p:.5f}")
print(f"  Var[N] = {stats.variance:.5f}   exact p(1-p) = {p * (1 - p):.5f}")

# The trajectory average reproduces the feedback master equation.
stats = jump_ensemble(model, ground_state(), tau=3.0, dt=1e-3, n_traj=10_000, master_seed=1)
exact = propagate(feedback_generator(model), ground_state(), 3.0)
print("\ndriven atom with feedback, 1e4 trajectories at tau = 3:")
print("  mean conditioned state vs ensemble solution:",
      f"trace distance = {trace_distance(stats.mean_state, exact):.4f}")
print(f"  counting statistics: <N> = {stats.mean:.3f}, Var[N] = {stats.variance:.3f},",
      f"precision Var/<N>^2 = {stats.variance / stats.mean**2:.4f}")
