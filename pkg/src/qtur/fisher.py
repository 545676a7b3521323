"""Quantum Fisher information and dynamical activity via two-sided propagation.

The overlap of two measurement-record purifications with nearby parameter
values is obtained as |Tr| of a generally non-Hermitian d x d matrix that
evolves under a two-sided generator: the left side carries operators at one
parameter value, the right side at another.  The Fisher information follows
from a symmetric small-increment finite difference of that overlap, with a
mandatory halving check that the increment sits in the quadratic regime.

The dynamical activity is the Fisher information of the time-rescaling
parametrization evaluated at zero; its long-time growth rate is also
computed in closed form from the steady state, a pseudoinverse of the
generator, and a pair of one-sided half-generators.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .master_equation import (
    HomodyneModelSpec,
    JumpModelSpec,
    _homodyne_liouvillian,
    _jump_liouvillian,
    _two_sided_hamiltonian,
    feedback_generator,
)
from .operator_algebra import (
    identity,
    pseudoinverse,
    require_density,
    steady_state,
    superop_exp,
    trace_vector,
    unvectorize,
    vectorize,
)

__all__ = [
    "Parametrization",
    "TwoSidedState",
    "ActivityResult",
    "AsymptoticActivityResult",
    "two_sided_jump_generator",
    "two_sided_homodyne_generator",
    "evolve_two_sided",
    "overlap",
    "qfi",
    "activity_jump",
    "activity_homodyne",
    "asymptotic_activity",
]

DEFAULT_DTHETA = 1e-3
CONVERGENCE_TOL = 1e-3
# Below this magnitude the Fisher information is numerically zero and the
# halving ratio is noise over noise; treat as converged.
_QFI_FLOOR = 1e-9


class Parametrization(enum.Enum):
    """Time-rescaling parameter injections.

    Both kinds scale the Hamiltonian by (1+theta) and the coupling/measured
    operators by sqrt(1+theta); they differ in whether the feedback operator
    is scaled along (homodyne) or left untouched (jump counting).
    """

    JUMP_SCALING = "jump_scaling"
    HOMODYNE_SCALING = "homodyne_scaling"


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not theta > -1.0:
        raise ValueError(f"scaling parameter must exceed -1, got {theta}")
    return theta


def _scaled(param: Parametrization, model, theta: float):
    """Return (H, couplings, F) at parameter value theta."""
    theta = _check_theta(theta)
    root = np.sqrt(1.0 + theta)
    H = (1.0 + theta) * model.H
    F = root * model.F if param is Parametrization.HOMODYNE_SCALING else model.F
    if isinstance(model, JumpModelSpec):
        ops = tuple(root * L for L in model.jumps)
    else:
        ops = root * model.Y
    return H, ops, F


def two_sided_jump_generator(
    model: JumpModelSpec, param: Parametrization, theta: float, phi: float
) -> np.ndarray:
    """Generator with theta-scaled operators on the left and phi-scaled on
    the right; at theta == phi == 0 it is the feedback generator itself."""
    H_l, Ls_l, F_l = _scaled(param, model, theta)
    H_r, Ls_r, F_r = _scaled(param, model, phi)
    return _jump_liouvillian(H_l, H_r, Ls_l, Ls_r, F_l, F_r, model.nus)


def two_sided_homodyne_generator(
    model: HomodyneModelSpec, param: Parametrization, theta: float, phi: float
) -> np.ndarray:
    """Two-sided version of the homodyne feedback generator."""
    H_l, Y_l, F_l = _scaled(param, model, theta)
    H_r, Y_r, F_r = _scaled(param, model, phi)
    return _homodyne_liouvillian(H_l, H_r, Y_l, Y_r, F_l, F_r, model.lam)


@dataclass
class TwoSidedState:
    """A two-sided state matrix with its parameter pair; generally
    non-Hermitian, and |Tr| is the record-purification overlap."""

    matrix: np.ndarray
    theta: float
    phi: float

    @property
    def trace_magnitude(self) -> float:
        return abs(complex(np.trace(self.matrix)))


def evolve_two_sided(
    gen: np.ndarray, rho0: np.ndarray, tau: float, theta: float = 0.0, phi: float = 0.0
) -> TwoSidedState:
    """Propagate an initial (ordinary) state under a two-sided generator."""
    out = unvectorize(superop_exp(gen, tau) @ vectorize(np.asarray(rho0, dtype=complex)))
    return TwoSidedState(matrix=out, theta=theta, phi=phi)


def _require_pure(psi0: np.ndarray) -> np.ndarray:
    psi0 = require_density(psi0, "psi0")
    top = float(np.linalg.eigvalsh(psi0)[-1])
    if abs(top - 1.0) > 1e-9:
        raise ValueError(
            f"initial state must be pure (largest eigenvalue {top:.12g}, expected 1)"
        )
    return psi0


def overlap(gen: np.ndarray, psi0: np.ndarray, tau: float) -> float:
    """|Tr| of the two-sided state evolved from a pure initial state."""
    psi0 = _require_pure(psi0)
    return evolve_two_sided(gen, psi0, tau).trace_magnitude


@dataclass
class ActivityResult:
    """Fisher-information result with its finite-difference diagnostics.

    convergence_ratio compares the estimate at dtheta with the one at
    dtheta/2; it must sit within 1e-3 of 1 for the result to count as
    converged.
    """

    B: float
    tau: float
    dtheta_used: float
    convergence_ratio: float
    converged: bool


def _ground_state_projector(dim: int) -> np.ndarray:
    proj = np.zeros((dim, dim), dtype=complex)
    proj[0, 0] = 1.0
    return proj


def _two_sided_gen(model, param, theta, phi):
    if isinstance(model, JumpModelSpec):
        return two_sided_jump_generator(model, param, theta, phi)
    return two_sided_homodyne_generator(model, param, theta, phi)


def qfi(
    model,
    param: Parametrization,
    tau: float,
    dtheta: float = DEFAULT_DTHETA,
    psi0: np.ndarray | None = None,
) -> ActivityResult:
    """Fisher information 8 (1 - overlap) / dtheta^2 at parameter value 0.

    The value is computed at dtheta and at dtheta/2; their ratio is stored
    and the result flagged non-converged when it strays from 1 by more than
    1e-3 (the finite difference has left the quadratic regime).
    """
    dtheta = float(dtheta)
    if dtheta <= 0:
        raise ValueError(f"dtheta must be positive, got {dtheta}")
    if psi0 is None:
        psi0 = _ground_state_projector(model.dim)
    psi0 = _require_pure(psi0)

    def estimate(step: float) -> float:
        ov = overlap(_two_sided_gen(model, param, 0.0, step), psi0, tau)
        return 8.0 * (1.0 - ov) / step**2

    value = estimate(dtheta)
    half = estimate(dtheta / 2.0)
    if max(abs(value), abs(half)) < _QFI_FLOOR:
        ratio, converged = 1.0, True
    elif half == 0.0:
        ratio, converged = np.inf, False
    else:
        ratio = value / half
        converged = abs(ratio - 1.0) <= CONVERGENCE_TOL
    return ActivityResult(
        B=value, tau=float(tau), dtheta_used=dtheta, convergence_ratio=float(ratio),
        converged=bool(converged),
    )


def activity_jump(
    model: JumpModelSpec,
    tau: float,
    dtheta: float = DEFAULT_DTHETA,
    psi0: np.ndarray | None = None,
) -> ActivityResult:
    """Dynamical activity of the jump-counting measurement with feedback."""
    return qfi(model, Parametrization.JUMP_SCALING, tau, dtheta, psi0)


def activity_homodyne(
    model: HomodyneModelSpec,
    tau: float,
    dtheta: float = DEFAULT_DTHETA,
    psi0: np.ndarray | None = None,
) -> ActivityResult:
    """Dynamical activity of the homodyne measurement with feedback."""
    return qfi(model, Parametrization.HOMODYNE_SCALING, tau, dtheta, psi0)


@dataclass
class AsymptoticActivityResult:
    """Long-time activity growth rate and its two components: the
    steady-state jump rate and the coherent correction 4(z1 + z2)."""

    rate: float
    a_term: float
    bc_term: float
    z1: complex
    z2: complex


def asymptotic_activity(model: JumpModelSpec) -> AsymptoticActivityResult:
    """Closed-form long-time rate of the jump activity.

    Requires a unique steady state of the feedback generator.  The two
    half-generators split the generator between its left-acting and
    right-acting parts (their sum is the full generator); the correction
    couples them through the pseudoinverse restricted off the stationary
    subspace.
    """
    d = model.dim
    eye = identity(d)
    gen = feedback_generator(model)
    rho_ss = steady_state(gen)

    k1 = -1j * np.kron(eye, model.H)
    k2 = 1j * np.kron(model.H.T, eye)
    fgen = None
    for L, nu in zip(model.jumps, model.nus):
        recycling = np.kron(L.conj(), L)
        if nu != 0.0:
            if fgen is None:
                fgen = _two_sided_hamiltonian(model.F, model.F)
            recycling = superop_exp(fgen, nu) @ recycling
        LdL = L.conj().T @ L
        k1 += 0.5 * (recycling - np.kron(eye, LdL))
        k2 += 0.5 * (recycling - np.kron(LdL.T, eye))

    r = vectorize(rho_ss)
    ell = trace_vector(d)
    proj = np.eye(d * d, dtype=complex) - np.outer(r, ell.conj())
    gplus = pseudoinverse(gen)
    left = ell.conj()
    z1 = complex(-(left @ k1 @ proj @ gplus @ proj @ k2 @ r))
    z2 = complex(-(left @ k2 @ proj @ gplus @ proj @ k1 @ r))
    if abs((z1 + z2).imag) > 1e-9:
        raise ValueError(f"z1 + z2 has non-negligible imaginary part {(z1 + z2).imag:.3g}")
    a_term = float(sum(np.trace(L @ rho_ss @ L.conj().T).real for L in model.jumps))
    bc_term = 4.0 * float((z1 + z2).real)
    return AsymptoticActivityResult(
        rate=a_term + bc_term, a_term=a_term, bc_term=bc_term, z1=z1, z2=z2
    )
