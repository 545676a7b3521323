"""Shared constructors for the test suite."""

from __future__ import annotations

import numpy as np

from qtur import HomodyneModelSpec, JumpModelSpec, TwoLevelParams, rabi_model

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)

GROUND = np.diag([1.0, 0.0]).astype(complex)
EXCITED = np.diag([0.0, 1.0]).astype(complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)
# (|g> - i|e>)/sqrt(2); the y-axis Bloch eigenstate used by the sweep tests
Y_MINUS = 0.5 * np.array([[1.0, 1.0j], [-1.0j, 1.0]], dtype=complex)

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (A + A.conj().T)


def random_matrix(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))


def random_density(rng: np.random.Generator, d: int) -> np.ndarray:
    G = random_matrix(rng, d)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure(rng: np.random.Generator, d: int) -> np.ndarray:
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def decay_model(kappa: float = 1.0, weight: float = 1.0) -> JumpModelSpec:
    """Bare decay channel, no Hamiltonian, no feedback action (F = 0)."""
    return JumpModelSpec(
        H=np.zeros((2, 2)),
        jumps=(np.sqrt(kappa) * SIGMA_MINUS,),
        F=np.zeros((2, 2)),
        nus=(weight,),
    )


def random_rabi(rng: np.random.Generator, nu: float) -> tuple[TwoLevelParams, JumpModelSpec]:
    delta, omega, kappa, tau = rng.uniform(0.1, 3.0, 4)
    p = TwoLevelParams(delta=delta, omega=omega, kappa=kappa, nu=nu)
    return p, rabi_model(p)


def random_jump_model(rng: np.random.Generator, d: int = 2, n_channels: int = 1,
                      nu: float = 1.0) -> JumpModelSpec:
    return JumpModelSpec(
        H=random_hermitian(rng, d),
        jumps=tuple(random_matrix(rng, d, 0.8) for _ in range(n_channels)),
        F=random_hermitian(rng, d),
        nus=tuple(nu for _ in range(n_channels)),
    )


def random_homodyne_model(rng: np.random.Generator, d: int = 2, lam: float = 1.0) -> HomodyneModelSpec:
    return HomodyneModelSpec(
        H=random_hermitian(rng, d),
        Y=random_hermitian(rng, d),
        F=random_hermitian(rng, d),
        lam=lam,
    )
