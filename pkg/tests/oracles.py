"""Independent oracles for the test suite.

Everything here deliberately avoids the library's superoperator route:
two-sided equations are integrated with fixed-step RK4 directly in operator
form (d x d matrix products, feedback rotations from eigendecompositions),
and counting moments come from a tilted-generator characteristic function.
"""

from __future__ import annotations

import numpy as np

from qtur.master_equation import JumpModelSpec, _two_sided_hamiltonian
from qtur.operator_algebra import unvectorize, vectorize
import scipy.linalg


def _herm_exp(F: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i * angle * F) for Hermitian F via eigendecomposition."""
    vals, vecs = np.linalg.eigh(F)
    return (vecs * np.exp(-1j * angle * vals)) @ vecs.conj().T


def _scaled_jump(model, theta: float, scale_feedback: bool):
    root = np.sqrt(1.0 + theta)
    H = (1.0 + theta) * model.H
    Ls = [root * L for L in model.jumps]
    F = root * model.F if scale_feedback else model.F
    return H, Ls, F


def two_sided_jump_rhs_factory(model, theta: float, phi: float, scale_feedback=False):
    H_l, Ls_l, F_l = _scaled_jump(model, theta, scale_feedback)
    H_r, Ls_r, F_r = _scaled_jump(model, phi, scale_feedback)
    rot = []
    for L_l, L_r, nu in zip(Ls_l, Ls_r, model.nus):
        V_l = _herm_exp(F_l, nu)
        V_r = _herm_exp(F_r, nu).conj().T
        rot.append((L_l, L_r, V_l, V_r, L_l.conj().T @ L_l, L_r.conj().T @ L_r))

    def rhs(rho):
        out = -1j * (H_l @ rho - rho @ H_r)
        for L_l, L_r, V_l, V_r, LdL_l, LdL_r in rot:
            out = out + V_l @ (L_l @ rho @ L_r.conj().T) @ V_r
            out = out - 0.5 * (LdL_l @ rho) - 0.5 * (rho @ LdL_r)
        return out

    return rhs


def two_sided_homodyne_rhs_factory(model, theta: float, phi: float):
    root_l, root_r = np.sqrt(1.0 + theta), np.sqrt(1.0 + phi)
    H_l, H_r = (1.0 + theta) * model.H, (1.0 + phi) * model.H
    Y_l, Y_r = root_l * model.Y, root_r * model.Y
    F_l, F_r = root_l * model.F, root_r * model.F
    lam = model.lam

    def fsup(X):
        return -1j * (F_l @ X - X @ F_r)

    def rhs(rho):
        out = -1j * (H_l @ rho - rho @ H_r)
        out = out + fsup(fsup(rho)) / (8.0 * lam)
        out = out + 0.5 * fsup(rho @ Y_r + Y_l @ rho)
        out = out + lam * (Y_l @ rho @ Y_r)
        out = out - 0.5 * lam * (rho @ Y_r @ Y_r) - 0.5 * lam * (Y_l @ Y_l @ rho)
        return out

    return rhs


def rk4_evolve(rhs, rho0: np.ndarray, tau: float, dt: float) -> np.ndarray:
    """Classical fixed-step RK4 on a matrix-valued linear ODE."""
    n_steps = max(1, int(round(tau / dt)))
    h = tau / n_steps
    rho = np.array(rho0, dtype=complex)
    for _ in range(n_steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * h * k1)
        k3 = rhs(rho + 0.5 * h * k2)
        k4 = rhs(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rho


def overlap_rk4(rhs, psi0: np.ndarray, tau: float, dt: float) -> float:
    return abs(complex(np.trace(rk4_evolve(rhs, psi0, tau, dt))))


def qfi_rk4_jump(model, tau, dtheta, psi0, dt=1e-5, scale_feedback=False):
    """Finite-difference Fisher information from the RK4-integrated overlap,
    at dtheta and dtheta/2, plus the Richardson-extrapolated value (the
    leading finite-difference error is first order in dtheta)."""

    def estimate(step):
        rhs = two_sided_jump_rhs_factory(model, 0.0, step, scale_feedback)
        return 8.0 * (1.0 - overlap_rk4(rhs, psi0, tau, dt)) / step**2

    full = estimate(dtheta)
    half = estimate(dtheta / 2.0)
    return full, half, 2.0 * half - full


def qfi_rk4_homodyne(model, tau, dtheta, psi0, dt=1e-5):
    def estimate(step):
        rhs = two_sided_homodyne_rhs_factory(model, 0.0, step)
        return 8.0 * (1.0 - overlap_rk4(rhs, psi0, tau, dt)) / step**2

    full = estimate(dtheta)
    half = estimate(dtheta / 2.0)
    return full, half, 2.0 * half - full


def tilted_jump_generator(model: JumpModelSpec, u: float) -> np.ndarray:
    """Counting-field generator: every recycling term is weighted by e^u, so
    the trace of the propagated state is the moment generating function of
    the total jump count."""
    d = model.dim
    eye = np.eye(d, dtype=complex)
    gen = _two_sided_hamiltonian(model.H, model.H)
    for L, nu in zip(model.jumps, model.nus):
        rec = np.kron(L.conj(), L)
        if nu != 0.0:
            rec = scipy.linalg.expm(nu * _two_sided_hamiltonian(model.F, model.F)) @ rec
        LdL = L.conj().T @ L
        gen += np.exp(u) * rec - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron((LdL).T, eye)
    return gen


def exact_count_moments(model: JumpModelSpec, rho0: np.ndarray, tau: float, h: float = 1e-4):
    """Exact mean and variance of the total jump count via second-order
    numerical differentiation of the cumulant generating function."""

    def ln_mgf(u):
        prop = scipy.linalg.expm(tilted_jump_generator(model, u) * tau)
        return float(np.log(np.trace(unvectorize(prop @ vectorize(rho0))).real))

    lp, lm = ln_mgf(h), ln_mgf(-h)
    return (lp - lm) / (2.0 * h), (lp + lm) / h**2
