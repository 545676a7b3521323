"""Dense complex linear algebra for small open quantum systems.

Operators are plain numpy arrays of shape (d, d); superoperators are
(d*d, d*d) arrays acting on column-stacked operators.  The column-stacking
convention is fixed once and for all:

    vec(A @ B @ C) = kron(C.T, A) @ vec(B),

with entry B[i, j] stored at flat position j*d + i.  Every superoperator in
the package is built against this convention.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

__all__ = [
    "HERMITIAN_TOL",
    "TRACE_TOL",
    "EIGENVALUE_FLOOR",
    "vectorize",
    "unvectorize",
    "kron_sandwich",
    "commutator_generator",
    "dissipator",
    "superop_exp",
    "pseudoinverse",
    "steady_state",
    "identity",
    "hermitize",
    "is_hermitian",
    "require_hermitian",
    "require_density",
    "trace_distance",
    "trace_vector",
]

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8
# Relative singular-value cutoff; Liouvillians carry an exact zero mode
# that must be cleanly truncated.
PINV_RCOND = 1e-12
ZERO_MODE_GAP = 1e-8


def _as_square(A: np.ndarray, name: str = "operator") -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    return A


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def hermitize(A: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian part, (A + A^dag)/2."""
    return 0.5 * (A + A.conj().T)


def is_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(A)
    return bool(np.all(np.abs(A - A.conj().T) <= tol))


def require_hermitian(A: np.ndarray, name: str = "operator", tol: float = HERMITIAN_TOL) -> np.ndarray:
    A = _as_square(A, name)
    if not is_hermitian(A, tol):
        dev = float(np.max(np.abs(A - A.conj().T)))
        raise ValueError(f"{name} must be Hermitian to {tol:g} (deviation {dev:.3g})")
    return A


def require_density(rho: np.ndarray, name: str = "rho") -> np.ndarray:
    """Validate a density operator: Hermitian, unit trace, nonnegative spectrum."""
    rho = require_hermitian(rho, name)
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{name} must have trace 1 (got {tr:.12g})")
    evals = np.linalg.eigvalsh(hermitize(rho))
    if evals.min() < EIGENVALUE_FLOOR:
        raise ValueError(f"{name} has negative eigenvalue {evals.min():.3g}")
    return rho


def vectorize(A: np.ndarray) -> np.ndarray:
    """Column-stack a square matrix: A[i, j] lands at position j*d + i."""
    A = _as_square(A)
    return A.T.reshape(-1).copy()


def unvectorize(v: np.ndarray) -> np.ndarray:
    """Invert :func:`vectorize`; the input length must be a perfect square."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a stacked square matrix")
    return v.reshape(d, d).T.copy()


def trace_vector(dim: int) -> np.ndarray:
    """vec(identity); pairing with it under the Hilbert-Schmidt product takes traces."""
    return vectorize(identity(dim))


def kron_sandwich(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Superoperator S with S @ vec(B) = vec(A @ B @ C)."""
    A = _as_square(A, "A")
    C = _as_square(C, "C")
    if A.shape != C.shape:
        raise ValueError(f"dimension mismatch: A is {A.shape}, C is {C.shape}")
    return np.kron(C.T, A)


def commutator_generator(H: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> -i[H, rho]; H must be Hermitian."""
    H = require_hermitian(H, "H")
    d = H.shape[0]
    eye = identity(d)
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def dissipator(L: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> L rho L^dag - {L^dag L, rho}/2."""
    L = _as_square(L, "L")
    LdL = L.conj().T @ L
    eye = identity(L.shape[0])
    return np.kron(L.conj(), L) - 0.5 * (np.kron(eye, LdL) + np.kron(LdL.T, eye))


def superop_exp(S: np.ndarray, t: float) -> np.ndarray:
    """Matrix exponential exp(S*t)."""
    S = _as_square(S, "S")
    if not np.all(np.isfinite(S)):
        raise ValueError("superoperator has non-finite entries")
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    return scipy.linalg.expm(S * t)


def pseudoinverse(S: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff."""
    S = _as_square(S, "S")
    if not np.all(np.isfinite(S)):
        raise ValueError("superoperator has non-finite entries")
    return np.linalg.pinv(S, rcond=PINV_RCOND)


def steady_state(S: np.ndarray) -> np.ndarray:
    """Extract the unique trace-one fixed point of a trace-preserving generator.

    The zero eigenvalue must be simple: if the second-smallest eigenvalue
    magnitude falls below the gap threshold the zero eigenspace is treated
    as degenerate and an error is raised reporting its multiplicity.
    """
    S = _as_square(S, "S")
    evals = np.linalg.eigvals(S)
    mags = np.sort(np.abs(evals))
    if mags.size > 1 and mags[1] <= ZERO_MODE_GAP:
        multiplicity = int(np.sum(np.abs(evals) <= ZERO_MODE_GAP))
        raise ValueError(
            f"zero eigenvalue of the generator is degenerate (multiplicity {multiplicity})"
        )
    # Null vector from the SVD; more robust than the eigenvector for the
    # nearly defective spectra Liouvillians tend to have.
    _, _, vh = np.linalg.svd(S)
    rho = unvectorize(vh[-1].conj())
    rho = hermitize(rho)
    tr = float(np.trace(rho).real)
    if abs(tr) < 1e-14:
        raise ValueError("steady-state candidate has vanishing trace")
    rho /= tr
    residual = float(np.linalg.norm(S @ vectorize(rho)))
    if residual > 1e-10:
        raise ValueError(f"steady-state residual {residual:.3g} exceeds 1e-10")
    evs = np.linalg.eigvalsh(rho)
    if evs.min() < EIGENVALUE_FLOOR:
        raise ValueError(f"steady state has negative eigenvalue {evs.min():.3g}")
    return rho


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma."""
    diff = hermitize(np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
