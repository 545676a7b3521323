"""Ensemble-level generators for jump and homodyne measurement feedback.

Three deterministic generators are assembled as dense superoperators: the
plain Lindblad generator, the feedback Lindblad generator in which the
feedback rotation acts only on the jump recycling term, and the
Wiseman-Milburn generator for homodyne-based feedback.  All of them are
special cases of two-sided builders that place independently parametrized
operators on the left and right of the state; the one-sided generators are
the diagonal (left == right) evaluations, so reduction identities hold
exactly rather than to rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .operator_algebra import (
    identity,
    kron_sandwich,
    require_density,
    require_hermitian,
    superop_exp,
    unvectorize,
    vectorize,
)

__all__ = [
    "JumpModelSpec",
    "HomodyneModelSpec",
    "lindblad_generator",
    "feedback_generator",
    "wiseman_milburn_generator",
    "propagate",
    "load_jump_model",
    "load_homodyne_model",
    "save_model",
]


@dataclass(frozen=True)
class JumpModelSpec:
    """A jump-measured model: Hamiltonian, jump operators, feedback operator
    and per-channel feedback weights.  An empty channel list means closed
    unitary dynamics."""

    H: np.ndarray
    jumps: tuple[np.ndarray, ...]
    F: np.ndarray
    nus: tuple[float, ...]

    def __post_init__(self):
        H = require_hermitian(np.asarray(self.H, dtype=complex), "H")
        F = require_hermitian(np.asarray(self.F, dtype=complex), "F")
        jumps = tuple(np.asarray(L, dtype=complex) for L in self.jumps)
        nus = tuple(float(nu) for nu in self.nus)
        if len(jumps) != len(nus):
            raise ValueError(
                f"got {len(jumps)} jump operators but {len(nus)} feedback weights"
            )
        d = H.shape[0]
        for k, L in enumerate(jumps):
            if L.shape != (d, d):
                raise ValueError(f"jump operator {k} has shape {L.shape}, expected {(d, d)}")
        if F.shape != (d, d):
            raise ValueError(f"F has shape {F.shape}, expected {(d, d)}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "nus", nus)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.jumps)


@dataclass(frozen=True)
class HomodyneModelSpec:
    """A homodyne-measured model: Hamiltonian, measured observable Y,
    feedback operator F and measurement strength lam > 0."""

    H: np.ndarray
    Y: np.ndarray
    F: np.ndarray
    lam: float

    def __post_init__(self):
        H = require_hermitian(np.asarray(self.H, dtype=complex), "H")
        Y = require_hermitian(np.asarray(self.Y, dtype=complex), "Y")
        F = require_hermitian(np.asarray(self.F, dtype=complex), "F")
        d = H.shape[0]
        if Y.shape != (d, d) or F.shape != (d, d):
            raise ValueError("H, Y and F must share the same dimension")
        lam = float(self.lam)
        if not lam > 0:
            raise ValueError(f"measurement strength must be positive, got {lam}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self) -> int:
        return self.H.shape[0]


def _two_sided_hamiltonian(H_left: np.ndarray, H_right: np.ndarray) -> np.ndarray:
    """Matrix of rho -> -i (H_left rho - rho H_right)."""
    d = H_left.shape[0]
    eye = identity(d)
    return -1j * (np.kron(eye, H_left) - np.kron(H_right.T, eye))


def _jump_liouvillian(
    H_left: np.ndarray,
    H_right: np.ndarray,
    jumps_left: tuple[np.ndarray, ...],
    jumps_right: tuple[np.ndarray, ...],
    F_left: np.ndarray,
    F_right: np.ndarray,
    nus: tuple[float, ...],
) -> np.ndarray:
    d = H_left.shape[0]
    eye = identity(d)
    gen = _two_sided_hamiltonian(H_left, H_right)
    fgen = None
    for L_l, L_r, nu in zip(jumps_left, jumps_right, nus):
        recycling = np.kron(L_r.conj(), L_l)
        if nu != 0.0:
            if fgen is None:
                fgen = _two_sided_hamiltonian(F_left, F_right)
            recycling = superop_exp(fgen, nu) @ recycling
        gen += recycling
        gen -= 0.5 * np.kron(eye, L_l.conj().T @ L_l)
        gen -= 0.5 * np.kron((L_r.conj().T @ L_r).T, eye)
    return gen


def _homodyne_liouvillian(
    H_left: np.ndarray,
    H_right: np.ndarray,
    Y_left: np.ndarray,
    Y_right: np.ndarray,
    F_left: np.ndarray,
    F_right: np.ndarray,
    lam: float,
) -> np.ndarray:
    d = H_left.shape[0]
    eye = identity(d)
    fgen = _two_sided_hamiltonian(F_left, F_right)
    anti = np.kron(eye, Y_left) + np.kron(Y_right.T, eye)
    gen = _two_sided_hamiltonian(H_left, H_right)
    gen += (1.0 / (8.0 * lam)) * (fgen @ fgen)
    gen += 0.5 * (fgen @ anti)
    gen += lam * np.kron(Y_right.T, Y_left)
    gen -= 0.5 * lam * np.kron(eye, Y_left @ Y_left)
    gen -= 0.5 * lam * np.kron((Y_right @ Y_right).T, eye)
    return gen


def lindblad_generator(model: JumpModelSpec) -> np.ndarray:
    """Plain Lindblad generator; feedback weights are treated as zero."""
    zeros = tuple(0.0 for _ in model.nus)
    return _jump_liouvillian(
        model.H, model.H, model.jumps, model.jumps, model.F, model.F, zeros
    )


def feedback_generator(model: JumpModelSpec) -> np.ndarray:
    """Feedback Lindblad generator: each recycling term L rho L^dag is
    rotated by exp(nu * F-commutator) before entering the ensemble average."""
    return _jump_liouvillian(
        model.H, model.H, model.jumps, model.jumps, model.F, model.F, model.nus
    )


def wiseman_milburn_generator(model: HomodyneModelSpec) -> np.ndarray:
    """Ensemble generator for homodyne measurement of Y with instantaneous
    feedback through F at strength set by the measured output."""
    return _homodyne_liouvillian(
        model.H, model.H, model.Y, model.Y, model.F, model.F, model.lam
    )


def propagate(gen: np.ndarray, rho0: np.ndarray, tau: float) -> np.ndarray:
    """Evolve a density operator for time tau under a time-independent
    generator using one matrix exponential."""
    rho0 = require_density(rho0, "rho0")
    tau = float(tau)
    if tau < 0:
        raise ValueError(f"propagation time must be nonnegative, got {tau}")
    if tau == 0.0:
        return rho0.copy()
    return unvectorize(superop_exp(gen, tau) @ vectorize(rho0))


def default_dt(model: JumpModelSpec | HomodyneModelSpec) -> float:
    """Step-size rule keeping first-order errors below Monte Carlo noise:
    1e-3 divided by the largest rate scale in the model."""
    scale = 1.0
    scale = max(scale, float(np.linalg.norm(model.H, 2)))
    if isinstance(model, JumpModelSpec):
        for L in model.jumps:
            scale = max(scale, float(np.linalg.norm(L.conj().T @ L, 2)))
    else:
        scale = max(scale, model.lam)
    return 1e-3 / scale


# --- model files -----------------------------------------------------------
#
# JSON schema: {"dim": d, "H": [[...]], "jumps": [{"L": [[...]], "nu": x}],
# "F": [[...]], "Y": [[...]], "lambda": x}.  Matrices are row-major lists of
# rows; complex entries are [re, im] pairs.  "Y"/"lambda" appear only for
# homodyne models, "jumps" only for jump models.


def _matrix_to_json(A: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(A, dtype=complex)]


def _matrix_from_json(rows, dim: int, name: str) -> np.ndarray:
    A = np.asarray(
        [[complex(entry[0], entry[1]) for entry in row] for row in rows], dtype=complex
    )
    if A.shape != (dim, dim):
        raise ValueError(f"matrix {name!r} has shape {A.shape}, expected {(dim, dim)}")
    return A


def _read_model_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    with open(path) as fh:
        data = json.load(fh)
    if "dim" not in data or "H" not in data:
        raise ValueError(f"model file {path} must define 'dim' and 'H'")
    return data


def load_jump_model(path) -> JumpModelSpec:
    data = _read_model_file(path)
    d = int(data["dim"])
    H = _matrix_from_json(data["H"], d, "H")
    F = _matrix_from_json(data["F"], d, "F") if "F" in data else np.zeros((d, d))
    jumps, nus = [], []
    for k, entry in enumerate(data.get("jumps", [])):
        jumps.append(_matrix_from_json(entry["L"], d, f"jumps[{k}].L"))
        nus.append(float(entry.get("nu", 0.0)))
    return JumpModelSpec(H=H, jumps=tuple(jumps), F=F, nus=tuple(nus))


def load_homodyne_model(path) -> HomodyneModelSpec:
    data = _read_model_file(path)
    d = int(data["dim"])
    if "Y" not in data or "lambda" not in data:
        raise ValueError(f"homodyne model file {path} must define 'Y' and 'lambda'")
    H = _matrix_from_json(data["H"], d, "H")
    Y = _matrix_from_json(data["Y"], d, "Y")
    F = _matrix_from_json(data["F"], d, "F") if "F" in data else np.zeros((d, d))
    return HomodyneModelSpec(H=H, Y=Y, F=F, lam=float(data["lambda"]))


def save_model(model: JumpModelSpec | HomodyneModelSpec, path) -> None:
    data: dict = {"dim": model.dim, "H": _matrix_to_json(model.H), "F": _matrix_to_json(model.F)}
    if isinstance(model, JumpModelSpec):
        data["jumps"] = [
            {"L": _matrix_to_json(L), "nu": nu} for L, nu in zip(model.jumps, model.nus)
        ]
    else:
        data["Y"] = _matrix_to_json(model.Y)
        data["lambda"] = model.lam
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")
