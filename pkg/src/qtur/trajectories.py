"""Stochastic unravelings of the measurement-feedback master equations.

Two schemes are implemented: quantum-jump trajectories with an impulsive
feedback unitary after every jump, and diffusive homodyne trajectories with
output-proportional feedback applied continuously.  Ensembles are seeded
per trajectory with counter-derived child streams, so results are
independent of worker count and scheduling.

A batch of conditioned states is stored as an (n, d*d) array of
column-stacked density operators.  Per-step updates are conjugations by
outcome-dependent matrices, applied as (d*d, d*d) maps; the hot loops are
compiled with numba when it is available and fall back to vectorized numpy
otherwise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .master_equation import HomodyneModelSpec, JumpModelSpec
from .operator_algebra import require_density, unvectorize, vectorize

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    _HAVE_NUMBA = False

__all__ = [
    "JumpTrajectory",
    "HomodyneTrajectory",
    "EnsembleStats",
    "child_seed",
    "jump_step",
    "simulate_jump",
    "jump_ensemble",
    "homodyne_step",
    "simulate_homodyne",
    "homodyne_ensemble",
]

# Fixed block/chunk sizes: block boundaries must not depend on the worker
# count or ensemble statistics would not be bit-reproducible across runs
# with different parallelism.
_BLOCK = 8192
_TIME_CHUNK = 1024
_TRACE_FLOOR = 1e-12

_ERR_DT_COARSE = "outcome probabilities deviate from 1 by more than 10*dt^2; dt too coarse"
_ERR_TRACE = "conditioned state trace fell below 1e-12 (numerical blow-up)"


@dataclass
class JumpTrajectory:
    """One jump-unraveled trajectory record."""

    jump_times: np.ndarray
    channels: np.ndarray
    counts: np.ndarray
    weighted_count: float
    final_state: np.ndarray


@dataclass
class HomodyneTrajectory:
    """One diffusive trajectory record; Z is the time-integrated output."""

    Z: float
    sampled_outputs: np.ndarray | None
    final_state: np.ndarray


@dataclass
class EnsembleStats:
    """Summary statistics of a trajectory ensemble.

    `values` keeps the per-trajectory statistic (in trajectory order) so
    downstream error propagation can use higher sample moments.
    """

    n_traj: int
    mean: float
    variance: float
    std_error_mean: float
    std_error_variance: float
    mean_state: np.ndarray
    values: np.ndarray = field(repr=False, default=None)


def child_seed(master, index: int) -> np.random.SeedSequence:
    """Counter-style child stream derivation: child(master, i)."""
    if isinstance(master, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=master.entropy, spawn_key=(*master.spawn_key, int(index))
        )
    return np.random.SeedSequence(entropy=int(master), spawn_key=(int(index),))


def _num_steps(tau: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    return max(1, int(round(tau / dt)))


def _blocks(n: int):
    return [(s, min(s + _BLOCK, n)) for s in range(0, n, _BLOCK)]


def _run_block_jobs(jobs, n_workers: int):
    if n_workers <= 1:
        for job in jobs:
            job()
        return
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        for f in futures:
            f.result()


def _ensemble_stats(values: np.ndarray, final_vecs: np.ndarray) -> EnsembleStats:
    n = len(values)
    mean = float(values.mean())
    variance = float(values.var(ddof=1))
    centered = values - mean
    m2 = float((centered**2).mean())
    m4 = float((centered**4).mean())
    var_of_var = (m4 - m2 * m2 * (n - 3) / (n - 1)) / n
    return EnsembleStats(
        n_traj=n,
        mean=mean,
        variance=variance,
        std_error_mean=float(np.sqrt(variance / n)),
        std_error_variance=float(np.sqrt(max(var_of_var, 0.0))),
        mean_state=unvectorize(final_vecs.mean(axis=0)),
        values=values,
    )


# --- jump scheme ------------------------------------------------------------


class _JumpKernel:
    """Precomputed per-(model, dt) constants for the jump stepper."""

    def __init__(self, model: JumpModelSpec, dt: float):
        d = model.dim
        self.dim = d
        self.dt = float(dt)
        self.n_channels = model.n_channels
        eye = np.eye(d, dtype=complex)
        LdL = [L.conj().T @ L for L in model.jumps]
        A = sum(LdL, np.zeros((d, d), dtype=complex))
        M0 = eye - 0.5 * dt * A
        UH = scipy.linalg.expm(-1j * dt * model.H)
        # rows pair with a stacked state via Tr[rho X] = vec(rho) . X.ravel()
        self.q_rows = np.array([X.ravel() for X in LdL]).reshape(model.n_channels, d * d)
        self.a2_row = (A @ A).ravel()
        maps = [UH @ M0]
        for L, nu in zip(model.jumps, model.nus):
            V = scipy.linalg.expm(-1j * nu * model.F) if nu != 0.0 else eye
            maps.append(UH @ V @ (np.sqrt(dt) * L))
        # transposed conjugation maps: vec' = vec @ maps_T[z]
        self.maps_T = np.array([np.kron(C.conj(), C).T for C in maps])
        self.diag_idx = np.arange(d) * (d + 1)
        self.sum_tol = 10.0 * dt * dt

    def step_batch(self, V: np.ndarray, u: np.ndarray, counts: np.ndarray):
        """Vectorized reference step; advances a batch in place and returns
        (rows, channels) of the trajectories that jumped."""
        dt = self.dt
        n = len(V)
        if self.n_channels:
            q = dt * (V @ self.q_rows.T).real
        else:
            q = np.zeros((n, 0))
        excess = 0.25 * dt * dt * (V @ self.a2_row).real
        if excess.size and excess.max() > self.sum_tol:
            raise ValueError(_ERR_DT_COARSE)
        p0 = 1.0 - q.sum(axis=1) + excess
        if self.n_channels:
            thresholds = np.cumsum(np.concatenate([p0[:, None], q], axis=1), axis=1)
            z = (u[:, None] >= thresholds).sum(axis=1)
            np.clip(z, 0, self.n_channels, out=z)
        else:
            z = np.zeros(n, dtype=np.intp)
        new = V @ self.maps_T[0]
        jumped = np.nonzero(z)[0]
        for ch in np.unique(z[jumped]):
            rows = jumped[z[jumped] == ch]
            new[rows] = V[rows] @ self.maps_T[ch]
            counts[rows, ch - 1] += 1
        tr = new[:, self.diag_idx].sum(axis=1).real
        if tr.min() <= _TRACE_FLOOR:
            raise ValueError(_ERR_TRACE)
        V[:] = new / tr[:, None]
        return jumped, z[jumped]


if _HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _jump_rows_kernel(
        V, U, counts, q_rows, a2_row, maps_T, dt, sum_tol, d, step0,
        ev_row, ev_step, ev_chan, collect,
    ):
        """Row-major trajectory loop; returns the number of recorded events
        or -1 if the event buffers overflowed."""
        n_rows, span = U.shape
        dd = d * d
        n_ch = q_rows.shape[0]
        v_new = np.empty(dd, dtype=np.complex128)
        n_ev = 0
        for i in range(n_rows):
            v = V[i]
            for k in range(span):
                qsum = 0.0
                excess = 0.0
                for m in range(dd):
                    excess += (v[m] * a2_row[m]).real
                excess *= 0.25 * dt * dt
                if excess > sum_tol:
                    raise ValueError(
                        "outcome probabilities deviate from 1 by more than 10*dt^2; dt too coarse"
                    )
                u = U[i, k]
                z = 0
                cum = 0.0
                if n_ch > 0:
                    qs = np.empty(n_ch)
                    for c in range(n_ch):
                        acc = 0.0
                        for m in range(dd):
                            acc += (v[m] * q_rows[c, m]).real
                        qs[c] = dt * acc
                        qsum += qs[c]
                    cum = 1.0 - qsum + excess
                    if u >= cum:
                        for c in range(n_ch):
                            z = c + 1
                            cum += qs[c]
                            if u < cum:
                                break
                M = maps_T[z]
                for a in range(dd):
                    acc = 0.0 + 0.0j
                    for b in range(dd):
                        acc += v[b] * M[b, a]
                    v_new[a] = acc
                tr = 0.0
                for j in range(d):
                    tr += v_new[j * (d + 1)].real
                if tr <= 1e-12:
                    raise ValueError(
                        "conditioned state trace fell below 1e-12 (numerical blow-up)"
                    )
                inv = 1.0 / tr
                for a in range(dd):
                    v[a] = v_new[a] * inv
                if z > 0:
                    counts[i, z - 1] += 1
                    if collect:
                        if n_ev >= ev_row.shape[0]:
                            return -1
                        ev_row[n_ev] = i
                        ev_step[n_ev] = step0 + k
                        ev_chan[n_ev] = z
                        n_ev += 1
        return n_ev


_EMPTY_I64 = np.empty(0, dtype=np.int64)


def _run_jump_rows(
    kernel: _JumpKernel,
    V: np.ndarray,
    rngs: list,
    n_steps: int,
    counts: np.ndarray,
    collect_events: bool,
):
    """Drive a block of trajectories; uniforms are drawn row-per-trajectory
    in time chunks so a trajectory consumes its own stream sequentially.
    Returns a list of (row, time, channel) jump events when collecting."""
    events = []
    cap = 256
    done = 0
    while done < n_steps:
        span = min(_TIME_CHUNK, n_steps - done)
        U = np.empty((len(rngs), span))
        for i, rng in enumerate(rngs):
            U[i] = rng.random(span)
        if _HAVE_NUMBA:
            while True:
                if collect_events:
                    ev = [np.empty(cap, dtype=np.int64) for _ in range(3)]
                else:
                    ev = [_EMPTY_I64, _EMPTY_I64, _EMPTY_I64]
                snapshot = (V.copy(), counts.copy()) if collect_events else None
                n_ev = _jump_rows_kernel(
                    V, U, counts, kernel.q_rows, kernel.a2_row, kernel.maps_T,
                    kernel.dt, kernel.sum_tol, kernel.dim, done,
                    ev[0], ev[1], ev[2], collect_events,
                )
                if n_ev >= 0:
                    if collect_events:
                        events.extend(
                            (int(r), s * kernel.dt, int(c))
                            for r, s, c in zip(ev[0][:n_ev], ev[1][:n_ev], ev[2][:n_ev])
                        )
                    break
                V[:], counts[:] = snapshot
                cap *= 4
        else:
            for k in range(span):
                rows, chans = kernel.step_batch(V, U[:, k], counts)
                if collect_events and rows.size:
                    t = (done + k) * kernel.dt
                    events.extend(zip(rows.tolist(), [t] * rows.size, chans.tolist()))
        done += span
    return events


def jump_step(model: JumpModelSpec, rho_c: np.ndarray, dt: float, u: float):
    """One conditional update: select the outcome by inverse CDF on u with
    channels ordered 0..N_C, apply the matching Kraus map, the post-jump
    feedback unitary (jumps only) and the Hamiltonian step, then renormalize.

    Returns (z, rho_c') with z = 0 for the no-jump outcome.
    """
    rho_c = require_density(rho_c, "rho_c")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not 0.0 <= float(u) < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    kernel = _JumpKernel(model, dt)
    V = vectorize(rho_c)[None, :].copy()
    counts = np.zeros((1, model.n_channels), dtype=np.int64)
    rows, chans = kernel.step_batch(V, np.array([float(u)]), counts)
    z = int(chans[0]) if rows.size else 0
    return z, unvectorize(V[0])


def simulate_jump(
    model: JumpModelSpec, rho0: np.ndarray, tau: float, dt: float, seed
) -> JumpTrajectory:
    """Run one trajectory over [0, tau] with a deterministic stream derived
    from seed; jump events are recorded with the start time of their bin."""
    rho0 = require_density(rho0, "rho0")
    n_steps = _num_steps(tau, dt)
    kernel = _JumpKernel(model, dt)
    rng = np.random.default_rng(seed)
    V = vectorize(rho0)[None, :].copy()
    counts = np.zeros((1, model.n_channels), dtype=np.int64)
    events = _run_jump_rows(kernel, V, [rng], n_steps, counts, collect_events=True)
    times = np.array([t for _, t, _ in events])
    chans = np.array([ch for _, _, ch in events], dtype=np.int64)
    weighted = float(counts[0] @ np.asarray(model.nus)) if model.n_channels else 0.0
    return JumpTrajectory(
        jump_times=times,
        channels=chans,
        counts=counts[0],
        weighted_count=weighted,
        final_state=unvectorize(V[0]),
    )


def jump_ensemble(
    model: JumpModelSpec,
    rho0: np.ndarray,
    tau: float,
    dt: float,
    n_traj: int,
    master_seed,
    n_workers: int = 1,
    count_weights=None,
    dump_path=None,
) -> EnsembleStats:
    """Ensemble of jump trajectories; the statistic is the weighted count
    sum(w_z N_z), with w defaulting to the model's feedback weights.

    Trajectory i uses the stream child(master_seed, i); per-trajectory
    results land in index order, so statistics are bit-identical for any
    worker count.
    """
    if n_traj < 2:
        raise ValueError(f"n_traj must be at least 2, got {n_traj}")
    rho0 = require_density(rho0, "rho0")
    n_steps = _num_steps(tau, dt)
    kernel = _JumpKernel(model, dt)
    d = model.dim
    v0 = vectorize(rho0)
    finals = np.empty((n_traj, d * d), dtype=complex)
    all_counts = np.zeros((n_traj, model.n_channels), dtype=np.int64)
    collect = dump_path is not None
    block_events: dict[int, list] = {}

    def make_job(bi, start, end):
        def job():
            rows = end - start
            rngs = [
                np.random.default_rng(child_seed(master_seed, start + i)) for i in range(rows)
            ]
            V = np.tile(v0, (rows, 1))
            counts = np.zeros((rows, model.n_channels), dtype=np.int64)
            events = _run_jump_rows(kernel, V, rngs, n_steps, counts, collect)
            finals[start:end] = V
            all_counts[start:end] = counts
            if collect:
                block_events[bi] = [(start + i, t, ch) for i, t, ch in events]

        return job

    jobs = [make_job(bi, s, e) for bi, (s, e) in enumerate(_blocks(n_traj))]
    _run_block_jobs(jobs, n_workers)

    weights = np.asarray(model.nus if count_weights is None else count_weights, dtype=float)
    if weights.shape != (model.n_channels,):
        raise ValueError("count_weights must provide one weight per jump channel")
    values = all_counts @ weights if model.n_channels else np.zeros(n_traj)
    if dump_path is not None:
        rows = sorted(ev for b in sorted(block_events) for ev in block_events[b])
        _write_csv(
            dump_path,
            "trajectory_id,jump_time,channel",
            (f"{i},{t:.12g},{ch}" for i, t, ch in rows),
        )
    return _ensemble_stats(values, finals)


# --- homodyne scheme --------------------------------------------------------


class _HomodyneKernel:
    """Constants for the diffusive stepper: the Gaussian measurement Kraus
    acts diagonally in the eigenbasis of the measured observable, the
    feedback phase diagonally in the feedback eigenbasis, and one constant
    map returns to the computational basis with the Hamiltonian step folded
    in."""

    def __init__(self, model: HomodyneModelSpec, dt: float):
        d = model.dim
        self.dim = d
        self.dt = float(dt)
        self.lam = model.lam
        self.y_vals, VY = np.linalg.eigh(model.Y)
        self.f_vals, VF = np.linalg.eigh(model.F)
        UH = scipy.linalg.expm(-1j * dt * model.H)
        R = VF.conj().T @ VY
        S = UH @ VF
        self.to_y_T = np.kron(VY.T, VY.conj().T).T.copy()
        self.y_to_f_T = np.kron(R.conj(), R).T.copy()
        self.back_T = np.kron(S.conj(), S).T.copy()
        self.y_row = np.asarray(model.Y).ravel().copy()
        self.noise_coeff = 1.0 / (2.0 * np.sqrt(model.lam * dt))
        self.diag_idx = np.arange(d) * (d + 1)

    def step_batch(self, V: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Vectorized reference step; advances a batch in place and returns
        the outputs z."""
        n, dt = len(V), self.dt
        y_exp = (V @ self.y_row).real
        z = y_exp + xi * self.noise_coeff
        work = V @ self.to_y_T
        g = np.exp(-self.lam * dt * (z[:, None] - self.y_vals) ** 2)
        work *= (g[:, :, None] * g[:, None, :]).reshape(n, -1)
        work = work @ self.y_to_f_T
        ph = np.exp(-1j * dt * z[:, None] * self.f_vals)
        work *= (ph.conj()[:, :, None] * ph[:, None, :]).reshape(n, -1)
        work = work @ self.back_T
        tr = work[:, self.diag_idx].sum(axis=1).real
        if tr.min() <= _TRACE_FLOOR:
            raise ValueError(_ERR_TRACE)
        V[:] = work / tr[:, None]
        return z


if _HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _homodyne_rows_kernel(
        V, X, Z, outputs, keep, y_row, to_y_T, y_to_f_T, back_T,
        y_vals, f_vals, lam, dt, noise_coeff, d,
    ):
        n_rows, span = X.shape
        dd = d * d
        w1 = np.empty(dd, dtype=np.complex128)
        w2 = np.empty(dd, dtype=np.complex128)
        g = np.empty(d)
        ph = np.empty(d, dtype=np.complex128)
        for i in range(n_rows):
            v = V[i]
            for k in range(span):
                y_exp = 0.0
                for m in range(dd):
                    y_exp += (v[m] * y_row[m]).real
                z = y_exp + X[i, k] * noise_coeff
                Z[i] += z * dt
                if keep:
                    outputs[i, k] = z
                for a in range(dd):
                    acc = 0.0 + 0.0j
                    for b in range(dd):
                        acc += v[b] * to_y_T[b, a]
                    w1[a] = acc
                for a in range(d):
                    diff = z - y_vals[a]
                    g[a] = np.exp(-lam * dt * diff * diff)
                for a in range(d):
                    for b in range(d):
                        w1[a * d + b] *= g[a] * g[b]
                for a in range(dd):
                    acc = 0.0 + 0.0j
                    for b in range(dd):
                        acc += w1[b] * y_to_f_T[b, a]
                    w2[a] = acc
                for a in range(d):
                    ph[a] = np.exp(-1j * dt * z * f_vals[a])
                for col in range(d):
                    pc = np.conj(ph[col])
                    for row in range(d):
                        w2[col * d + row] *= ph[row] * pc
                for a in range(dd):
                    acc = 0.0 + 0.0j
                    for b in range(dd):
                        acc += w2[b] * back_T[b, a]
                    w1[a] = acc
                tr = 0.0
                for j in range(d):
                    tr += w1[j * (d + 1)].real
                if tr <= 1e-12:
                    raise ValueError(
                        "conditioned state trace fell below 1e-12 (numerical blow-up)"
                    )
                inv = 1.0 / tr
                for a in range(dd):
                    v[a] = w1[a] * inv


def _run_homodyne_rows(kernel: _HomodyneKernel, V, rngs, n_steps: int, keep_outputs: bool):
    outputs = np.empty((len(rngs), n_steps)) if keep_outputs else np.empty((0, 0))
    Z = np.zeros(len(rngs))
    done = 0
    while done < n_steps:
        span = min(_TIME_CHUNK, n_steps - done)
        X = np.empty((len(rngs), span))
        for i, rng in enumerate(rngs):
            X[i] = rng.standard_normal(span)
        if _HAVE_NUMBA:
            out_view = outputs[:, done : done + span] if keep_outputs else np.empty((0, 0))
            _homodyne_rows_kernel(
                V, X, Z, out_view, keep_outputs, kernel.y_row, kernel.to_y_T,
                kernel.y_to_f_T, kernel.back_T, kernel.y_vals, kernel.f_vals,
                kernel.lam, kernel.dt, kernel.noise_coeff, kernel.dim,
            )
        else:
            for k in range(span):
                z = kernel.step_batch(V, X[:, k])
                Z += z * kernel.dt
                if keep_outputs:
                    outputs[:, done + k] = z
        done += span
    return Z, (outputs if keep_outputs else None)


def homodyne_step(model: HomodyneModelSpec, rho_c: np.ndarray, dt: float, dW: float):
    """One diffusive update for a caller-supplied Wiener increment dW.

    The output is z = Tr[rho_c Y] + dW / (2 sqrt(lam) dt); the state is put
    through the Gaussian measurement Kraus for z, the feedback rotation
    exp(-i z dt F) and the Hamiltonian step, then renormalized.
    """
    rho_c = require_density(rho_c, "rho_c")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    kernel = _HomodyneKernel(model, dt)
    V = vectorize(rho_c)[None, :].copy()
    xi = np.array([float(dW) / np.sqrt(dt)])
    z = kernel.step_batch(V, xi)
    return float(z[0]), unvectorize(V[0])


def simulate_homodyne(
    model: HomodyneModelSpec,
    rho0: np.ndarray,
    tau: float,
    dt: float,
    seed,
    keep_outputs: bool = False,
) -> HomodyneTrajectory:
    """Run one diffusive trajectory; Z accumulates z*dt over all steps."""
    rho0 = require_density(rho0, "rho0")
    n_steps = _num_steps(tau, dt)
    kernel = _HomodyneKernel(model, dt)
    rng = np.random.default_rng(seed)
    V = vectorize(rho0)[None, :].copy()
    Z, outputs = _run_homodyne_rows(kernel, V, [rng], n_steps, keep_outputs)
    sampled = None
    if keep_outputs:
        times = np.arange(n_steps) * dt
        sampled = np.column_stack([times, outputs[0]])
    return HomodyneTrajectory(Z=float(Z[0]), sampled_outputs=sampled, final_state=unvectorize(V[0]))


def homodyne_ensemble(
    model: HomodyneModelSpec,
    rho0: np.ndarray,
    tau: float,
    dt: float,
    n_traj: int,
    master_seed,
    n_workers: int = 1,
    dump_path=None,
) -> EnsembleStats:
    """Ensemble of diffusive trajectories; the statistic is Z."""
    if n_traj < 2:
        raise ValueError(f"n_traj must be at least 2, got {n_traj}")
    rho0 = require_density(rho0, "rho0")
    n_steps = _num_steps(tau, dt)
    kernel = _HomodyneKernel(model, dt)
    d = model.dim
    v0 = vectorize(rho0)
    finals = np.empty((n_traj, d * d), dtype=complex)
    values = np.empty(n_traj)

    def make_job(start, end):
        def job():
            rows = end - start
            rngs = [
                np.random.default_rng(child_seed(master_seed, start + i)) for i in range(rows)
            ]
            V = np.tile(v0, (rows, 1))
            Z, _ = _run_homodyne_rows(kernel, V, rngs, n_steps, keep_outputs=False)
            finals[start:end] = V
            values[start:end] = Z

        return job

    jobs = [make_job(s, e) for s, e in _blocks(n_traj)]
    _run_block_jobs(jobs, n_workers)
    if dump_path is not None:
        _write_csv(dump_path, "trajectory_id,Z", (f"{i},{z:.12g}" for i, z in enumerate(values)))
    return _ensemble_stats(values, finals)


def _write_csv(path, header: str, rows) -> None:
    with open(Path(path), "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")
