"""Randomized sweep experiment for the driven two-level atom.

Each realization draws detuning, drive, decay rate and horizon from given
intervals, estimates the precision Var[N]/<N>^2 of the jump count from a
trajectory ensemble, computes the dynamical activity for the same model,
and checks the uncertainty-relation margin within Monte Carlo error.  The
records serialize to CSV or JSON scatter data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fisher import activity_jump
from .master_equation import JumpModelSpec
from .trajectories import child_seed, jump_ensemble

__all__ = [
    "TwoLevelParams",
    "SweepRanges",
    "SweepRecord",
    "rabi_model",
    "rabi_homodyne_observable",
    "random_sweep",
    "bound_margin",
    "emit_report",
    "ground_state",
    "excited_state",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def ground_state() -> np.ndarray:
    return np.diag([1.0, 0.0]).astype(complex)


def excited_state() -> np.ndarray:
    return np.diag([0.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class TwoLevelParams:
    """Driven-atom parameters: detuning, drive amplitude, decay rate and
    feedback strength (dimensionless)."""

    delta: float
    omega: float
    kappa: float
    nu: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"decay rate must be positive, got {self.kappa}")


def rabi_model(p: TwoLevelParams) -> JumpModelSpec:
    """Laser-driven two-level atom with decay and a drive-axis feedback kick.

    Basis ordering is (ground, excited); the single jump operator lowers the
    excited state at rate kappa and the feedback operator is the x drive.
    """
    H = np.array(
        [[0.0, p.omega / 2.0], [p.omega / 2.0, p.delta]], dtype=complex
    )
    L = np.array([[0.0, np.sqrt(p.kappa)], [0.0, 0.0]], dtype=complex)
    return JumpModelSpec(H=H, jumps=(L,), F=SIGMA_X.copy(), nus=(p.nu,))


def rabi_homodyne_observable(p: TwoLevelParams, lam: float) -> np.ndarray:
    """Quadrature of the decay channel as a Hermitian measured observable,
    normalized so that sqrt(lam) * Y carries the channel's weight."""
    return np.sqrt(p.kappa / lam) * SIGMA_X


@dataclass(frozen=True)
class SweepRanges:
    """Uniform sampling intervals for the sweep, one (lo, hi) per parameter."""

    delta: tuple[float, float] = (0.1, 3.0)
    omega: tuple[float, float] = (0.1, 3.0)
    kappa: tuple[float, float] = (0.1, 3.0)
    tau: tuple[float, float] = (0.1, 3.0)


@dataclass
class SweepRecord:
    """One realization: parameters, count statistics, precision with its
    standard error, the activity bound (and optionally a reference bound),
    and the resulting margin."""

    params: TwoLevelParams
    tau: float
    mean_N: float
    var_N: float
    precision: float
    precision_stderr: float
    B: float
    B_reference: float | None
    margin: float
    satisfied: bool
    degenerate: bool = False


def _precision_with_stderr(values: np.ndarray) -> tuple[float, float]:
    """Var/mean^2 with a delta-method standard error using sample moments
    up to fourth order (the mean-variance covariance matters for skewed
    counting statistics)."""
    n = len(values)
    m = values.mean()
    v = values.var(ddof=1)
    c = values - m
    m2 = float((c**2).mean())
    m3 = float((c**3).mean())
    m4 = float((c**4).mean())
    var_mean = v / n
    var_var = (m4 - m2 * m2 * (n - 3) / (n - 1)) / n
    cov_mv = m3 / n
    g = v / m**2
    var_g = var_var / m**4 + 4.0 * v**2 * var_mean / m**6 - 4.0 * v * cov_mv / m**5
    return float(g), float(np.sqrt(max(var_g, 0.0)))


def bound_margin(record: SweepRecord, homodyne: bool = False) -> float:
    """Precision minus the uncertainty-relation floor: 1/B for jump
    counting, 1/(4B) for homodyne output integration."""
    if not record.B > 0:
        raise ValueError(f"activity must be positive, got {record.B}")
    floor = 1.0 / (4.0 * record.B) if homodyne else 1.0 / record.B
    return record.precision - floor


def random_sweep(
    ranges: SweepRanges,
    n_points: int,
    n_traj: int,
    dt: float,
    master_seed,
    nu: float = 1.0,
    reference_nu: float | None = None,
    rho0: np.ndarray | None = None,
    dtheta: float = 1e-3,
    n_workers: int = 1,
) -> list[SweepRecord]:
    """Run the randomized bound check.

    Parameters are drawn from a dedicated stream child(master_seed, 0); the
    ensemble for point i is seeded from child(master_seed, 1) -> child i, so
    reruns with the same master seed reproduce every record exactly.  The
    precision always refers to the raw jump count (the count weight cancels
    from Var/<N>^2, and it keeps nu = 0 reference runs well defined); nu
    enters as the feedback strength and, optionally, reference_nu gives a
    second activity value for the same parameters.

    Realizations whose mean count is indistinguishable from zero at three
    standard errors are flagged degenerate; their precision and margin are
    NaN and they are meant to be excluded from margin statistics.
    """
    if n_points < 1:
        raise ValueError(f"n_points must be at least 1, got {n_points}")
    if rho0 is None:
        rho0 = ground_state()
    param_rng = np.random.default_rng(child_seed(master_seed, 0))
    ensemble_root = child_seed(master_seed, 1)
    records = []
    for i in range(n_points):
        delta = param_rng.uniform(*ranges.delta)
        omega = param_rng.uniform(*ranges.omega)
        kappa = param_rng.uniform(*ranges.kappa)
        tau = param_rng.uniform(*ranges.tau)
        p = TwoLevelParams(delta=delta, omega=omega, kappa=kappa, nu=nu)
        model = rabi_model(p)
        stats = jump_ensemble(
            model,
            rho0,
            tau,
            dt,
            n_traj,
            child_seed(ensemble_root, i),
            n_workers=n_workers,
            count_weights=(1.0,),
        )
        act = activity_jump(model, tau, dtheta=dtheta, psi0=rho0)
        ref = None
        if reference_nu is not None:
            ref_model = rabi_model(
                TwoLevelParams(delta=delta, omega=omega, kappa=kappa, nu=reference_nu)
            )
            ref = activity_jump(ref_model, tau, dtheta=dtheta, psi0=rho0).B
        degenerate = stats.mean <= 3.0 * stats.std_error_mean
        if degenerate:
            precision, stderr, margin, satisfied = math.nan, math.nan, math.nan, False
        else:
            precision, stderr = _precision_with_stderr(stats.values)
            margin = precision - 1.0 / act.B
            satisfied = margin >= -3.0 * stderr
        records.append(
            SweepRecord(
                params=p,
                tau=tau,
                mean_N=stats.mean,
                var_N=stats.variance,
                precision=precision,
                precision_stderr=stderr,
                B=act.B,
                B_reference=ref,
                margin=margin,
                satisfied=satisfied,
                degenerate=degenerate,
            )
        )
    return records


_REPORT_COLUMNS = [
    "delta", "omega", "kappa", "nu", "tau", "mean_N", "var_N", "precision",
    "precision_stderr", "B", "B_reference", "margin", "satisfied",
]


def _record_row(r: SweepRecord) -> dict:
    return {
        "delta": r.params.delta,
        "omega": r.params.omega,
        "kappa": r.params.kappa,
        "nu": r.params.nu,
        "tau": r.tau,
        "mean_N": r.mean_N,
        "var_N": r.var_N,
        "precision": r.precision,
        "precision_stderr": r.precision_stderr,
        "B": r.B,
        "B_reference": r.B_reference,
        "margin": r.margin,
        "satisfied": r.satisfied,
    }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return f"{value:.12g}"


def emit_report(records: list[SweepRecord], destination, format: str = "csv") -> None:
    """Write sweep records as scatter data; numbers carry 12 significant
    digits so identical sweeps produce byte-identical files."""
    if not records:
        raise ValueError("cannot emit a report from an empty record list")
    if format not in ("csv", "json"):
        raise ValueError(f"unknown report format {format!r}")
    rows = [_record_row(r) for r in records]
    path = Path(destination)
    if format == "csv":
        lines = [",".join(_REPORT_COLUMNS)]
        lines += [",".join(_fmt(row[c]) for c in _REPORT_COLUMNS) for row in rows]
        path.write_text("\n".join(lines) + "\n")
    else:
        def round12(x):
            if x is None or isinstance(x, bool):
                return x
            return float(f"{x:.12g}") if math.isfinite(x) else x

        payload = [{c: round12(row[c]) for c in _REPORT_COLUMNS} for row in rows]
        path.write_text(json.dumps(payload, indent=1, allow_nan=True) + "\n")
