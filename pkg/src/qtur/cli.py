"""Command-line entry point: simulate, activity, sweep, check-bound.

Configuration precedence is flags > config file (--config, JSON with keys
named like the flags) > built-in defaults.  Every command is deterministic
given --seed and rewrites byte-identical output files on reruns.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    SweepRanges,
    TwoLevelParams,
    excited_state,
    ground_state,
    rabi_homodyne_observable,
    rabi_model,
    random_sweep,
    emit_report,
    _precision_with_stderr,
)
from .fisher import activity_homodyne, activity_jump, asymptotic_activity
from .master_equation import (
    HomodyneModelSpec,
    default_dt,
    load_homodyne_model,
    load_jump_model,
)
from .trajectories import homodyne_ensemble, jump_ensemble

__all__ = ["build_parser", "main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 3
EXIT_BOUND_VIOLATED = 4

_DEFAULTS = {
    "mode": "jump",
    "preset": "rabi",
    "model": None,
    "delta": 1.0,
    "omega": 1.0,
    "kappa": 1.0,
    "nu": 1.0,
    "lam": 1.0,
    "tau": 1.0,
    "dt": None,
    "n_traj": 10_000,
    "seed": 0,
    "dtheta": 1e-3,
    "initial_state": "ground",
    "output": None,
    "format": "csv",
    "dump": None,
    "threads": None,
    "points": 200,
    "reference_nu": None,
    "asymptotic": None,
    "delta_range": (0.1, 3.0),
    "omega_range": (0.1, 3.0),
    "kappa_range": (0.1, 3.0),
    "tau_range": (0.1, 3.0),
}


def _fmt(x: float) -> float:
    return float(f"{x:.12g}")


def _matrix_json(A: np.ndarray) -> list:
    return [[[_fmt(v.real), _fmt(v.imag)] for v in row] for row in np.asarray(A, dtype=complex)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtur",
        description="Continuously measured quantum systems under Markovian feedback: "
        "trajectory ensembles, dynamical activity, and uncertainty-relation checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_mode=True):
        p.add_argument("--config", help="JSON config file; flags override its values")
        if with_mode:
            p.add_argument("--mode", choices=["jump", "homodyne"], help="measurement mode")
        p.add_argument("--preset", choices=["rabi"], help="built-in model family")
        p.add_argument("--model", help="path to a JSON model file instead of a preset")
        p.add_argument("--delta", type=float, help="detuning of the driven atom preset")
        p.add_argument("--omega", type=float, help="drive amplitude of the preset")
        p.add_argument("--kappa", type=float, help="decay rate of the preset")
        p.add_argument("--nu", type=float, help="feedback strength")
        p.add_argument("--lambda", dest="lam", type=float, help="homodyne measurement strength")
        p.add_argument("--tau", type=float, help="time horizon")
        p.add_argument(
            "--initial-state",
            dest="initial_state",
            choices=["ground", "excited", "plus", "yminus"],
            help="initial pure state (yminus is (|g> - i|e>)/sqrt 2)",
        )
        p.add_argument("--seed", type=int, help="master seed for all random streams")
        p.add_argument("--output", help="output file path")
        p.add_argument(
            "--threads",
            type=int,
            help="worker thread cap (QTUR_THREADS is the environment fallback)",
        )

    p_sim = sub.add_parser("simulate", help="run a trajectory ensemble and write its statistics")
    add_common(p_sim)
    p_sim.add_argument("--dt", type=float, help="time step (defaults to 1e-3 over the model's largest rate)")
    p_sim.add_argument("--n-traj", dest="n_traj", type=int, help="number of trajectories (at least 2)")
    p_sim.add_argument("--dump", help="also write per-trajectory records to this CSV path")

    p_act = sub.add_parser("activity", help="compute the dynamical activity (Fisher information)")
    add_common(p_act)
    p_act.add_argument("--dtheta", type=float, help="finite-difference increment for the overlap")
    p_act.add_argument(
        "--asymptotic",
        action="store_true",
        default=None,
        help="also report the long-time activity growth rate (jump mode only)",
    )

    p_sweep = sub.add_parser("sweep", help="randomized bound-check sweep over the driven atom")
    add_common(p_sweep, with_mode=False)
    p_sweep.add_argument("--points", type=int, help="number of random realizations")
    p_sweep.add_argument("--dt", type=float, help="time step for the trajectory ensembles")
    p_sweep.add_argument("--n-traj", dest="n_traj", type=int, help="trajectories per realization")
    p_sweep.add_argument("--dtheta", type=float, help="finite-difference increment for activities")
    p_sweep.add_argument(
        "--reference-nu",
        dest="reference_nu",
        type=float,
        help="also compute the activity bound at this feedback strength",
    )
    p_sweep.add_argument("--format", choices=["csv", "json"], help="report file format")
    p_sweep.add_argument("--delta-range", dest="delta_range", nargs=2, type=float,
                         metavar=("LO", "HI"), help="sampling interval for the detuning")
    p_sweep.add_argument("--omega-range", dest="omega_range", nargs=2, type=float,
                         metavar=("LO", "HI"), help="sampling interval for the drive amplitude")
    p_sweep.add_argument("--kappa-range", dest="kappa_range", nargs=2, type=float,
                         metavar=("LO", "HI"), help="sampling interval for the decay rate")
    p_sweep.add_argument("--tau-range", dest="tau_range", nargs=2, type=float,
                         metavar=("LO", "HI"), help="sampling interval for the horizon")

    p_chk = sub.add_parser("check-bound", help="single-point precision vs activity bound check")
    add_common(p_chk)
    p_chk.add_argument("--dt", type=float, help="time step for the trajectory ensemble")
    p_chk.add_argument("--n-traj", dest="n_traj", type=int, help="number of trajectories")
    p_chk.add_argument("--dtheta", type=float, help="finite-difference increment for the activity")

    return parser


def _resolve(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("command", "config"):
            continue
        if value is not None:
            cfg[key] = value
    if cfg["threads"] is None:
        cfg["threads"] = int(os.environ.get("QTUR_THREADS", "1"))
    return cfg


def _initial_state(name: str) -> np.ndarray:
    if name == "ground":
        return ground_state()
    if name == "excited":
        return excited_state()
    if name == "plus":
        return np.full((2, 2), 0.5, dtype=complex)
    if name == "yminus":
        return 0.5 * np.array([[1.0, 1.0j], [-1.0j, 1.0]], dtype=complex)
    raise ValueError(f"unknown initial state {name!r}")


def _build_model(cfg: dict, mode: str):
    if cfg["model"] is not None:
        if mode == "jump":
            return load_jump_model(cfg["model"])
        return load_homodyne_model(cfg["model"])
    params = TwoLevelParams(
        delta=cfg["delta"], omega=cfg["omega"], kappa=cfg["kappa"], nu=cfg["nu"]
    )
    if mode == "jump":
        return rabi_model(params)
    lam = cfg["lam"]
    H = rabi_model(params).H
    Y = rabi_homodyne_observable(params, lam)
    F = params.nu * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return HomodyneModelSpec(H=H, Y=Y, F=F, lam=lam)


def _run_ensemble(cfg: dict, model, mode: str, dump_path=None):
    rho0 = _initial_state(cfg["initial_state"])
    dt = cfg["dt"] if cfg["dt"] is not None else default_dt(model)
    common = dict(n_workers=cfg["threads"], dump_path=dump_path)
    if mode == "jump":
        weights = tuple(1.0 for _ in model.nus)
        return jump_ensemble(
            model, rho0, cfg["tau"], dt, cfg["n_traj"], cfg["seed"],
            count_weights=weights, **common,
        )
    return homodyne_ensemble(model, rho0, cfg["tau"], dt, cfg["n_traj"], cfg["seed"], **common)


def _cmd_simulate(cfg: dict) -> int:
    mode = cfg["mode"]
    model = _build_model(cfg, mode)
    stats = _run_ensemble(cfg, model, mode, dump_path=cfg["dump"])
    payload = {
        "mode": mode,
        "tau": _fmt(cfg["tau"]),
        "n_traj": stats.n_traj,
        "mean": _fmt(stats.mean),
        "variance": _fmt(stats.variance),
        "std_error_mean": _fmt(stats.std_error_mean),
        "std_error_variance": _fmt(stats.std_error_variance),
        "mean_state": _matrix_json(stats.mean_state),
    }
    out = Path(cfg["output"] or "stats.json")
    out.write_text(json.dumps(payload, indent=1) + "\n")
    print(f"wrote {out}: mean={stats.mean:.6g} variance={stats.variance:.6g}")
    return EXIT_OK


def _cmd_activity(cfg: dict) -> int:
    mode = cfg["mode"]
    model = _build_model(cfg, mode)
    rho0 = _initial_state(cfg["initial_state"])
    compute = activity_jump if mode == "jump" else activity_homodyne
    result = compute(model, cfg["tau"], dtheta=cfg["dtheta"], psi0=rho0)
    if not result.converged:
        print(
            "finite-difference overlap did not converge: "
            f"ratio {result.convergence_ratio:.6g} deviates from 1 by more than 1e-3; "
            "reduce --dtheta",
            file=sys.stderr,
        )
        return EXIT_NOT_CONVERGED
    payload = {
        "mode": mode,
        "tau": _fmt(cfg["tau"]),
        "dtheta": _fmt(result.dtheta_used),
        "B": _fmt(result.B),
        "convergence_ratio": _fmt(result.convergence_ratio),
    }
    if cfg["asymptotic"]:
        if mode != "jump":
            raise ValueError("--asymptotic applies to jump mode only")
        asym = asymptotic_activity(model)
        payload["asymptotic"] = {
            "rate": _fmt(asym.rate),
            "a_term": _fmt(asym.a_term),
            "bc_term": _fmt(asym.bc_term),
            "z1": [_fmt(asym.z1.real), _fmt(asym.z1.imag)],
            "z2": [_fmt(asym.z2.real), _fmt(asym.z2.imag)],
        }
    out = Path(cfg["output"] or "activity.json")
    out.write_text(json.dumps(payload, indent=1) + "\n")
    line = f"wrote {out}: B={result.B:.6g}"
    if cfg["asymptotic"]:
        line += f" asymptotic_rate={payload['asymptotic']['rate']:.6g}"
    print(line)
    return EXIT_OK


def _cmd_sweep(cfg: dict) -> int:
    ranges = SweepRanges(
        delta=tuple(cfg["delta_range"]),
        omega=tuple(cfg["omega_range"]),
        kappa=tuple(cfg["kappa_range"]),
        tau=tuple(cfg["tau_range"]),
    )
    dt = cfg["dt"] if cfg["dt"] is not None else 1e-3
    records = random_sweep(
        ranges,
        n_points=cfg["points"],
        n_traj=cfg["n_traj"],
        dt=dt,
        master_seed=cfg["seed"],
        nu=cfg["nu"],
        reference_nu=cfg["reference_nu"],
        rho0=_initial_state(cfg["initial_state"]),
        dtheta=cfg["dtheta"],
        n_workers=cfg["threads"],
    )
    out = Path(cfg["output"] or f"sweep.{cfg['format']}")
    emit_report(records, out, format=cfg["format"])
    live = [r for r in records if not r.degenerate]
    violations = sum(1 for r in live if not r.satisfied)
    summary = (
        f"points={len(records)} degenerate={len(records) - len(live)} "
        f"satisfied={sum(1 for r in live if r.satisfied)} violations={violations}"
    )
    if cfg["reference_nu"] is not None:
        ref_viol = sum(
            1
            for r in live
            if r.B_reference and r.precision - 1.0 / r.B_reference < -3.0 * r.precision_stderr
        )
        summary += f" reference-violations={ref_viol}"
    print(summary)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_check_bound(cfg: dict) -> int:
    mode = cfg["mode"]
    model = _build_model(cfg, mode)
    rho0 = _initial_state(cfg["initial_state"])
    stats = _run_ensemble(cfg, model, mode)
    if abs(stats.mean) <= 3.0 * stats.std_error_mean:
        print(
            "mean statistic indistinguishable from zero at 3 standard errors; "
            "precision is undefined for this realization",
            file=sys.stderr,
        )
        return EXIT_ERROR
    compute = activity_jump if mode == "jump" else activity_homodyne
    act = compute(model, cfg["tau"], dtheta=cfg["dtheta"], psi0=rho0)
    if not act.B > 0:
        raise ValueError(f"activity must be positive to form the bound, got {act.B:.3g}")
    floor = 1.0 / act.B if mode == "jump" else 1.0 / (4.0 * act.B)
    precision, stderr = _precision_with_stderr(stats.values)
    margin = precision - floor
    satisfied = margin >= -3.0 * stderr
    print(
        f"precision={precision:.6g} stderr={stderr:.6g} B={act.B:.6g} "
        f"bound={floor:.6g} margin={margin:.6g} satisfied={str(satisfied).lower()}"
    )
    if cfg["output"]:
        payload = {
            "mode": mode,
            "precision": _fmt(precision),
            "precision_stderr": _fmt(stderr),
            "B": _fmt(act.B),
            "bound": _fmt(floor),
            "margin": _fmt(margin),
            "satisfied": satisfied,
        }
        Path(cfg["output"]).write_text(json.dumps(payload, indent=1) + "\n")
    return EXIT_OK if satisfied else EXIT_BOUND_VIOLATED


_COMMANDS = {
    "simulate": _cmd_simulate,
    "activity": _cmd_activity,
    "sweep": _cmd_sweep,
    "check-bound": _cmd_check_bound,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
