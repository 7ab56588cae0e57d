"""``chiralnet`` command-line front end.

Exit status: 0 when every output was written and every invariant held,
1 on solver or invariant failures, 2 on configuration or parameter errors.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import config as cfg
from . import study
from .dynamics import (
    CSV_COLUMNS,
    Trajectory,
    analytic_amplitudes,
    check_conservation,
    evolve_master_equation,
    evolve_schrodinger,
    initial_density,
)
from .errors import (
    ConfigError,
    IntegrationError,
    InvariantError,
    ParameterError,
    PreconditionError,
)
from .model import build_effective_hamiltonian, build_liouvillian, single_excitation_indices
from .params import NetworkParams
from .states import PureState

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMMANDS = (
    "simulate", "optimize", "table1", "sweep-distance",
    "sweep-chirality", "sweep-detuning", "sweep-decay", "bell-phase",
)


def _check_unit_interval(values, what: str, tol: float = 1e-9) -> None:
    arr = np.asarray(values, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < -tol or arr.max() > 1 + tol):
        raise InvariantError(f"{what} left [0, 1]")


def _params_summary(p: NetworkParams) -> dict[str, Any]:
    return p.to_mapping()


def _summary(objective, best_params, best_value, t_peak, seed, evaluations, **extra) -> dict[str, Any]:
    out = dict(
        objective=objective, best_params=best_params, best_value=best_value,
        t_peak=t_peak, seed=seed, evaluations=evaluations,
    )
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Subcommands: each returns (columns, rows, summary)
# ---------------------------------------------------------------------------

def _analytic_trajectory(p: NetworkParams, grid: np.ndarray) -> Trajectory:
    c_eg, c_ge, c_10, c_01 = analytic_amplitudes(p, grid)
    idx = single_excitation_indices(p.variant)
    vecs = np.zeros((grid.size, 16), dtype=complex)
    for i, amp in zip(idx, (c_eg, c_ge, c_10, c_01)):
        vecs[:, i] = amp
    return Trajectory(grid, vecs, p.variant, {"solver": "analytic"})


def cmd_simulate(run: cfg.RunConfig, seed: int, workers: int):
    p = run.params
    if run["n_times"] < 2:
        raise ConfigError("n_times must be >= 2")
    grid = np.linspace(0.0, run["t_max"], run["n_times"])
    solver = run["solver"]
    if solver == "master":
        traj = evolve_master_equation(build_liouvillian(p), initial_density("eg00", p.variant), grid)
    elif solver == "schrodinger":
        traj = evolve_schrodinger(build_effective_hamiltonian(p), PureState.basis("eg00"), grid)
    else:
        traj = _analytic_trajectory(p, grid)
    check_conservation(traj)
    obs = traj.observables
    for name in ("C", "F1", "F2", "F3"):
        _check_unit_interval(obs[name], name)
    k = int(np.argmax(obs["C"]))
    peaks = {name: float(np.max(obs[name])) for name in ("F1", "F2", "F3")}
    summary = _summary(
        "max_t concurrence on the output grid", _params_summary(p), float(obs["C"][k]),
        float(grid[k]), seed, 1,
        solver=solver, C_max=float(obs["C"][k]),
        F_peaks=peaks, F_at_t_peak={n: float(obs[n][k]) for n in ("F1", "F2", "F3")},
    )
    rows = [[obs[c][i] for c in CSV_COLUMNS] for i in range(grid.size)]
    return CSV_COLUMNS, rows, summary


def _bounds(run: cfg.RunConfig, names) -> dict[str, tuple[float, float]]:
    return {n: run[f"{n}_bounds"] for n in names}


def cmd_optimize(run: cfg.RunConfig, seed: int, workers: int):
    free = run["free"]
    for n in free:
        if n not in study.FREE_PARAMETERS:
            raise ConfigError(f"free: {n!r} is not one of {', '.join(study.FREE_PARAMETERS)}")
    res = study.optimize_couplings(
        run.params, free, _bounds(run, free),
        observable=run["observable"], t_max=run["t_max"], grid_points=run["grid_points"],
        n_starts=run["n_starts"], max_evals=run["max_evals"], workers=workers,
    )
    _check_unit_interval([r[-2] for r in res.rows], run["observable"])
    res.seed = seed
    return res.columns, res.rows, res.summary()


def cmd_table1(run: cfg.RunConfig, seed: int, workers: int):
    results = study.table1(t_max=run["t_max"], workers=workers)
    _check_unit_interval([r.best_value for r in results.values()], "C_max")
    columns = ("entry", "C_max", "t_peak", "g1", "g2", "gamma_R2", "evaluations")
    rows = []
    for key in study.TABLE1_KEYS:
        r = results[key]
        bp = r.best_params
        rows.append((key, r.best_value, r.t_peak,
                     bp.get("g1", math.nan), bp.get("g2", math.nan), bp.get("gamma_R2", math.nan),
                     r.evaluations))
    summary = _summary(
        "max_t concurrence",
        {k: results[k].best_params for k in study.TABLE1_KEYS},
        {k: results[k].best_value for k in study.TABLE1_KEYS},
        {k: results[k].t_peak for k in study.TABLE1_KEYS},
        seed,
        sum(r.evaluations for r in results.values()),
    )
    summary.update({k: results[k].best_value for k in study.TABLE1_KEYS})
    return columns, rows, summary


def _linspace(run: cfg.RunConfig, prefix: str) -> np.ndarray:
    n = run[f"{prefix}_points"]
    if n < 1:
        raise ConfigError(f"{prefix}_points must be >= 1")
    return np.linspace(run[f"{prefix}_min"], run[f"{prefix}_max"], n)


def _best_row(rows, value_col: int, x_col: int, x_name: str):
    k = max(range(len(rows)), key=lambda i: rows[i][value_col])
    return {x_name: rows[k][x_col]}, rows[k][value_col]


def cmd_sweep_distance(run: cfg.RunConfig, seed: int, workers: int):
    d = _linspace(run, "d")
    data = study.sweep_distance(run.params, 2 * math.pi * d, t_max=run["t_max"], workers=workers)
    rows = [(float(x), kd, c) for x, (kd, c) in zip(d, data)]
    _check_unit_interval([r[2] for r in rows], "C_max")
    best, value = _best_row(rows, 2, 0, "D_over_lambda")
    summary = _summary("max_t concurrence vs distance", best, value, None, seed, len(rows),
                       spread=max(r[2] for r in rows) - min(r[2] for r in rows))
    return ("D_over_lambda", "kD", "C_max"), rows, summary


def cmd_sweep_chirality(run: cfg.RunConfig, seed: int, workers: int):
    chis = _linspace(run, "chi")
    data = study.sweep_chirality(
        run.params, chis, hold=run["chi_hold"], kD=2 * math.pi * run["chi_d"],
        t_max=run["t_max"], workers=workers,
    )
    rows = [(chi, c) for chi, c in data]
    _check_unit_interval([r[1] for r in rows], "C_max")
    best, value = _best_row(rows, 1, 0, "chirality")
    return ("chirality", "C_max"), rows, _summary(
        "max_t concurrence vs chirality", best, value, None, seed, len(rows))


def cmd_sweep_detuning(run: cfg.RunConfig, seed: int, workers: int):
    deltas = _linspace(run, "delta")
    data = study.sweep_detuning(
        run.params, run["detuning_target"], deltas, samples=run["samples"], seed=seed,
        t_max=run["t_max"], workers=workers,
    )
    rows = [(d, m, s) for d, m, s in data]
    _check_unit_interval([r[1] for r in rows], "mean C_max")
    best, value = _best_row(rows, 1, 0, "delta")
    return ("delta", "C_max_mean", "C_max_std"), rows, _summary(
        f"mean max_t concurrence vs detuning of {run['detuning_target']}", best, value, None, seed,
        len(rows) * run["samples"], samples=run["samples"], target=run["detuning_target"])


def cmd_sweep_decay(run: cfg.RunConfig, seed: int, workers: int):
    gammas = _linspace(run, "Gamma")
    mode = run["reoptimize"]
    bounds = _bounds(run, ("g1", "g2"))
    columns: list[str] = ["Gamma"]
    curves = []
    if mode in ("false", "both"):
        columns.append("C_0")
        curves.append(study.sweep_atomic_decay(run.params, gammas, reoptimize=False, t_max=run["t_max"]))
    if mode in ("true", "both"):
        columns.append("C_opt")
        curves.append(study.sweep_atomic_decay(
            run.params, gammas, reoptimize=True, bounds=bounds, t_max=run["t_max"], workers=workers))
    rows = [(float(G), *(curve[i][1] for curve in curves)) for i, G in enumerate(gammas)]
    for j in range(1, len(columns)):
        _check_unit_interval([r[j] for r in rows], columns[j])
    if mode == "both" and any(r[2] < r[1] - 1e-9 for r in rows):
        raise InvariantError("re-optimized concurrence fell below the fixed-coupling value")
    best, value = _best_row(rows, len(columns) - 1, 0, "Gamma")
    return tuple(columns), rows, _summary(
        "max_t concurrence vs atomic decay", best, value, None, seed, len(rows), reoptimize=mode)


def cmd_bell_phase(run: cfg.RunConfig, seed: int, workers: int):
    n = run["bell_n"]
    if n < 1:
        raise ConfigError("bell_n must be a positive integer")
    p = run.params.replace(kD=n * math.pi)
    res = study.nonchiral_bell_phase_check(n, p, t_max=run["t_max"])
    _check_unit_interval([res.fidelity_plus, res.fidelity_minus, res.concurrence], "fidelity")
    columns = ("n", "F_plus", "F_minus", "C_max", "t_peak",
               "coherent_residual", "jump_residual", "generator_residual")
    rows = [(res.n, res.fidelity_plus, res.fidelity_minus, res.concurrence, res.t_peak,
             res.coherent_residual, res.jump_residual, res.generator_residual)]
    bell = "psi_plus" if res.fidelity_plus >= res.fidelity_minus else "psi_minus"
    return columns, rows, _summary(
        "Bell fidelities at the concurrence peak", {"n": n, "kD": p.kD}, res.concurrence,
        res.t_peak, seed, 1, F_plus=res.fidelity_plus, F_minus=res.fidelity_minus, bell_state=bell)


HANDLERS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "table1": cmd_table1,
    "sweep-distance": cmd_sweep_distance,
    "sweep-chirality": cmd_sweep_chirality,
    "sweep-detuning": cmd_sweep_detuning,
    "sweep-decay": cmd_sweep_decay,
    "bell-phase": cmd_bell_phase,
}
_HELP = {
    "simulate": "integrate one trajectory from |eg00> and write its observables",
    "optimize": "maximize the peak of an observable over couplings",
    "table1": "the four chiral concurrence optima (with/without cavities, equal/unequal gamma_R)",
    "sweep-distance": "peak concurrence against node spacing",
    "sweep-chirality": "peak concurrence against waveguide chirality",
    "sweep-detuning": "mean peak concurrence under random detuning (seeded)",
    "sweep-decay": "peak concurrence against atomic decay, fixed and re-optimized couplings",
    "bell-phase": "Bell-state phase of a non-chiral network at kD = n*pi",
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    epilog = cfg.help_table()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
    common.add_argument("--seed", type=_u64, help="RNG seed; overrides the seed key")
    common.add_argument("--workers", type=_positive, default=os.cpu_count() or 1,
                        help="worker processes (default: number of hardware threads)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable, wins over --config")
    parser = argparse.ArgumentParser(
        prog="chiralnet",
        description="Entanglement of two atom-cavity nodes coupled through a chiral waveguide.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name], description=_HELP[name],
                       epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def run(args: argparse.Namespace) -> int:
    try:
        conf = cfg.load(args.config, args.overrides)
        seed = args.seed if args.seed is not None else conf["seed"]
        columns, rows, summary = HANDLERS[args.command](conf, seed, args.workers)
    except (ConfigError, ParameterError, PreconditionError) as exc:
        print(f"chiralnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"chiralnet: solver failed at t = {exc.t:.6g}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except InvariantError as exc:
        print(f"chiralnet: invariant violated: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    try:
        csv_path, json_path = study.write_outputs(args.out, args.command, columns, rows, summary)
    except OSError as exc:
        print(f"chiralnet: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(csv_path)
    print(json_path)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
