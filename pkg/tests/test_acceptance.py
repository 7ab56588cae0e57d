"""Acceptance criteria, each reported as a single PASS/FAIL line.

Tolerances are those of the project's acceptance gate; a failing line carries
the measured numbers so the gap can be read off directly.
"""
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from chiralnet import cli
from chiralnet.config import load
from chiralnet.dynamics import (
    analytic_amplitudes,
    check_conservation,
    evolve_master_equation,
    evolve_schrodinger,
    initial_density,
)
from chiralnet.errors import InvariantError
from chiralnet.model import build_effective_hamiltonian, build_liouvillian
from chiralnet.params import NetworkParams, Variant, symmetric_optimum, nonchiral_optimum
from chiralnet.states import PureState
from chiralnet.study import (
    Observable,
    nonchiral_bell_phase_check,
    optimize_couplings,
    peak_over_time,
    sweep_distance,
    table1,
    with_chirality,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
WORKERS = os.cpu_count() or 1
SE = [8, 4, 2, 1]


def within(value, target, tol):
    return abs(value - target) <= tol


def rel(value, target):
    return (value - target) / target


def test_1_no_cavity_optimum(acceptance):
    start = time.perf_counter()
    pk = peak_over_time(NetworkParams(variant=Variant.NO_CAVITY))
    elapsed = time.perf_counter() - start
    ok = within(pk.value, 0.735, 0.005) and elapsed < 60
    acceptance(1, "no-cavity chiral optimum", ok,
               f"C_max={pk.value:.6f} (2/e={2 / math.e:.6f}; target 0.735+-0.005), t_peak={pk.t_peak:.4g}, {elapsed:.1f}s")


def test_2_cavity_symmetric_optimum(acceptance):
    start = time.perf_counter()
    res = optimize_couplings(symmetric_optimum(), ("g1", "g2"), {"g1": (0, 1), "g2": (0, 1)}, workers=WORKERS)
    elapsed = time.perf_counter() - start
    g1, g2 = res.best_params["g1"], res.best_params["g2"]
    ok = (within(res.best_value, 0.920, 0.005) and within(g1, 0.126, 0.02)
          and within(g2, 0.277, 0.02) and elapsed < 300)
    acceptance(2, "with-cavity symmetric optimum", ok,
               f"C_max={res.best_value:.6f} at g1={g1:.5f}, g2={g2:.5f}, t_peak={res.t_peak:.4g}, {elapsed:.1f}s")


def test_3_four_chiral_optima(acceptance):
    start = time.perf_counter()
    results = table1(workers=WORKERS)
    elapsed = time.perf_counter() - start
    targets = {"no_cavity_equal": 0.736, "no_cavity_unequal": 0.869, "cavity_equal": 0.920, "cavity_unequal": 0.969}
    values_ok = all(within(results[k].best_value, v, 0.005) for k, v in targets.items())
    nc = results["no_cavity_unequal"].best_params
    cu = results["cavity_unequal"].best_params
    offsets = {
        "no-cavity gamma_R2": rel(nc["gamma_R2"], 3.88),
        "gamma_R2": rel(cu["gamma_R2"], 4.82),
        "g1": rel(cu["g1"], 2.21),
        "g2": rel(cu["g2"], 2.11),
    }
    locations_ok = all(abs(x) <= 0.05 for x in offsets.values())
    ok = values_ok and locations_ok and elapsed < 900
    values = " / ".join(f"{results[k].best_value:.4f}" for k in targets)
    where = ", ".join(f"{k} {v:+.1%}" for k, v in offsets.items())
    acceptance(3, "four chiral optima", ok,
               f"C_max {values} (values {'ok' if values_ok else 'off'}); parameter offsets {where} "
               f"(limit +-5%); {elapsed:.1f}s")


def test_4_nonchiral_optimum(acceptance):
    p = nonchiral_optimum()
    at_reference = peak_over_time(p, t_max=1000)
    res = optimize_couplings(p, ("g1", "g2"), {"g1": (0, 0.01), "g2": (0, 0.01)}, t_max=1000, workers=WORKERS)
    bell = {n: nonchiral_bell_phase_check(n, p.replace(kD=n * math.pi)) for n in (1, 2)}
    signs_ok = (bell[1].fidelity_plus > bell[1].fidelity_minus
                and bell[2].fidelity_minus > bell[2].fidelity_plus)
    ok = within(at_reference.value, 0.997, 0.002) and within(res.best_value, 0.997, 0.002) and signs_ok
    acceptance(4, "non-chiral optimum", ok,
               f"C_max={at_reference.value:.6f} at (0.00410, 0.00170); optimizer {res.best_value:.6f} at "
               f"({res.best_params['g1']:.5f}, {res.best_params['g2']:.5f}); "
               f"n=1 F+={bell[1].fidelity_plus:.4f} F-={bell[1].fidelity_minus:.2e}; "
               f"n=2 F+={bell[2].fidelity_plus:.2e} F-={bell[2].fidelity_minus:.4f}")


def test_5_transfer_optimum(acceptance):
    gs = np.round(np.arange(0.30, 0.60 + 1e-9, 0.001), 6)
    transfer = [peak_over_time(NetworkParams(g1=g, g2=g), Observable.F3).value for g in gs]
    k = int(np.argmax(transfer))
    ok = within(gs[k], 0.43, 0.01)
    acceptance(5, "transfer optimum", ok, f"argmax_g max_t P_ge = {gs[k]:.3f} (P_ge={transfer[k]:.6f}; target 0.43+-0.01)")


def test_6_transfer_at_entanglement_optimum(acceptance):
    p = symmetric_optimum()
    f3 = peak_over_time(p, Observable.F3)
    c = peak_over_time(p)
    amps = analytic_amplitudes(p, c.t_peak)
    at_peak = abs(amps[1]) ** 2
    ok = within(f3.value, 0.42, 0.01)
    acceptance(6, "F3 peak at entanglement optimum", ok,
               f"max_t F3={f3.value:.4f} at t={f3.t_peak:.3f} (target 0.42+-0.01); "
               f"F3(t_peak of C)={at_peak:.4f} at t={c.t_peak:.3f}")


def test_7_analytic_numeric_oracle(acceptance):
    rng = np.random.default_rng(7)
    grid = np.linspace(0.0, 20.0, 201)
    worst = {"schrodinger": 0.0, "master": 0.0}
    for _ in range(50):
        w = rng.uniform(-1, 1)
        p = NetworkParams(
            omega_c1=w, omega_c2=w, omega_a1=w, omega_a2=w,
            g1=rng.uniform(0, 1.5), g2=rng.uniform(0, 1.5), alpha=rng.uniform(0, 2 * math.pi),
            gamma_R1=1.0, gamma_R2=1.0, kD=rng.uniform(0, 2 * math.pi),
        )
        c = np.array(analytic_amplitudes(p, grid)).T
        sch = evolve_schrodinger(build_effective_hamiltonian(p), PureState.basis("eg00"), grid)
        worst["schrodinger"] = max(worst["schrodinger"], np.max(np.abs(sch.states[:, SE] - c)))
        me = evolve_master_equation(build_liouvillian(p), initial_density("eg00"), grid)
        block = me.states[:, SE][:, :, SE]
        outer = c[:, :, None] * c[:, None, :].conj()
        worst["master"] = max(worst["master"], np.max(np.abs(block - outer)))
    ok = max(worst.values()) <= 1e-6
    acceptance(7, "analytic-numeric oracle", ok,
               f"50 sets: max |c_analytic - c_schrodinger| = {worst['schrodinger']:.2e}, "
               f"max |rho_SE - c c^dag| = {worst['master']:.2e} (limit 1e-6)")


def test_8_distance_invariance(acceptance):
    d = np.linspace(0, 2, 21)
    chiral = [v for _, v in sweep_distance(symmetric_optimum(), 2 * math.pi * d, workers=WORKERS)]
    spread = max(chiral) - min(chiral)
    partial = [v for _, v in sweep_distance(with_chirality(symmetric_optimum(), 0.9), 2 * math.pi * d, workers=WORKERS)]
    best = d[int(np.argmax(partial))]
    step = d[1] - d[0]
    on_half = abs(2 * best - round(2 * best)) / 2 <= step / 2
    ok = spread <= 1e-8 and on_half
    acceptance(8, "distance invariance", ok,
               f"chi=1 spread {spread:.2e} (limit 1e-8); chi=0.9 argmax at D={best:.2f} lambda")


def _conservation_errors(name):
    conf = load(CONFIGS / f"{name}.cfg")
    p = conf.params
    grid = np.linspace(0, conf["t_max"], conf["n_times"])
    me = evolve_master_equation(build_liouvillian(p), initial_density("eg00", p.variant), grid)
    sch = evolve_schrodinger(build_effective_hamiltonian(p), PureState.basis("eg00"), grid)
    errors = []
    for traj in (me, sch):
        try:
            check_conservation(traj)
        except InvariantError as exc:
            errors.append(f"{name}: {exc}")
    trace = float(np.max(np.abs(np.real(np.trace(me.states, axis1=1, axis2=2)) - 1)))
    low = float(min(np.linalg.eigvalsh(r)[0] for r in me.states))
    return errors, trace, low


def test_9_conservation(acceptance):
    names = sorted(p.stem for p in CONFIGS.glob("*.cfg"))
    errors, traces, lows = [], [], []
    for name in names:
        e, trace, low = _conservation_errors(name)
        errors += e
        traces.append(trace)
        lows.append(low)
    detail = (f"{len(names)} configs: worst trace drift {max(traces):.1e} (limit 1e-9), "
              f"lowest eigenvalue {min(lows):.1e} (limit -1e-8), norm and probability sum monotone")
    acceptance(9, "conservation suite", not errors, detail if not errors else "; ".join(errors))


def test_10_determinism(acceptance, tmp_path):
    runs = [
        ["simulate", "--config", str(CONFIGS / "chiral_symmetric.cfg")],
        ["optimize", "--config", str(CONFIGS / "chiral_symmetric.cfg"), "--set", "grid_points=6"],
        ["sweep-detuning", "--config", str(CONFIGS / "chiral_symmetric.cfg"), "--set", "samples=20", "--seed", "42"],
    ]
    mismatched = []
    for k, args in enumerate(runs):
        outputs = []
        for rep in range(2):
            out = tmp_path / f"{k}_{rep}"
            assert cli.main([*args, "--out", str(out), "--workers", str(WORKERS)]) == 0
            outputs.append([f.read_bytes() for f in sorted(out.iterdir())])
        if outputs[0] != outputs[1]:
            mismatched.append(args[0])
    acceptance(10, "determinism", not mismatched,
               "simulate, optimize and sweep-detuning reruns byte-identical" if not mismatched
               else f"differing outputs: {', '.join(mismatched)}")
