"""Peak search, coupling optimization and imperfection sweeps.

Every objective here is evaluated on the no-jump single-excitation block with
its exact propagator. That is equivalent to the full master equation for the
two-qubit observables: jumps only feed |gg00>, which contributes to none of
C, F1, F2 or F3.
"""
from __future__ import annotations

import enum
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from .dynamics import DEFAULT_T_MAX, fmt, propagate_single_excitation
from .errors import InvariantError, PreconditionError
from .model import (
    Liouvillian,
    build_jc_hamiltonian,
    build_liouvillian,
    collective_jump_operators,
    lowering_operators,
    single_excitation_block,
    waveguide_coherent_term,
)
from .optim import nelder_mead
from .params import NetworkParams, Variant, symmetric_optimum

PEAK_GRID_POINTS = 1000
GOLDEN_ITERATIONS = 60
NONCHIRAL_T_MAX = 1000.0
FREE_PARAMETERS = ("g1", "g2", "gamma_R2")
DEFAULT_BOUNDS = {"g1": (0.0, 4.0), "g2": (0.0, 4.0), "gamma_R2": (0.1, 10.0)}
DETUNING_TARGETS = ("omega_a1", "omega_a2", "omega_c1", "omega_c2")


class Observable(str, enum.Enum):
    CONCURRENCE = "concurrence"
    F1 = "F1"
    F2 = "F2"
    F3 = "F3"


def observable_from_amplitudes(amps: np.ndarray, observable: Observable | str) -> np.ndarray:
    """Two-qubit observables from no-jump amplitudes ``(..., 4)`` = (eg, ge, 10, 01)."""
    c_eg, c_ge = amps[..., 0], amps[..., 1]
    observable = Observable(observable)
    if observable is Observable.CONCURRENCE:
        return 2.0 * np.abs(c_eg * np.conj(c_ge))
    if observable is Observable.F1:
        return 0.5 * np.abs(c_eg + c_ge) ** 2
    if observable is Observable.F2:
        return 0.5 * np.abs(c_eg - c_ge) ** 2
    return np.abs(c_ge) ** 2


@dataclass(frozen=True)
class Peak:
    value: float
    t_peak: float


def _golden_max(f: Callable[[float], float], lo: float, hi: float) -> tuple[float, float]:
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(GOLDEN_ITERATIONS):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        if b - a < 1e-12 * max(1.0, hi):
            break
    return (c, fc) if fc >= fd else (d, fd)


def peak_over_time(
    p: NetworkParams,
    observable: Observable | str = Observable.CONCURRENCE,
    *,
    t_max: float = DEFAULT_T_MAX,
    n_grid: int = PEAK_GRID_POINTS,
) -> Peak:
    """Global maximum of an observable on [0, t_max], starting from |eg00>.

    Dense scan followed by golden-section refinement between the neighbours
    of the best grid point. The earliest grid maximum wins ties, and the
    refinement is only kept if it strictly improves on the grid value.
    """
    frame = p.rotating_frame()
    times = np.linspace(0.0, t_max, n_grid)
    amps = propagate_single_excitation(frame, times)
    values = observable_from_amplitudes(amps, observable)
    i = int(np.argmax(values))
    best = Peak(float(values[i]), float(times[i]))
    lo_i, hi_i = max(i - 1, 0), min(i + 1, n_grid - 1)
    H = single_excitation_block(frame)
    d = H.shape[0]
    start = amps[lo_i, :d]
    t_lo = times[lo_i]

    def f(t: float) -> float:
        c = np.zeros(4, dtype=complex)
        c[:d] = expm(-1j * H * (t - t_lo)) @ start
        return float(observable_from_amplitudes(c, observable))

    t_ref, v_ref = _golden_max(f, t_lo, times[hi_i])
    if v_ref > best.value:
        best = Peak(v_ref, t_ref)
    return best


@dataclass
class StudyResult:
    objective: str
    param_names: tuple[str, ...]
    best_params: dict[str, float]
    best_value: float
    t_peak: float
    evaluations: int
    converged: bool = True
    seed: int | None = None
    sample_mean: float | None = None
    sample_std: float | None = None
    sample_count: int | None = None
    columns: tuple[str, ...] = ()
    rows: list[tuple] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        out = {
            "objective": self.objective,
            "best_params": dict(self.best_params),
            "best_value": self.best_value,
            "t_peak": self.t_peak,
            "seed": self.seed,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }
        if self.sample_count is not None:
            out.update(sample_mean=self.sample_mean, sample_std=self.sample_std, sample_count=self.sample_count)
        return out


def parallel_map(func: Callable, items: Sequence, workers: int = 1) -> list:
    """Map in order; ``workers > 1`` fans out to processes, results gathered by index."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [func(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunk))


def _with_values(p: NetworkParams, names: Sequence[str], values: Iterable[float]) -> NetworkParams:
    return p.replace(**{n: float(v) for n, v in zip(names, values)})


def _peak_at(values, *, p: NetworkParams, names: tuple[str, ...], observable: str, t_max: float) -> Peak:
    return peak_over_time(_with_values(p, names, values), observable, t_max=t_max)


def optimize_couplings(
    p_base: NetworkParams,
    free: Sequence[str],
    bounds: dict[str, tuple[float, float]] | None = None,
    *,
    observable: Observable | str = Observable.CONCURRENCE,
    t_max: float = DEFAULT_T_MAX,
    grid_points: int = 21,
    n_starts: int = 3,
    max_evals: int = 2000,
    xtol: float = 1e-4,
    workers: int = 1,
) -> StudyResult:
    """Maximize the peak of ``observable`` over the ``free`` parameters.

    A full grid (``grid_points`` per axis) seeds Nelder-Mead runs from its
    ``n_starts`` best points and from ``p_base`` itself, so the result never
    falls below the starting configuration. The simplex works in coordinates
    scaled to the unit box.
    """
    names = tuple(free)
    if not names:
        raise PreconditionError("at least one free parameter is required")
    for n in names:
        if n not in FREE_PARAMETERS:
            raise PreconditionError(f"{n!r} cannot be optimized; choose from {FREE_PARAMETERS}")
    if not p_base.has_cavity and any(n in ("g1", "g2") for n in names):
        raise PreconditionError("g1/g2 have no effect without cavities")
    box = {n: tuple(map(float, (bounds or {}).get(n, DEFAULT_BOUNDS[n]))) for n in names}
    for n, (lo, hi) in box.items():
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise PreconditionError(f"bounds for {n} must be finite with upper > lower")
    lo = np.array([box[n][0] for n in names])
    span = np.array([box[n][1] for n in names]) - lo
    peak = partial(_peak_at, p=p_base, names=names, observable=Observable(observable).value, t_max=t_max)

    axes = [np.linspace(box[n][0], box[n][1], grid_points) for n in names]
    grid = [np.array(v) for v in itertools.product(*axes)]
    grid_peaks = parallel_map(peak, grid, workers)
    rows: list[tuple] = [("grid", -1, *x, pk.value, pk.t_peak) for x, pk in zip(grid, grid_peaks)]
    evaluations = len(grid)

    order = sorted(range(len(grid)), key=lambda k: -grid_peaks[k].value)
    starts = [(grid[k] - lo) / span for k in order[:n_starts]]
    base = np.array([getattr(p_base, n) for n in names])
    starts.append(np.clip((base - lo) / span, 0.0, 1.0))

    best_x = grid[order[0]]
    best = grid_peaks[order[0]]
    converged = True
    for s, x0 in enumerate(starts):
        def objective(u, s=s):
            x = lo + span * u
            pk = peak(x)
            rows.append(("simplex", s, *x, pk.value, pk.t_peak))
            return -pk.value

        res = nelder_mead(objective, x0, step=1.0 / max(grid_points - 1, 1), xtol=xtol, max_evals=max_evals)
        evaluations += res.evaluations
        converged = converged and res.converged
        x = lo + span * res.x
        if -res.fun > best.value:
            best_x, best = x, peak(x)

    return StudyResult(
        objective=f"max_t {Observable(observable).value}",
        param_names=names,
        best_params={n: float(v) for n, v in zip(names, best_x)},
        best_value=best.value,
        t_peak=best.t_peak,
        evaluations=evaluations,
        converged=converged,
        columns=("phase", "start", *names, "value", "t_peak"),
        rows=rows,
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _cmax(p: NetworkParams, t_max: float) -> float:
    return peak_over_time(p, Observable.CONCURRENCE, t_max=t_max).value


def sweep_distance(
    p: NetworkParams, kd_values: Iterable[float], *, t_max: float = DEFAULT_T_MAX, workers: int = 1
) -> list[tuple[float, float]]:
    kds = [float(k) for k in kd_values]
    values = parallel_map(partial(_cmax, t_max=t_max), [p.replace(kD=k) for k in kds], workers)
    return list(zip(kds, values))


def with_chirality(p: NetworkParams, chi: float, hold: str = "gamma_R") -> NetworkParams:
    """Network with each node's left/right split set to chirality ``chi``.

    ``hold="gamma_R"`` keeps the forward rate and derives gamma_L;
    ``hold="total"`` keeps gamma_R + gamma_L per node.
    """
    if not 0.0 <= chi <= 1.0:
        raise PreconditionError("chirality must lie in [0, 1]")
    if hold == "gamma_R":
        ratio = (1 - chi) / (1 + chi)
        return p.replace(gamma_L1=p.gamma_R1 * ratio, gamma_L2=p.gamma_R2 * ratio)
    if hold == "total":
        s1, s2 = p.gamma_R1 + p.gamma_L1, p.gamma_R2 + p.gamma_L2
        return p.replace(
            gamma_R1=s1 * (1 + chi) / 2, gamma_L1=s1 * (1 - chi) / 2,
            gamma_R2=s2 * (1 + chi) / 2, gamma_L2=s2 * (1 - chi) / 2,
        )
    raise ValueError(f"hold must be 'gamma_R' or 'total', got {hold!r}")


def sweep_chirality(
    p: NetworkParams,
    chi_values: Iterable[float],
    *,
    hold: str = "gamma_R",
    kD: float = math.pi,
    t_max: float = DEFAULT_T_MAX,
    workers: int = 1,
) -> list[tuple[float, float]]:
    chis = [float(c) for c in chi_values]
    nets = [with_chirality(p.replace(kD=kD), c, hold) for c in chis]
    return list(zip(chis, parallel_map(partial(_cmax, t_max=t_max), nets, workers)))


def sweep_distance_chirality(
    p: NetworkParams,
    kd_values: Iterable[float],
    chi_values: Iterable[float],
    *,
    hold: str = "gamma_R",
    t_max: float = DEFAULT_T_MAX,
    workers: int = 1,
) -> list[tuple[float, float, float]]:
    pairs = [(float(k), float(c)) for c in chi_values for k in kd_values]
    nets = [with_chirality(p.replace(kD=k), c, hold) for k, c in pairs]
    values = parallel_map(partial(_cmax, t_max=t_max), nets, workers)
    return [(k, c, v) for (k, c), v in zip(pairs, values)]


def detuning_offset(seed: int, delta_index: int, sample_index: int, delta: float) -> float:
    """Uniform draw on [-delta/2, delta/2] from a Philox stream keyed by the indices.

    Each (seed, delta_index, sample_index) owns its own counter block, so a
    sample does not depend on the order in which samples are computed.
    """
    bits = np.random.Philox(key=seed, counter=[0, 0, sample_index, delta_index])
    return float(np.random.Generator(bits).uniform(-delta / 2, delta / 2))


def _detuned_cmax(task, *, p: NetworkParams, target: str, t_max: float) -> float:
    offset = task
    return _cmax(p.replace(**{target: getattr(p, target) + offset}), t_max)


def sweep_detuning(
    p: NetworkParams,
    target: str,
    delta_values: Iterable[float],
    *,
    samples: int = 200,
    seed: int = 0,
    t_max: float = DEFAULT_T_MAX,
    workers: int = 1,
) -> list[tuple[float, float, float]]:
    """Mean and sample standard deviation of C_max under random detuning of one frequency."""
    if target not in DETUNING_TARGETS:
        raise PreconditionError(f"target must be one of {DETUNING_TARGETS}")
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    deltas = [float(d) for d in delta_values]
    offsets = [
        detuning_offset(seed, i, s, d) for i, d in enumerate(deltas) for s in range(samples)
    ]
    values = np.array(
        parallel_map(partial(_detuned_cmax, p=p, target=target, t_max=t_max), offsets, workers)
    ).reshape(len(deltas), samples)
    out = []
    for d, row in zip(deltas, values):
        # centred on the first sample so identical samples reproduce it exactly
        dev = row - row[0]
        std = float(np.std(dev, ddof=1)) if samples > 1 else 0.0
        out.append((d, float(row[0] + np.mean(dev)), std))
    return out


def sweep_atomic_decay(
    p: NetworkParams,
    gamma_values: Iterable[float],
    *,
    reoptimize: bool,
    bounds: dict[str, tuple[float, float]] | None = None,
    t_max: float = DEFAULT_T_MAX,
    workers: int = 1,
) -> list[tuple[float, float]]:
    """C_max against equal atomic decay rates.

    Without re-optimization the couplings of ``p`` are held fixed; with it,
    g1 and g2 are re-optimized for each rate, starting from those of ``p``.
    """
    out = []
    for G in gamma_values:
        G = float(G)
        if G < 0:
            raise PreconditionError("atomic decay rates must be >= 0")
        q = p.replace(Gamma1=G, Gamma2=G)
        if reoptimize:
            res = optimize_couplings(q, ("g1", "g2"), bounds, t_max=t_max, workers=workers)
            out.append((G, res.best_value))
        else:
            out.append((G, _cmax(q, t_max)))
    return out


@dataclass(frozen=True)
class BellPhaseResult:
    n: int
    fidelity_plus: float
    fidelity_minus: float
    concurrence: float
    t_peak: float
    coherent_residual: float
    jump_residual: float
    generator_residual: float


def nonchiral_bell_phase_check(n: int, p: NetworkParams, *, t_max: float = NONCHIRAL_T_MAX) -> BellPhaseResult:
    """Bell fidelities at the concurrence peak of a non-chiral network at kD = n*pi.

    Also confirms that at this spacing the waveguide's coherent exchange term
    vanishes, both collective jump operators reduce to ``a1 + (-1)**n a2``,
    and the generator equals ``H_JC`` plus ``2 gamma D[a1 + (-1)**n a2]``.
    """
    if n < 1 or int(n) != n:
        raise PreconditionError("n must be a positive integer")
    if not (p.is_symmetric and p.gamma_L1 == p.gamma_R1 and p.gamma_R1 > 0):
        raise PreconditionError("non-chiral check requires gamma_L == gamma_R on both nodes")
    sign = (-1) ** n
    if abs(np.exp(1j * p.kD) - sign) > 1e-12:
        raise PreconditionError(f"kD must equal n*pi (mod 2 pi) for n={n}")
    if p.Gamma1 or p.Gamma2:
        raise PreconditionError("non-chiral check assumes no atomic decay")

    ops = lowering_operators(p.variant)
    jump = ops["a1"] + sign * ops["a2"]
    coherent = float(np.max(np.abs(waveguide_coherent_term(p))))
    jumps = collective_jump_operators(p)
    jump_res = max(float(np.max(np.abs(jumps[k] - jump))) for k in ("R", "L"))
    reference = Liouvillian(build_jc_hamiltonian(p), ((2 * p.gamma_R1, jump),))
    gen_res = float(np.max(np.abs(build_liouvillian(p).superoperator - reference.superoperator)))
    for label, value in (("coherent term", coherent), ("jump operator", jump_res), ("generator", gen_res)):
        if value > 1e-12:
            raise InvariantError(f"{label} deviates by {value:.3g} at kD = {n}*pi")

    pk = peak_over_time(p, Observable.CONCURRENCE, t_max=t_max)
    amps = propagate_single_excitation(p.rotating_frame(), [pk.t_peak])
    return BellPhaseResult(
        n=int(n),
        fidelity_plus=float(observable_from_amplitudes(amps, Observable.F1)[0]),
        fidelity_minus=float(observable_from_amplitudes(amps, Observable.F2)[0]),
        concurrence=pk.value,
        t_peak=pk.t_peak,
        coherent_residual=coherent,
        jump_residual=jump_res,
        generator_residual=gen_res,
    )


# ---------------------------------------------------------------------------
# Reference optima
# ---------------------------------------------------------------------------

TABLE1_BOUNDS = {
    "no_cavity_unequal": {"gamma_R2": (0.1, 10.0)},
    "cavity_equal": {"g1": (0.0, 1.0), "g2": (0.0, 1.0)},
    "cavity_unequal": {"g1": (0.0, 4.0), "g2": (0.0, 4.0), "gamma_R2": (0.5, 8.5)},
}
TABLE1_KEYS = ("no_cavity_equal", "no_cavity_unequal", "cavity_equal", "cavity_unequal")


def table1(*, t_max: float = DEFAULT_T_MAX, workers: int = 1) -> dict[str, StudyResult]:
    """The four chiral optima: with/without cavities, equal/unequal gamma_R.

    Each larger search space is seeded with the optimum of the smaller one.
    """
    out: dict[str, StudyResult] = {}
    bare = NetworkParams(variant=Variant.NO_CAVITY)
    pk = peak_over_time(bare, t_max=t_max)
    out["no_cavity_equal"] = StudyResult(
        objective="max_t concurrence", param_names=(), best_params={},
        best_value=pk.value, t_peak=pk.t_peak, evaluations=1,
    )
    out["no_cavity_unequal"] = optimize_couplings(
        bare, ("gamma_R2",), TABLE1_BOUNDS["no_cavity_unequal"], t_max=t_max, workers=workers
    )
    equal = optimize_couplings(
        symmetric_optimum(), ("g1", "g2"), TABLE1_BOUNDS["cavity_equal"], t_max=t_max, workers=workers
    )
    out["cavity_equal"] = equal
    seeded = symmetric_optimum().replace(**equal.best_params)
    out["cavity_unequal"] = optimize_couplings(
        seeded, ("g1", "g2", "gamma_R2"), TABLE1_BOUNDS["cavity_unequal"], t_max=t_max, workers=workers
    )
    return out


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _round(value: Any) -> Any:
    if isinstance(value, float):
        return float(fmt(value))
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    if isinstance(value, np.generic):
        return _round(value.item())
    return value


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def json_text(payload: dict[str, Any]) -> str:
    return json.dumps(_round(payload), indent=2, sort_keys=True) + "\n"


def output_stem(out_dir: str | Path, study: str, stamp: str | None = None) -> Path:
    """``<out_dir>/<study>_<UTC timestamp>``, suffixed if that name is taken."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = stamp or datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    stem = out_dir / f"{study}_{stamp}"
    k = 1
    while stem.with_suffix(".csv").exists() or stem.with_suffix(".json").exists():
        stem = out_dir / f"{study}_{stamp}-{k}"
        k += 1
    return stem


def write_outputs(
    out_dir: str | Path,
    study: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    summary: dict[str, Any],
    *,
    stamp: str | None = None,
) -> tuple[Path, Path]:
    stem = output_stem(out_dir, study, stamp)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    csv_path.write_text(csv_text(columns, rows), encoding="utf-8", newline="")
    json_path.write_text(json_text(summary), encoding="utf-8", newline="")
    return csv_path, json_path
