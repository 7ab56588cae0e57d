"""Time evolution: master equation, no-jump Schrodinger equation, closed forms.

The closed forms assume a perfectly chiral, resonant network of identical
waveguide couplings without atomic decay, starting from |eg00>. Both nodes
then reduce to damped Jaynes-Cummings pairs whose spectra are fixed by
``kappa_i = sqrt(gamma_R**2 - 16 g_i**2)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import entanglement as ent
from .errors import IntegrationError, InvariantError, PreconditionError
from .model import (
    Liouvillian,
    single_excitation_block,
    single_excitation_indices,
)
from .params import NetworkParams, Variant
from .states import PureState

RTOL = 1e-10
ATOL = 1e-12
DEFAULT_T_MAX = 40.0

CSV_COLUMNS = ("t", "P_eg", "P_ge", "P_10", "P_01", "C", "F1", "F2", "F3")


def fmt(x: float) -> str:
    return f"{x:.12g}"


def check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValueError("time grid must be a non-empty array of finite times")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return grid


def _variant_for_dim(n: int) -> Variant:
    return {16: Variant.WITH_CAVITY, 4: Variant.NO_CAVITY}[n]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a time grid plus the derived two-qubit observables.

    ``states`` holds either state vectors (shape ``(n, dim)``, possibly with
    decaying norm) or density matrices (shape ``(n, dim, dim)``).
    """

    times: np.ndarray
    states: np.ndarray
    variant: Variant = Variant.WITH_CAVITY
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = check_grid(self.times)
        if len(self.states) != len(times):
            raise ValueError("one state per grid time required")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def is_pure(self) -> bool:
        return self.states.ndim == 2

    def populations(self) -> np.ndarray:
        """Populations of (eg, ge, 10, 01); photon columns are zero without cavities."""
        idx = single_excitation_indices(self.variant)
        out = np.zeros((len(self.times), 4))
        if self.is_pure:
            out[:, : len(idx)] = np.abs(self.states[:, idx]) ** 2
        else:
            out[:, : len(idx)] = np.real(self.states[:, idx, idx])
        return out

    def pure_state(self, k: int) -> PureState:
        return PureState.from_vector(self.states[k], self.variant)

    def reduced(self, k: int) -> np.ndarray:
        if self.is_pure:
            return ent.reduce_to_qubits(self.pure_state(k))
        return ent.reduce_to_qubits(self.states[k])

    @cached_property
    def reduced_states(self) -> np.ndarray:
        return np.array([self.reduced(k) for k in range(len(self.times))])

    @cached_property
    def observables(self) -> dict[str, np.ndarray]:
        pops = self.populations()
        red = self.reduced_states
        return {
            "t": self.times,
            "P_eg": pops[:, 0],
            "P_ge": pops[:, 1],
            "P_10": pops[:, 2],
            "P_01": pops[:, 3],
            "C": np.array([ent.concurrence(r) for r in red]),
            "F1": np.array([ent.fidelity(r, ent.Target.PSI_PLUS) for r in red]),
            "F2": np.array([ent.fidelity(r, ent.Target.PSI_MINUS) for r in red]),
            "F3": np.array([ent.fidelity(r, ent.Target.GE) for r in red]),
        }

    def csv_text(self) -> str:
        obs = self.observables
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for k in range(len(self.times)):
            writer.writerow([fmt(obs[c][k]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.csv_text(), encoding="utf-8", newline="")
        return path


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix must have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def _integrate(rhs, y0: np.ndarray, grid: np.ndarray, rtol: float, atol: float) -> np.ndarray:
    if grid.size == 1:
        return y0[None, :]
    sol = solve_ivp(rhs, (grid[0], grid[-1]), y0, method="RK45", t_eval=grid, rtol=rtol, atol=atol)
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else float(grid[0])
        raise IntegrationError(sol.message, t_fail)
    return sol.y.T


def evolve_master_equation(
    L: Liouvillian, rho0: np.ndarray, grid, *, rtol: float = RTOL, atol: float = ATOL
) -> Trajectory:
    grid = check_grid(grid)
    rho0 = check_density_matrix(rho0)
    n = L.dim
    if rho0.shape != (n, n):
        raise ValueError(f"rho0 has shape {rho0.shape}, generator acts on dimension {n}")
    S = L.superoperator
    ys = _integrate(lambda t, y: S @ y, rho0.reshape(-1), grid, rtol, atol)
    return Trajectory(grid, ys.reshape(-1, n, n), _variant_for_dim(n), {"solver": "master"})


def evolve_schrodinger(
    Heff: np.ndarray, psi0: PureState | np.ndarray, grid, *, rtol: float = RTOL, atol: float = ATOL
) -> Trajectory:
    grid = check_grid(grid)
    Heff = np.asarray(Heff, dtype=complex)
    variant = _variant_for_dim(Heff.shape[0])
    vec = psi0.to_vector(variant) if isinstance(psi0, PureState) else np.asarray(psi0, dtype=complex)
    if abs(np.vdot(vec, vec) - 1) > 1e-10:
        raise ValueError("psi0 must be normalized")
    M = -1j * Heff
    ys = _integrate(lambda t, y: M @ y, vec, grid, rtol, atol)
    return Trajectory(grid, ys, variant, {"solver": "schrodinger"})


def initial_density(label: str = "eg00", variant: Variant = Variant.WITH_CAVITY) -> np.ndarray:
    from .states import projector

    if Variant(variant) is Variant.NO_CAVITY and len(label) == 4:
        label = label[:2]
    return projector(label, variant)


def check_conservation(traj: Trajectory, *, trace_tol: float = 1e-9, psd_tol: float = 1e-8) -> None:
    """Raise :class:`InvariantError` if the trajectory leaks probability or positivity."""
    if traj.is_pure:
        norms = np.sum(np.abs(traj.states) ** 2, axis=1)
        if np.any(np.diff(norms) > 1e-10):
            raise InvariantError("norm increased along a no-jump trajectory")
    else:
        traces = np.real(np.trace(traj.states, axis1=1, axis2=2))
        worst = np.max(np.abs(traces - 1))
        if worst > trace_tol:
            raise InvariantError(f"trace drifted by {worst:.3g}")
        herm = 0.5 * (traj.states + np.conj(np.swapaxes(traj.states, 1, 2)))
        low = np.linalg.eigvalsh(herm)[:, 0].min()
        if low < -psd_tol:
            raise InvariantError(f"density matrix eigenvalue {low:.3g} below -{psd_tol:g}")
    psum = traj.populations().sum(axis=1)
    if np.any(psum > 1 + 1e-9) or np.any(np.diff(psum) > 1e-9):
        raise InvariantError("single-excitation probability grew")


# ---------------------------------------------------------------------------
# Exact single-excitation propagation (matrix exponential of the 4x4 block)
# ---------------------------------------------------------------------------

def propagate_single_excitation(p: NetworkParams, times, initial=None) -> np.ndarray:
    """Amplitudes (c_eg, c_ge, c_10, c_01) at ``times``, starting from ``initial`` at t=0.

    Uses the exact propagator of the no-jump block; the photon columns are zero
    for the no-cavity variant.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    H = single_excitation_block(p)
    d = H.shape[0]
    c0 = np.zeros(d, dtype=complex)
    if initial is None:
        c0[0] = 1
    else:
        c0[:] = np.asarray(initial, dtype=complex)[:d]
    out = np.zeros((times.size, 4), dtype=complex)
    if times.size == 0:
        return out
    steps = np.diff(times)
    uniform = times.size > 2 and np.allclose(steps, steps[0], rtol=1e-12, atol=0)
    if not uniform:
        for k, t in enumerate(times):
            out[k, :d] = expm(-1j * H * t) @ c0
        return out
    n = times.size
    m = int(np.ceil(np.sqrt(n)))
    U = expm(-1j * H * steps[0])
    start = expm(-1j * H * times[0]) @ c0
    small = np.empty((m, d, d), dtype=complex)
    small[0] = np.eye(d)
    for k in range(1, m):
        small[k] = U @ small[k - 1]
    big = U @ small[m - 1]
    blocks = -(-n // m)
    heads = np.empty((blocks, d), dtype=complex)
    heads[0] = start
    for j in range(1, blocks):
        heads[j] = big @ heads[j - 1]
    amps = np.einsum("kab,jb->jka", small, heads).reshape(-1, d)[:n]
    out[:, :d] = amps
    return out


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

_SERIES_TERMS = 16


def _inv_factorials(offset: int) -> np.ndarray:
    from math import factorial

    return np.array([1.0 / factorial(2 * k + offset) for k in range(_SERIES_TERMS)])


_INV_EVEN = _inv_factorials(0)   # 1/(2k)!
_INV_ODD = _inv_factorials(1)    # 1/(2k+1)!


def _series(w: np.ndarray, coefs: np.ndarray) -> np.ndarray:
    out = np.zeros_like(w)
    for c in coefs[::-1]:
        out = out * w + c
    return out


def _dsh_coefs() -> np.ndarray:
    from math import factorial

    # (z cosh z - sinh z) / z**3 = sum_{k>=1} 2k z**(2k-2) / (2k+1)!
    return np.array([2.0 * k / factorial(2 * k + 1) for k in range(1, _SERIES_TERMS + 1)])


_DSH_COEF = _dsh_coefs()


def _kernels(kappa, t):
    """cosh(kt/4), sinh(kt/4)/k and d/d(k**2) of the latter, as functions of k**2.

    All three are even in ``kappa``; a power series in ``(kt/4)**2`` replaces
    the closed forms when that argument is small, which removes the 0/0 at
    ``kappa -> 0`` and the cancellation just next to it.
    """
    kappa = np.asarray(kappa, dtype=complex)
    t = np.asarray(t, dtype=float)
    kappa, t = np.broadcast_arrays(kappa, t)
    z = kappa * t / 4
    w = z * z
    small = np.abs(z) < 1.0
    ch = np.empty(z.shape, dtype=complex)
    sh = np.empty(z.shape, dtype=complex)
    dsh = np.empty(z.shape, dtype=complex)
    ws = w[small]
    ts = t[small]
    ch[small] = _series(ws, _INV_EVEN)
    sh[small] = ts / 4 * _series(ws, _INV_ODD)
    dsh[small] = ts ** 3 / 128 * _series(ws, _DSH_COEF)
    big = ~small
    zb, kb, tb = z[big], kappa[big], t[big]
    ch[big] = np.cosh(zb)
    sh[big] = np.sinh(zb) / kb
    dsh[big] = (kb * tb * np.cosh(zb) - 4 * np.sinh(zb)) / (8 * kb ** 3)
    return ch, sh, dsh


def _require_analytic_regime(p: NetworkParams, *, equal_g: bool = False) -> float:
    if not p.has_cavity:
        raise PreconditionError("closed forms describe the with-cavity network")
    if p.gamma_L1 != 0 or p.gamma_L2 != 0:
        raise PreconditionError("closed forms require perfect chirality (gamma_L = 0)")
    if p.gamma_R1 != p.gamma_R2 or p.gamma_R1 <= 0:
        raise PreconditionError("closed forms require gamma_R1 == gamma_R2 > 0")
    if p.Gamma1 != 0 or p.Gamma2 != 0:
        raise PreconditionError("closed forms require Gamma1 == Gamma2 == 0")
    freqs = p.frequencies()
    scale = max(1.0, max(abs(f) for f in freqs))
    if max(freqs) - min(freqs) > 1e-12 * scale:
        raise PreconditionError("closed forms require all four frequencies equal")
    if equal_g and p.g1 != p.g2:
        raise PreconditionError("equal-coupling probabilities require g1 == g2")
    return p.gamma_R1


def kappa(g: float, gamma_R: float) -> complex:
    return np.sqrt(complex(gamma_R ** 2 - 16 * g ** 2))


def analytic_amplitudes(p: NetworkParams, t):
    """Closed-form (c_eg, c_ge, c_10, c_01) starting from |eg00> at t=0.

    ``c_ge`` and ``c_01`` are divided differences in ``kappa**2`` between the
    two nodes; when ``|g1 - g2| < 1e-6 gamma_R`` they are replaced by the
    derivative at the midpoint, i.e. the g1 = g2 limit.
    """
    gamma = _require_analytic_regime(p)
    t = np.asarray(t, dtype=float)
    w0 = p.omega_a1
    g1, g2 = p.g1, p.g2
    k1, k2 = kappa(g1, gamma), kappa(g2, gamma)
    envelope = np.exp(-gamma * t / 4 - 1j * w0 * t)
    ch1, sh1, dsh1 = _kernels(k1, t)

    c_eg = envelope * (gamma * sh1 + ch1)
    c_10 = -4j * g1 * envelope * sh1

    if abs(g1 - g2) < 1e-6 * gamma:
        km = kappa(0.5 * (g1 + g2), gamma)
        _, shm, dshm = _kernels(km, t)
        dd_sh = dshm
        dd_ch = t / 8 * shm
    else:
        ch2, sh2, _ = _kernels(k2, t)
        du = (k2 * k2 - k1 * k1)
        dd_sh = (sh2 - sh1) / du
        dd_ch = (ch2 - ch1) / du

    c_ge = 64 * g1 * g2 * gamma * dd_sh * envelope * np.exp(1j * (p.kD - p.alpha))
    c_01 = -16j * g1 * gamma * np.exp(1j * p.kD) * envelope * (gamma * dd_sh - dd_ch)
    return c_eg, c_ge, c_10, c_01


def analytic_probabilities_equal_g(p: NetworkParams, t):
    """Closed-form (P_eg, P_ge, P_10, P_01) for g1 == g2 == g.

    For ``g > gamma_R / 4`` the decay constant ``kappa`` is imaginary and the
    hyperbolic functions turn into their trigonometric counterparts.
    """
    gamma = _require_analytic_regime(p, equal_g=True)
    g = p.g1
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k2 = gamma ** 2 - 16 * g ** 2
    damp = np.exp(-gamma * t / 2)
    # w = (kappa t / 4)**2, real for either sign of kappa**2
    w = k2 * t ** 2 / 16
    small = np.abs(w) < 1.0
    C = np.empty_like(w)
    S = np.empty_like(w)
    K3 = np.empty_like(w)
    ts = t[small]
    C[small] = _series(w[small], _INV_EVEN)
    S[small] = ts / 4 * _series(w[small], _INV_ODD)
    K3[small] = ts ** 3 / 16 * _series(w[small], _DSH_COEF)
    big = ~small
    tb = t[big]
    if k2 > 0:
        k = np.sqrt(k2)
        x = k * tb / 4
        C[big] = np.cosh(x)
        S[big] = np.sinh(x) / k
        K3[big] = (k * tb * np.cosh(x) - 4 * np.sinh(x)) / k ** 3
    elif k2 < 0:
        q = np.sqrt(-k2)
        x = q * tb / 4
        C[big] = np.cos(x)
        S[big] = np.sin(x) / q
        K3[big] = -(q * tb * np.cos(x) - 4 * np.sin(x)) / q ** 3
    P_eg = damp * (gamma * S + C) ** 2
    P_ge = damp * (8 * g ** 2 * gamma * K3) ** 2
    P_10 = damp * (4 * g * S) ** 2
    P_01 = damp * (2 * g * gamma * (gamma * K3 - t * S)) ** 2
    if scalar:
        return P_eg[0], P_ge[0], P_10[0], P_01[0]
    return P_eg, P_ge, P_10, P_01
