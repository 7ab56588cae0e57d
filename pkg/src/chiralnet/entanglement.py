"""Two-qubit reduction, concurrence and target-state fidelities.

Two-qubit states are 4x4 matrices over (|gg>, |ge>, |eg>, |ee>), where the
first letter is qubit 1.
"""
from __future__ import annotations

import enum

import numpy as np

from .states import PureState

TWO_QUBIT_LABELS = ("gg", "ge", "eg", "ee")
GG, GE, EG, EE = range(4)

_SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
_CLIP = 1e-8


def check_two_qubit_state(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"two-qubit state must be 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("two-qubit state is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError(f"two-qubit state has trace {np.trace(rho).real:.12g}")
    if np.linalg.eigvalsh(rho)[0] < -_CLIP:
        raise ValueError("two-qubit state is not positive semidefinite")
    return rho


def _partial_trace_cavities(rho: np.ndarray) -> np.ndarray:
    # (q1 q2) x (c1 c2) split: trace the 4-dim cavity block
    return np.trace(rho.reshape(4, 4, 4, 4), axis1=1, axis2=3)


def reduce_to_qubits(state: PureState | np.ndarray) -> np.ndarray:
    """Trace out both cavities.

    A no-jump pure state has norm below one; the missing weight belongs to
    histories where a photon left through the waveguide or an atom decayed,
    and every such history ends in |gg00>. It is therefore added to |gg><gg|.
    """
    if isinstance(state, PureState):
        vec = state.to_vector()
        reduced = _partial_trace_cavities(np.outer(vec, vec.conj()))
        reduced[GG, GG] += max(0.0, 1.0 - state.norm_squared)
        return reduced
    rho = np.asarray(state, dtype=complex)
    if rho.shape == (16, 16):
        return _partial_trace_cavities(rho)
    if rho.shape == (4, 4):
        return rho.copy()
    raise ValueError(f"cannot reduce a state of shape {rho.shape}")


def _clipped(values: np.ndarray, what: str) -> np.ndarray:
    if values.min() < -_CLIP:
        raise ValueError(f"{what} has eigenvalue {values.min():.3g} below -{_CLIP:g}")
    return np.clip(values, 0.0, None)


def wootters_concurrence(rho: np.ndarray) -> float:
    rho = check_two_qubit_state(rho)
    w, v = np.linalg.eigh(rho)
    root = (v * np.sqrt(_clipped(w, "rho"))) @ v.conj().T
    flipped = _SIGMA_YY @ rho.conj() @ _SIGMA_YY
    R = root @ flipped @ root
    lam = np.sqrt(_clipped(np.linalg.eigvalsh(0.5 * (R + R.conj().T)), "R"))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def coherence_concurrence(rho: np.ndarray) -> float:
    """``2 |<eg|rho|ge>|``, exact for states confined to the single-excitation sector."""
    rho = check_two_qubit_state(rho)
    return float(min(1.0, 2.0 * abs(rho[EG, GE])))


concurrence = wootters_concurrence


class Target(str, enum.Enum):
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    EG = "eg"
    GE = "ge"


def target_vector(target: Target | str) -> np.ndarray:
    vec = np.zeros(4, dtype=complex)
    target = Target(target)
    if target is Target.EG:
        vec[EG] = 1
    elif target is Target.GE:
        vec[GE] = 1
    else:
        sign = 1 if target is Target.PSI_PLUS else -1
        vec[EG], vec[GE] = 1 / np.sqrt(2), sign / np.sqrt(2)
    return vec


def fidelity(rho: np.ndarray, target: Target | str | np.ndarray) -> float:
    rho = check_two_qubit_state(rho)
    if isinstance(target, np.ndarray):
        psi = np.asarray(target, dtype=complex).reshape(-1)
        if psi.shape != (4,) or abs(np.vdot(psi, psi) - 1) > 1e-10:
            raise ValueError("custom target must be a normalized 4-vector")
    else:
        psi = target_vector(target)
    return float(np.clip(np.real(psi.conj() @ rho @ psi), 0.0, 1.0))
