"""Operators of the two-node network.

Basis convention
----------------
Tensor factors are ordered (qubit 1, qubit 2, cavity 1, cavity 2); each
factor is {0: ground/vacuum, 1: excited/one photon}; states are flattened
row-major over the factors, so ``|q1 q2 n1 n2>`` sits at index
``8*q1 + 4*q2 + 2*n1 + n2``. The no-cavity variant keeps only
(qubit 1, qubit 2), index ``2*q1 + q2``.

The cavities are truncated at one photon. Starting in the single-excitation
sector this is exact because every term of the generator conserves or lowers
the total excitation number.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .params import NetworkParams, Variant

_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_ID2 = np.eye(2, dtype=complex)

# Single-excitation states in the order (eg, ge, 10, 01).
SE_LABELS = ("eg", "ge", "10", "01")
SE_INDEX_WITH_CAVITY = (8, 4, 2, 1)
SE_INDEX_NO_CAVITY = (2, 1)
GROUND_INDEX = 0


def dimension(variant: Variant) -> int:
    return 16 if Variant(variant) is Variant.WITH_CAVITY else 4


def single_excitation_indices(variant: Variant) -> tuple[int, ...]:
    if Variant(variant) is Variant.WITH_CAVITY:
        return SE_INDEX_WITH_CAVITY
    return SE_INDEX_NO_CAVITY


def basis_index(label: str, variant: Variant = Variant.WITH_CAVITY) -> int:
    """Index of a product state, e.g. ``"eg00"`` or ``"ge"`` (no cavity)."""
    digits = [{"g": 0, "e": 1, "0": 0, "1": 1}[ch] for ch in label]
    if len(digits) != {16: 4, 4: 2}[dimension(variant)]:
        raise ValueError(f"label {label!r} does not match variant {Variant(variant).value}")
    index = 0
    for d in digits:
        index = 2 * index + d
    return index


def _embed(single: np.ndarray, slot: int, nfactors: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for k in range(nfactors):
        out = np.kron(out, single if k == slot else _ID2)
    return out


def lowering_operators(variant: Variant) -> dict[str, np.ndarray]:
    """``sigma1, sigma2`` and, with cavities, ``a1, a2``.

    Without cavities ``a1``/``a2`` alias the atomic operators, so that code
    written for the cavity model applies after the substitution a_j -> sigma_j.
    """
    if Variant(variant) is Variant.WITH_CAVITY:
        return {
            "sigma1": _embed(_LOWER, 0, 4),
            "sigma2": _embed(_LOWER, 1, 4),
            "a1": _embed(_LOWER, 2, 4),
            "a2": _embed(_LOWER, 3, 4),
        }
    s1, s2 = _embed(_LOWER, 0, 2), _embed(_LOWER, 1, 2)
    return {"sigma1": s1, "sigma2": s2, "a1": s1, "a2": s2}


def number_operator(variant: Variant) -> np.ndarray:
    ops = lowering_operators(variant)
    names = ("sigma1", "sigma2", "a1", "a2") if Variant(variant) is Variant.WITH_CAVITY else ("sigma1", "sigma2")
    return sum(ops[n].conj().T @ ops[n] for n in names)


def _dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def build_jc_hamiltonian(p: NetworkParams) -> np.ndarray:
    ops = lowering_operators(p.variant)
    s1, s2 = ops["sigma1"], ops["sigma2"]
    H = p.omega_a1 * _dag(s1) @ s1 + p.omega_a2 * _dag(s2) @ s2
    if p.has_cavity:
        a1, a2 = ops["a1"], ops["a2"]
        H = H + p.omega_c1 * _dag(a1) @ a1 + p.omega_c2 * _dag(a2) @ a2
        H = H + p.g1 * (_dag(a1) @ s1 + a1 @ _dag(s1))
        phase = np.exp(1j * p.alpha)
        H = H + p.g2 * (phase * _dag(a2) @ s2 + np.conj(phase) * a2 @ _dag(s2))
    return H


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Generator ``L(rho) = -i[H, rho] + sum rate*D[O] rho + cross terms``.

    Each cross term ``(z, A, B)`` contributes ``z [A, rho B^dag] + conj(z) [B rho, A^dag]``,
    which is the form taken by the waveguide-mediated couplings between nodes.
    """

    hamiltonian: np.ndarray
    dissipators: tuple[tuple[float, np.ndarray], ...] = ()
    cross_terms: tuple[tuple[complex, np.ndarray, np.ndarray], ...] = ()

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        H = self.hamiltonian
        out = -1j * (H @ rho - rho @ H)
        for rate, O in self.dissipators:
            OdO = _dag(O) @ O
            out += rate * (O @ rho @ _dag(O) - 0.5 * (OdO @ rho + rho @ OdO))
        for z, A, B in self.cross_terms:
            Ad, Bd = _dag(A), _dag(B)
            out += z * (A @ rho @ Bd - rho @ Bd @ A)
            out += np.conj(z) * (B @ rho @ Ad - Ad @ B @ rho)
        return out

    __call__ = apply

    @cached_property
    def superoperator(self) -> np.ndarray:
        """Matrix acting on row-major ``rho.ravel()``."""
        n = self.dim
        eye = np.eye(n, dtype=complex)
        H = self.hamiltonian
        S = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        for rate, O in self.dissipators:
            OdO = _dag(O) @ O
            S += rate * (np.kron(O, O.conj()) - 0.5 * np.kron(OdO, eye) - 0.5 * np.kron(eye, OdO.T))
        for z, A, B in self.cross_terms:
            Ad = _dag(A)
            S += z * (np.kron(A, B.conj()) - np.kron(eye, (_dag(B) @ A).T))
            S += np.conj(z) * (np.kron(B, A.conj()) - np.kron(Ad @ B, eye))
        return S


def build_liouvillian(p: NetworkParams) -> Liouvillian:
    ops = lowering_operators(p.variant)
    a1, a2 = ops["a1"], ops["a2"]
    dissipators = [
        (p.gamma_R1, a1), (p.gamma_L1, a1),
        (p.gamma_R2, a2), (p.gamma_L2, a2),
    ]
    if p.has_cavity:
        dissipators += [(p.Gamma1, ops["sigma1"]), (p.Gamma2, ops["sigma2"])]
    back = np.exp(-1j * p.kD)
    cross = [
        (np.sqrt(p.gamma_R1 * p.gamma_R2) * back, a2, a1),
        (np.sqrt(p.gamma_L1 * p.gamma_L2) * back, a1, a2),
    ]
    return Liouvillian(
        hamiltonian=build_jc_hamiltonian(p),
        dissipators=tuple((r, O) for r, O in dissipators if r != 0),
        cross_terms=tuple((z, A, B) for z, A, B in cross if z != 0),
    )


def collective_jump_operators(p: NetworkParams) -> dict[str, np.ndarray]:
    """Right- and left-moving collective operators with x1 = 0, x2 = D."""
    ops = lowering_operators(p.variant)
    a1, a2 = ops["a1"], ops["a2"]
    return {
        "R": a1 + np.exp(-1j * p.kD) * a2,
        "L": a1 + np.exp(1j * p.kD) * a2,
    }


def waveguide_coherent_term(p: NetworkParams) -> np.ndarray:
    """Hermitian exchange term the symmetric waveguide adds to H_JC."""
    ops = lowering_operators(p.variant)
    a1, a2 = ops["a1"], ops["a2"]
    if not p.is_symmetric:
        raise ValueError("collective form requires gamma_R1 == gamma_R2 and gamma_L1 == gamma_L2")
    gR, gL = p.gamma_R1, p.gamma_L1
    fwd, bwd = np.exp(1j * p.kD), np.exp(-1j * p.kD)
    return (
        -0.5j * gL * (fwd * _dag(a1) @ a2 - bwd * _dag(a2) @ a1)
        - 0.5j * gR * (fwd * _dag(a2) @ a1 - bwd * _dag(a1) @ a2)
    )


def build_collective_liouvillian(p: NetworkParams) -> Liouvillian:
    """Symmetric-coupling generator written with collective jump operators.

    Equal to :func:`build_liouvillian` whenever ``p.is_symmetric``; kept as a
    separate construction so the two can be checked against each other.
    """
    ops = lowering_operators(p.variant)
    jumps = collective_jump_operators(p)
    dissipators = [(p.gamma_L1, jumps["L"]), (p.gamma_R1, jumps["R"])]
    if p.has_cavity:
        dissipators += [(p.Gamma1, ops["sigma1"]), (p.Gamma2, ops["sigma2"])]
    return Liouvillian(
        hamiltonian=build_jc_hamiltonian(p) + waveguide_coherent_term(p),
        dissipators=tuple((r, O) for r, O in dissipators if r != 0),
    )


def build_effective_hamiltonian(p: NetworkParams) -> np.ndarray:
    """No-jump Hamiltonian of the network.

    For unequal node couplings the hopping amplitudes become
    ``sqrt(gamma_i1 * gamma_i2)`` and each cavity decays at its own
    ``(gamma_Lj + gamma_Rj) / 2``; this reduces to the symmetric expression
    when the nodes are identical.
    """
    ops = lowering_operators(p.variant)
    a1, a2 = ops["a1"], ops["a2"]
    fwd = np.exp(1j * p.kD)
    H = build_jc_hamiltonian(p).astype(complex)
    H = H - 1j * np.sqrt(p.gamma_L1 * p.gamma_L2) * fwd * _dag(a1) @ a2
    H = H - 1j * np.sqrt(p.gamma_R1 * p.gamma_R2) * fwd * _dag(a2) @ a1
    H = H - 0.5j * (p.gamma_L1 + p.gamma_R1) * _dag(a1) @ a1
    H = H - 0.5j * (p.gamma_L2 + p.gamma_R2) * _dag(a2) @ a2
    if p.has_cavity:
        s1, s2 = ops["sigma1"], ops["sigma2"]
        H = H - 0.5j * p.Gamma1 * _dag(s1) @ s1 - 0.5j * p.Gamma2 * _dag(s2) @ s2
    return H


def single_excitation_block(p: NetworkParams) -> np.ndarray:
    """Effective Hamiltonian restricted to (eg, ge, 10, 01), or (eg, ge) without cavities."""
    idx = np.array(single_excitation_indices(p.variant))
    return build_effective_hamiltonian(p)[np.ix_(idx, idx)]
