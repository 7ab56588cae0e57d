from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GROUND_INDEX, basis_index, dimension, single_excitation_indices
from .params import Variant

PURE_LABELS = ("gg", "eg", "ge", "10", "01")
_FULL_TO_SHORT = {"gg00": "gg", "eg00": "eg", "ge00": "ge", "gg10": "10", "gg01": "01"}


@dataclass(frozen=True, eq=False)
class PureState:
    """Amplitudes over (|gg00>, |eg00>, |ge00>, |gg10>, |gg01>)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (5,):
            raise ValueError(f"expected 5 amplitudes, got shape {amps.shape}")
        if np.sum(np.abs(amps) ** 2) > 1 + 1e-9:
            raise ValueError("norm exceeds 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, label: str) -> "PureState":
        """``basis("eg00")`` or the short form ``basis("eg")``; photons as ``"gg10"`` / ``"10"``."""
        short = _FULL_TO_SHORT.get(label, label)
        if short not in PURE_LABELS:
            raise ValueError(f"unknown single-excitation label {label!r}")
        amps = np.zeros(5, dtype=complex)
        amps[PURE_LABELS.index(short)] = 1
        return cls(amps)

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def __getitem__(self, label: str) -> complex:
        return complex(self.amplitudes[PURE_LABELS.index(label)])

    def to_vector(self, variant: Variant = Variant.WITH_CAVITY) -> np.ndarray:
        vec = np.zeros(dimension(variant), dtype=complex)
        vec[GROUND_INDEX] = self.amplitudes[0]
        idx = single_excitation_indices(variant)
        vec[list(idx)] = self.amplitudes[1:1 + len(idx)]
        if Variant(variant) is Variant.NO_CAVITY and np.any(self.amplitudes[3:] != 0):
            raise ValueError("photon amplitudes have no place in the no-cavity space")
        return vec

    @classmethod
    def from_vector(cls, vec: np.ndarray, variant: Variant = Variant.WITH_CAVITY) -> "PureState":
        vec = np.asarray(vec)
        amps = np.zeros(5, dtype=complex)
        amps[0] = vec[GROUND_INDEX]
        idx = single_excitation_indices(variant)
        amps[1:1 + len(idx)] = vec[list(idx)]
        return cls(amps)


def projector(label: str, variant: Variant = Variant.WITH_CAVITY) -> np.ndarray:
    """Density matrix of a product basis state, e.g. ``projector("eg00")``."""
    n = dimension(variant)
    rho = np.zeros((n, n), dtype=complex)
    i = basis_index(label, variant)
    rho[i, i] = 1
    return rho
