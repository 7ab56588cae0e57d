"""Physical parameters of the two-node network.

All rates and frequencies are expressed in units of a reference rate
(``gamma_R1`` for chiral studies, ``gamma_R1 == gamma_R2`` for symmetric ones),
so times come out in units of its inverse.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


class Variant(str, enum.Enum):
    WITH_CAVITY = "with_cavity"
    NO_CAVITY = "no_cavity"


FREQUENCY_FIELDS = ("omega_c1", "omega_c2", "omega_a1", "omega_a2")
RATE_FIELDS = (
    "g1", "g2", "gamma_R1", "gamma_R2", "gamma_L1", "gamma_L2", "Gamma1", "Gamma2",
)


@dataclass(frozen=True)
class NetworkParams:
    omega_c1: float = 0.0
    omega_c2: float = 0.0
    omega_a1: float = 0.0
    omega_a2: float = 0.0
    g1: float = 0.0
    g2: float = 0.0
    alpha: float = 0.0
    gamma_R1: float = 1.0
    gamma_R2: float = 1.0
    gamma_L1: float = 0.0
    gamma_L2: float = 0.0
    Gamma1: float = 0.0
    Gamma2: float = 0.0
    kD: float = 0.0
    variant: Variant = Variant.WITH_CAVITY

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if f.name == "variant":
                continue
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"{f.name} must be a real number, got {value!r}") from None
            if not math.isfinite(value):
                raise ParameterError(f"{f.name} must be finite, got {value}")
            object.__setattr__(self, f.name, value)
        for name in RATE_FIELDS:
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        try:
            variant = Variant(self.variant)
        except ValueError:
            raise ParameterError(f"unknown variant {self.variant!r}") from None
        object.__setattr__(self, "variant", variant)
        kd = math.fmod(self.kD, TWO_PI)
        if kd < 0:
            kd += TWO_PI
        if kd >= TWO_PI:  # fmod of a value just below a multiple of 2*pi
            kd = 0.0
        object.__setattr__(self, "kD", kd)

    @classmethod
    def normalized(cls, **fields: Any) -> "NetworkParams":
        """Build parameters rescaled so that ``gamma_R1 == 1``.

        Every rate and frequency is divided by the given ``gamma_R1``; phases
        are left alone.
        """
        ref = float(fields.get("gamma_R1", 1.0))
        if ref <= 0:
            raise ParameterError("gamma_R1 must be > 0 to serve as the reference rate")
        scaled = dict(fields)
        for name in FREQUENCY_FIELDS + RATE_FIELDS:
            if name in scaled:
                scaled[name] = float(scaled[name]) / ref
        scaled["gamma_R1"] = 1.0
        return cls(**scaled)

    def replace(self, **changes: Any) -> "NetworkParams":
        return dataclasses.replace(self, **changes)

    @property
    def has_cavity(self) -> bool:
        return self.variant is Variant.WITH_CAVITY

    @property
    def chirality(self) -> float:
        """(gamma_R - gamma_L) / (gamma_R + gamma_L), summed over both nodes."""
        right = self.gamma_R1 + self.gamma_R2
        left = self.gamma_L1 + self.gamma_L2
        if right + left == 0:
            return 0.0
        return (right - left) / (right + left)

    @property
    def distance_in_wavelengths(self) -> float:
        return self.kD / TWO_PI

    @property
    def is_symmetric(self) -> bool:
        return self.gamma_R1 == self.gamma_R2 and self.gamma_L1 == self.gamma_L2

    def frequencies(self) -> tuple[float, ...]:
        if self.has_cavity:
            return tuple(getattr(self, name) for name in FREQUENCY_FIELDS)
        return (self.omega_a1, self.omega_a2)

    def mean_frequency(self) -> float:
        freqs = self.frequencies()
        return sum(freqs) / len(freqs)

    def rotating_frame(self) -> "NetworkParams":
        """Same network seen from the frame rotating at the mean frequency."""
        w0 = self.mean_frequency()
        return self.replace(**{name: getattr(self, name) - w0 for name in FREQUENCY_FIELDS})

    def to_mapping(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, Variant) else value
        return out

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "NetworkParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ParameterError(f"unknown parameter keys: {', '.join(unknown)}")
        return cls(**dict(values))


PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(NetworkParams))


# Operating points used throughout the studies (rates in units of gamma_R).
def symmetric_optimum(**changes: Any) -> NetworkParams:
    """Chiral symmetric network at the with-cavity concurrence optimum.

    Placed at D = lambda/2; C_max does not depend on D under perfect
    chirality, but the sign of the generated Bell state does.
    """
    base = dict(g1=0.126, g2=0.277, kD=math.pi)
    base.update(changes)
    return NetworkParams(**base)


def no_cavity_chiral(**changes: Any) -> NetworkParams:
    return NetworkParams(variant=Variant.NO_CAVITY, **changes)


def unequal_cavity_optimum(**changes: Any) -> NetworkParams:
    return NetworkParams(g1=2.21, g2=2.11, gamma_R2=4.82, **changes)


def nonchiral_optimum(**changes: Any) -> NetworkParams:
    base = dict(g1=0.00410, g2=0.00170, gamma_L1=1.0, gamma_L2=1.0, kD=math.pi)
    base.update(changes)
    return NetworkParams(**base)
