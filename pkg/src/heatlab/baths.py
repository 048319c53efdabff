"""Ohmic bath spectra, Bose occupations and one-phonon sequential rates.

Baths are labelled ``a`` (phonon-mode bath), ``sigma`` (qubit bath) and, for
the two-qubit device, ``sigma_L`` / ``sigma_R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class BathLabel(str, Enum):
    PHONON_A = "a"
    QUBIT_SIGMA = "sigma"
    LEFT_SIGMA = "sigma_L"
    RIGHT_SIGMA = "sigma_R"


@dataclass(frozen=True)
class BathSpec:
    alpha: float
    omega_c: float
    temperature: float
    label: BathLabel = BathLabel.QUBIT_SIGMA

    def __post_init__(self):
        for name in ("alpha", "omega_c", "temperature"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.omega_c <= 0:
            raise ValueError("omega_c must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        object.__setattr__(self, "label", BathLabel(self.label))

    def with_temperature(self, temperature: float) -> "BathSpec":
        return BathSpec(self.alpha, self.omega_c, temperature, self.label)


def ohmic_spectral(omega: float, bath: BathSpec) -> float:
    """gamma(w) = alpha * w * exp(-|w| / omega_c), defined for w > 0."""
    if not omega > 0:
        raise ValueError(f"spectral function queried at non-positive frequency {omega!r}")
    return bath.alpha * omega * math.exp(-abs(omega) / bath.omega_c)


def bose_occupation(omega: float, temperature: float) -> float:
    """1 / (exp(w/T) - 1); exactly zero at T = 0."""
    if not omega > 0:
        raise ValueError(f"occupation queried at non-positive frequency {omega!r}")
    if temperature < 0:
        raise ValueError("temperature must be nonnegative")
    if temperature == 0:
        return 0.0
    r = omega / temperature
    if r > 700.0:
        return 0.0
    return 1.0 / math.expm1(r)


def sequential_rates(omega: float, bath: BathSpec) -> tuple[float, float]:
    """(kappa_plus, kappa_minus) = theta(w) gamma(w) * (n(w), 1 + n(w)).

    theta(0) = 0: the zero-gap channel carries no rate at all.
    """
    if not omega > 0:
        return 0.0, 0.0
    g = ohmic_spectral(omega, bath)
    n = bose_occupation(omega, bath.temperature)
    return g * n, g * (1.0 + n)
