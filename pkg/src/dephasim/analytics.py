"""Closed-form thermal-photon dephasing rates and coherence-time prediction.

A dispersively coupled qubit acquires a random phase from photon-number
fluctuations of the cavity.  For thermal channels j with angular loss
rates kappa_j and occupations n_j the long-time Ramsey decay rate is

    Gamma = (kappa_tot / 2) Re[ sqrt((1 + 2i chi / kappa_tot)^2
                                     + 8i chi S / kappa_tot^2) - 1 ]

with kappa_tot = sum_j kappa_j and the excitation flux S = sum_j kappa_j
n_j, using the principal branch of the square root.  The weak-coupling
expansion and the strong-coupling saturation of this expression are
provided separately so the crossover can be mapped.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

from .device import DeviceParams, DissipationSource, effective_chi_over_2pi, thermal_occupation
from .errors import InvalidParameterError

SMALL_CHI_VARIANTS = ("normalized", "unnormalized")

#: |chi| / kappa_tot boundaries between the weak, crossover and strong regimes
REGIME_SMALL_BOUND = 0.1
REGIME_LARGE_BOUND = 10.0


@dataclass(frozen=True)
class BathChannel:
    """One dephasing contribution: angular loss rate and photon occupation."""

    kappa: float
    n_th: float
    label: str = ""

    def __post_init__(self):
        if not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise InvalidParameterError(
                f"channel {self.label!r}: kappa must be finite and >= 0, got {self.kappa}"
            )
        if not (self.n_th >= 0.0 and math.isfinite(self.n_th)):
            raise InvalidParameterError(
                f"channel {self.label!r}: n_th must be finite and >= 0, got {self.n_th}"
            )


@dataclass(frozen=True)
class DephasingInput:
    """Dispersive shift plus the loss channels that feed photon noise.

    ``kappa_tot`` and the excitation flux are exact sums over the channels
    by construction.
    """

    chi: float
    channels: tuple[BathChannel, ...]

    def __post_init__(self):
        if not math.isfinite(self.chi):
            raise InvalidParameterError(f"chi must be finite, got {self.chi}")
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def kappa_tot(self) -> float:
        return sum(c.kappa for c in self.channels)

    @property
    def excitation_flux(self) -> float:
        """sum_j kappa_j n_j [1/s]."""
        return sum(c.kappa * c.n_th for c in self.channels)

    @classmethod
    def from_sources(
        cls,
        chi: float,
        sources: Sequence[DissipationSource],
        f_occupation: float,
    ) -> "DephasingInput":
        """Build channels from physical sources, evaluating each occupation."""
        channels = tuple(
            BathChannel(
                kappa=s.kappa,
                n_th=thermal_occupation(f_occupation, s.temperature),
                label=s.label,
            )
            for s in sources
        )
        return cls(chi=chi, channels=channels)

    @classmethod
    def from_device(
        cls,
        device: DeviceParams,
        sources: Sequence[DissipationSource],
        f_occupation: float | None = None,
    ) -> "DephasingInput":
        """Resolve chi from the device record; occupations default to f_cavity."""
        chi = 2.0 * math.pi * effective_chi_over_2pi(device)
        f_occ = device.f_cavity if f_occupation is None else f_occupation
        return cls.from_sources(chi, sources, f_occ)


@dataclass(frozen=True)
class DephasingPrediction:
    """The three rate expressions [1/s] plus the regime label."""

    gamma_exact: float
    gamma_small_chi: float
    gamma_saturation: float
    regime: str


def _require_channels(inp: DephasingInput) -> tuple[float, float]:
    kappa_tot = inp.kappa_tot
    if kappa_tot == 0.0:
        if inp.chi != 0.0:
            raise InvalidParameterError(
                "kappa_tot = 0 with chi != 0: dephasing rate undefined"
            )
        return 0.0, 0.0
    return kappa_tot, inp.excitation_flux


def gamma_thermal_exact(inp: DephasingInput) -> float:
    """Exact long-time thermal dephasing rate [1/s].

    Non-negative, even in chi, and invariant under splitting or merging
    channels of equal occupation (it depends on the channels only through
    kappa_tot and the excitation flux).
    """
    kappa_tot, flux = _require_channels(inp)
    if kappa_tot == 0.0 or inp.chi == 0.0:
        return 0.0
    x = 2.0 * inp.chi / kappa_tot
    z = (1.0 + 1j * x) ** 2 + 4j * x * flux / kappa_tot
    rate = 0.5 * kappa_tot * (cmath.sqrt(z) - 1.0).real
    # roundoff can leave a tiny negative residue when the rate is ~0
    return max(rate, 0.0)


def gamma_thermal_small_chi(inp: DephasingInput, variant: str = "normalized") -> float:
    """Weak-dispersion limit 4 chi^2 S / kappa_tot^2 * (S / kappa_tot + 1) [1/s].

    ``variant="unnormalized"`` replaces the dimensionless S / kappa_tot in
    the parenthesis with the bare flux S in 1/s.  That form is
    dimensionally inconsistent and is kept only for comparison against
    texts that state the limit this way; the normalized form is the one
    that agrees with the exact rate.
    """
    if variant not in SMALL_CHI_VARIANTS:
        raise InvalidParameterError(
            f"variant must be one of {SMALL_CHI_VARIANTS}, got {variant!r}"
        )
    kappa_tot, flux = _require_channels(inp)
    if kappa_tot == 0.0:
        return 0.0
    base = 4.0 * inp.chi**2 * flux / kappa_tot**2
    enhancement = flux if variant == "unnormalized" else flux / kappa_tot
    return base * (enhancement + 1.0)


def gamma_thermal_saturation(inp: DephasingInput) -> float:
    """Strong-dispersion ceiling: the total excitation flux sum_j kappa_j n_j [1/s]."""
    _require_channels(inp)
    return inp.excitation_flux


def classify_regime(inp: DephasingInput) -> str:
    """'small_chi', 'crossover' or 'large_chi' from |chi| / kappa_tot."""
    kappa_tot, _ = _require_channels(inp)
    if inp.chi == 0.0:
        return "small_chi"
    if kappa_tot == 0.0:
        return "large_chi"
    ratio = abs(inp.chi) / kappa_tot
    if ratio < REGIME_SMALL_BOUND:
        return "small_chi"
    if ratio > REGIME_LARGE_BOUND:
        return "large_chi"
    return "crossover"


def make_prediction(
    inp: DephasingInput, small_chi_variant: str = "normalized"
) -> DephasingPrediction:
    """Evaluate all three rate expressions and label the regime."""
    return DephasingPrediction(
        gamma_exact=gamma_thermal_exact(inp),
        gamma_small_chi=gamma_thermal_small_chi(inp, variant=small_chi_variant),
        gamma_saturation=gamma_thermal_saturation(inp),
        regime=classify_regime(inp),
    )


def predict_t2(t1: float, gamma_phi: float) -> float:
    """Coherence time 1 / (1/(2 T1) + Gamma_phi); equals 2 T1 at Gamma_phi = 0."""
    if not (t1 > 0.0 and math.isfinite(t1)):
        raise InvalidParameterError(f"t1 must be finite and > 0, got {t1}")
    if not (gamma_phi >= 0.0 and math.isfinite(gamma_phi)):
        raise InvalidParameterError(
            f"gamma_phi must be finite and >= 0, got {gamma_phi}"
        )
    return 1.0 / (0.5 / t1 + gamma_phi)
