"""Scalar device model for a transmon dispersively coupled to a 3D cavity.

Conventions
-----------
Public inputs named ``f_*`` or suffixed ``_over_2pi`` are ordinary
frequencies in Hz; everything named ``kappa``, ``gamma``, ``omega`` or
``chi`` without such a suffix is an angular rate in rad/s.  Temperatures
are kelvin, times are seconds, lengths are meters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .constants import (
    BOLTZMANN,
    ELEMENTARY_CHARGE,
    PLANCK,
    SPEED_OF_LIGHT,
    TWO_PI,
)
from .errors import (
    ChiDiscrepancyWarning,
    CoherenceRatioWarning,
    InvalidParameterError,
    SingularParameterError,
)

#: relative disagreement between a supplied and a derived dispersive shift
#: above which a warning is emitted
CHI_MISMATCH_THRESHOLD = 0.20


@dataclass(frozen=True)
class DissipationSource:
    """One thermal loss channel of the cavity.

    Attributes
    ----------
    kappa : float
        Angular photon loss rate of this channel [rad/s].
    temperature : float
        Effective temperature of the attached bath [K].
    label : str
        Human-readable channel name used in reports.
    """

    kappa: float
    temperature: float
    label: str = ""

    def __post_init__(self):
        if not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise InvalidParameterError(
                f"source {self.label!r}: kappa must be finite and >= 0, got {self.kappa}"
            )
        if not (self.temperature >= 0.0 and math.isfinite(self.temperature)):
            raise InvalidParameterError(
                f"source {self.label!r}: temperature must be finite and >= 0, "
                f"got {self.temperature}"
            )


@dataclass(frozen=True)
class DeviceParams:
    """Static parameters of the coupled qubit-cavity device.

    ``chi_over_2pi`` may be supplied directly (e.g. from a measurement);
    otherwise it is derived from ``g_over_2pi`` and the charging energy,
    which in turn requires ``C_sigma`` or ``E_J_over_h``.
    """

    f_qubit: float
    f_cavity: float
    g_over_2pi: float
    Q_total: float
    coupling_ratio: float
    C_sigma: float | None = None
    E_J_over_h: float | None = None
    chi_over_2pi: float | None = None
    T1_intrinsic: float | None = None
    Tphi_intrinsic: float | None = None

    def __post_init__(self):
        for name in ("f_qubit", "f_cavity", "Q_total"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")
        if not (self.g_over_2pi >= 0.0 and math.isfinite(self.g_over_2pi)):
            raise InvalidParameterError(
                f"g_over_2pi must be finite and >= 0, got {self.g_over_2pi}"
            )
        if not 0.0 <= self.coupling_ratio <= 1.0:
            raise InvalidParameterError(
                f"coupling_ratio must lie in [0, 1], got {self.coupling_ratio}"
            )
        for name in ("C_sigma", "E_J_over_h", "T1_intrinsic", "Tphi_intrinsic"):
            v = getattr(self, name)
            if v is not None and not (v > 0.0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")

    @property
    def delta_over_2pi(self) -> float:
        """Qubit-cavity detuning (f_qubit - f_cavity) [Hz]."""
        return self.f_qubit - self.f_cavity


@dataclass(frozen=True)
class CavityGeometry:
    """Interior dimensions of a rectangular cavity: width a, height b, length d [m]."""

    a: float
    b: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "d"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise InvalidParameterError(f"geometry {name} must be > 0, got {v}")


@dataclass(frozen=True)
class CoherenceRecord:
    """A measured (T1, T2*) pair for one device."""

    T1: float
    T2_star: float

    def __post_init__(self):
        for name in ("T1", "T2_star"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")
        if self.T2_star > 2.0 * self.T1:
            warnings.warn(
                f"T2* = {self.T2_star:.3e} s exceeds the 2*T1 = {2 * self.T1:.3e} s "
                "bound; record kept as measured",
                CoherenceRatioWarning,
                stacklevel=2,
            )


def charging_energy(c_sigma: float) -> float:
    """Charging energy E_C/h = e^2 / (2 C_sigma h) for a total shunt capacitance [Hz]."""
    if not (c_sigma > 0.0 and math.isfinite(c_sigma)):
        raise InvalidParameterError(f"C_sigma must be finite and > 0, got {c_sigma}")
    return ELEMENTARY_CHARGE**2 / (2.0 * c_sigma * PLANCK)


def dispersive_chi(g: float, delta: float, e_c: float) -> float:
    """Dispersive shift chi = -g^2 E_C / (Delta^2 - Delta E_C).

    The expression is homogeneous of degree one in its rate arguments, so
    any consistent unit (Hz or rad/s) may be used; the result carries the
    same unit.  The sign of the result is part of the contract.
    """
    for name, v in (("g", g), ("delta", delta), ("e_c", e_c)):
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v}")
    if delta == 0.0:
        raise SingularParameterError("dispersive shift undefined at zero detuning")
    denom = delta * delta - delta * e_c
    if denom == 0.0:
        raise SingularParameterError(
            "dispersive shift undefined at delta == E_C (straddling regime pole)"
        )
    return -(g * g * e_c) / denom


def thermal_occupation(f: float, temperature: float) -> float:
    """Bose-Einstein occupation 1 / (exp(h f / k_B T) - 1); zero at T = 0."""
    if not (f > 0.0 and math.isfinite(f)):
        raise InvalidParameterError(f"frequency must be finite and > 0, got {f}")
    if not (temperature >= 0.0 and math.isfinite(temperature)):
        raise InvalidParameterError(
            f"temperature must be finite and >= 0, got {temperature}"
        )
    if temperature == 0.0:
        return 0.0
    x = PLANCK * f / (BOLTZMANN * temperature)
    if x > 700.0:
        # exp(x) overflows; the Boltzmann tail underflows cleanly to 0.0
        return math.exp(-x)
    # expm1 keeps the small-x (Rayleigh-Jeans) limit accurate
    return 1.0 / math.expm1(x)


def temperature_for_occupation(f: float, n_th: float) -> float:
    """Bath temperature that produces a given Bose-Einstein occupation [K]."""
    if not (f > 0.0 and math.isfinite(f)):
        raise InvalidParameterError(f"frequency must be finite and > 0, got {f}")
    if not (n_th > 0.0 and math.isfinite(n_th)):
        raise InvalidParameterError(f"occupation must be finite and > 0, got {n_th}")
    return PLANCK * f / (BOLTZMANN * math.log1p(1.0 / n_th))


def kappa_from_q(f_resonance: float, q_total: float) -> float:
    """Angular linewidth kappa = omega / Q of a loaded resonance [rad/s]."""
    if not (f_resonance > 0.0 and math.isfinite(f_resonance)):
        raise InvalidParameterError(
            f"resonance frequency must be > 0, got {f_resonance}"
        )
    if not (q_total > 0.0 and math.isfinite(q_total)):
        raise InvalidParameterError(f"quality factor must be > 0, got {q_total}")
    return TWO_PI * f_resonance / q_total


def purcell_t1(g: float, delta: float, kappa: float) -> float:
    """Cavity-mediated relaxation bound T1 = Delta^2 / (g^2 kappa).

    All three arguments are angular rates [rad/s]; the result is seconds.
    """
    for name, v in (("g", g), ("delta", delta), ("kappa", kappa)):
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v}")
    if g == 0.0 or kappa == 0.0:
        raise SingularParameterError(
            "Purcell bound diverges for g == 0 or kappa == 0"
        )
    if delta == 0.0:
        raise SingularParameterError("Purcell bound undefined at zero detuning")
    return (delta * delta) / (g * g * kappa)


def quality_factors(f_qubit: float, t1: float, t2_star: float) -> tuple[float, float]:
    """Lifetime quality factors (Q1, Q2) = (omega01 * T1, omega01 * T2*)."""
    for name, v in (("f_qubit", f_qubit), ("t1", t1), ("t2_star", t2_star)):
        if not (v > 0.0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")
    omega = TWO_PI * f_qubit
    return omega * t1, omega * t2_star


def pure_dephasing_rate(t1: float, t2_star: float) -> float:
    """Pure dephasing rate Gamma_phi = 1/T2* - 1/(2 T1) [1/s].

    Negative only for records violating T2* <= 2 T1; such values are
    returned as-is so that measured inconsistencies stay visible.
    """
    for name, v in (("t1", t1), ("t2_star", t2_star)):
        if not (v > 0.0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")
    if t2_star == 2.0 * t1:
        return 0.0
    return 1.0 / t2_star - 1.0 / (2.0 * t1)


def rectangular_mode_freq(geom: CavityGeometry, m: int, n: int, l: int) -> float:
    """Resonance frequency of the TE/TM (m, n, l) mode of a rectangular box [Hz].

    f = (c/2) sqrt((m/a)^2 + (n/b)^2 + (l/d)^2).  At most one index may be
    zero for the mode to exist.
    """
    idx = (m, n, l)
    if any(not isinstance(i, int) or i < 0 for i in idx):
        raise InvalidParameterError(f"mode indices must be non-negative ints, got {idx}")
    if sum(1 for i in idx if i == 0) > 1:
        raise InvalidParameterError(f"at most one mode index may be zero, got {idx}")
    return 0.5 * SPEED_OF_LIGHT * math.sqrt(
        (m / geom.a) ** 2 + (n / geom.b) ** 2 + (l / geom.d) ** 2
    )


def modes_coupled_at_center(
    geom: CavityGeometry, max_index: int
) -> list[tuple[int, int, int]]:
    """Mode indices with an electric-field antinode at the cavity center.

    A sinusoidal field profile peaks at the midpoint only for odd index;
    a zero index (uniform profile) never suppresses the center.  Modes are
    returned sorted by resonance frequency, ties broken by index.
    """
    if not isinstance(max_index, int) or max_index < 1:
        raise InvalidParameterError(f"max_index must be an int >= 1, got {max_index}")
    found = []
    rng = range(max_index + 1)
    for m in rng:
        for n in rng:
            for l in rng:
                idx = (m, n, l)
                if sum(1 for i in idx if i == 0) > 1:
                    continue
                if any(i != 0 and i % 2 == 0 for i in idx):
                    continue
                found.append((rectangular_mode_freq(geom, m, n, l), idx))
    found.sort(key=lambda pair: (pair[0], pair[1]))
    return [idx for _, idx in found]


def coupling_efficiency(kappa_ext: float, kappa_int: float) -> float:
    """Fraction of emitted photons leaving through the external port."""
    for name, v in (("kappa_ext", kappa_ext), ("kappa_int", kappa_int)):
        if not (v >= 0.0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")
    total = kappa_ext + kappa_int
    if total == 0.0:
        raise InvalidParameterError("efficiency undefined for kappa_ext = kappa_int = 0")
    return kappa_ext / total


def transmon_f01(e_j_over_h: float, e_c_over_h: float) -> float:
    """Weakly anharmonic estimate f01 = sqrt(8 E_J E_C)/h - E_C/h [Hz].

    A consistency estimate only; fabricated devices routinely sit a few
    percent away from it.
    """
    for name, v in (("e_j_over_h", e_j_over_h), ("e_c_over_h", e_c_over_h)):
        if not (v > 0.0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")
    return math.sqrt(8.0 * e_j_over_h * e_c_over_h) - e_c_over_h


def e_c_over_h(device: DeviceParams) -> float | None:
    """Charging energy in Hz from the best available input, or None."""
    if device.C_sigma is not None:
        return charging_energy(device.C_sigma)
    return None


def derived_chi_over_2pi(device: DeviceParams) -> float | None:
    """Dispersive shift derived from g, detuning and E_C, or None if E_C is unknown."""
    e_c = e_c_over_h(device)
    if e_c is None:
        return None
    return dispersive_chi(device.g_over_2pi, device.delta_over_2pi, e_c)


def effective_chi_over_2pi(device: DeviceParams) -> float:
    """Dispersive shift to use for simulation and prediction [Hz].

    A supplied ``chi_over_2pi`` wins over the derived value; if both are
    available and disagree by more than ``CHI_MISMATCH_THRESHOLD``
    (relative to the supplied value), a warning is emitted.
    """
    derived = derived_chi_over_2pi(device)
    if device.chi_over_2pi is not None:
        if derived is not None and device.chi_over_2pi != 0.0:
            rel = abs(abs(derived) - abs(device.chi_over_2pi)) / abs(
                device.chi_over_2pi
            )
            if rel > CHI_MISMATCH_THRESHOLD:
                warnings.warn(
                    f"supplied chi/2pi = {device.chi_over_2pi:.4e} Hz differs from the "
                    f"derived {derived:.4e} Hz by {100 * rel:.0f}%; using the supplied "
                    "value",
                    ChiDiscrepancyWarning,
                    stacklevel=2,
                )
        return device.chi_over_2pi
    if derived is None:
        raise InvalidParameterError(
            "cannot resolve the dispersive shift: supply chi_over_2pi or C_sigma"
        )
    return derived
