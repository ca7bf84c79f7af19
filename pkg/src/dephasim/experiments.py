"""Simulated coherence experiments and least-squares extraction of their decay.

The two protocols mirror what is done at the bench:

* relaxation: prepare |e> with the cavity in its stationary thermal state,
  watch the excited-state population;
* Ramsey: prepare (|g> + |e>)/sqrt(2), detune the reference frame by
  ``detuning`` Hz, watch <sigma_x> and <sigma_y> fringes decay.

Fits run in Levenberg-Marquardt damped Gauss-Newton form on a
nondimensionalized time axis (all parameters order unity), with seeds
taken from a log-linear regression (exponential) or the spectral peak of
the detrended series (decaying cosine).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .analytics import DephasingInput, DephasingPrediction, make_prediction
from .device import DeviceParams, DissipationSource, effective_chi_over_2pi
from .engine import (
    EvolveOptions,
    HilbertConfig,
    build_dissipators,
    build_hamiltonian,
    build_operators,
    default_fock_cutoff,
    effective_bath_occupation,
    evolve,
    thermal_cavity_state,
)
from .errors import AliasingWarning, FitFailureError, InvalidParameterError
from .series import TimeSeries

#: decay is flagged non-identifiable when the window spans fewer than
#: this many decay constants
IDENT_DECAY_FRACTION = 0.02

#: spectral peak must exceed the median magnitude by this factor
SPECTRAL_PEAK_FACTOR = 8.0

NON_IDENTIFIABLE = "non-identifiable decay"

EXPONENTIAL_PARAMS = ("amplitude", "decay_time", "offset")
COSINE_PARAMS = ("amplitude", "decay_time", "frequency", "phase", "offset")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one least-squares fit.

    ``params`` maps parameter names to values of the absolute-time model;
    ``covariance_diag`` maps the same names to variance estimates (None
    when unavailable).  ``detail`` is empty for a clean fit and contains
    ``"non-identifiable decay"`` when the window cannot pin the decay
    time down.
    """

    model: str
    params: dict[str, float]
    covariance_diag: dict[str, float] | None
    residual_rms: float
    converged: bool
    detail: str = ""


def exponential_model(t: np.ndarray, params: dict[str, float]) -> np.ndarray:
    """A exp(-t/T) + B for params {amplitude, decay_time, offset}."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        return params["amplitude"] * np.exp(-t / params["decay_time"]) + params["offset"]


def decaying_cosine_model(t: np.ndarray, params: dict[str, float]) -> np.ndarray:
    """A exp(-t/T2) cos(2 pi f t + phi) + B."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        env = params["amplitude"] * np.exp(-t / params["decay_time"])
    return env * np.cos(2.0 * math.pi * params["frequency"] * t + params["phase"]) + params[
        "offset"
    ]


def _as_fit_arrays(times, values, min_samples: int, model: str):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or v.shape != t.shape:
        raise InvalidParameterError(
            f"{model}: times and values must be matching 1-D arrays"
        )
    if t.size < min_samples:
        raise InvalidParameterError(
            f"{model}: need at least {min_samples} samples, got {t.size}"
        )
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise InvalidParameterError(f"{model}: inputs must be finite")
    if np.any(np.diff(t) <= 0.0):
        raise InvalidParameterError(f"{model}: times must be strictly increasing")
    spread = float(np.ptp(v))
    scale = max(float(np.abs(v).max()), 1.0)
    if spread <= 1e-13 * scale:
        raise FitFailureError(
            f"{NON_IDENTIFIABLE}: constant series (spread {spread:.2e})"
        )
    return t, v


def _wrap_phase(p: float) -> float:
    return (p + math.pi) % (2.0 * math.pi) - math.pi


def _run_lm(resid, starts, m: int):
    """Try each start, keep the best converged solution.

    A start that exhausts its iteration budget is kept as a fallback: on
    nearly-degenerate data (e.g. an almost flat decay) the step control
    stalls inside a flat cost valley without ever reporting success, yet
    the stalled point is the answer.  Only starts that raise are dropped.
    """
    best = None
    fallback = None
    for x0 in starts:
        try:
            res = least_squares(
                resid, x0, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                max_nfev=400 * (len(x0) + 1),
            )
        except Exception:  # noqa: BLE001 - a bad start must not kill the sweep
            continue
        if not res.success:
            if fallback is None or res.cost < fallback.cost:
                fallback = res
            continue
        if best is None or res.cost < best.cost:
            best = res
        if best.cost <= 1e-24 * m:
            break
    if best is None:
        best = fallback
    if best is None:
        raise FitFailureError("least-squares iteration failed from every start")
    return best


def _covariance(res, jac_transform: np.ndarray | None) -> np.ndarray | None:
    m, p = res.jac.shape
    if m <= p:
        return None
    ssr = 2.0 * res.cost
    try:
        cov = np.linalg.pinv(res.jac.T @ res.jac) * (ssr / (m - p))
    except np.linalg.LinAlgError:
        return None
    if jac_transform is not None:
        cov = jac_transform @ cov @ jac_transform.T
    diag = np.diag(cov)
    if not np.all(np.isfinite(diag)):
        return None
    return diag


def fit_exponential(times, values) -> FitResult:
    """Fit A exp(-t/T) + B; seeds from a log-linear regression of the data.

    Raises FitFailureError for constant input, for data that grows over
    the window, and on iteration failure.  A window much shorter than the
    fitted decay constant is reported as converged with a
    "non-identifiable decay" note.
    """
    t, v = _as_fit_arrays(times, values, 8, "exponential fit")
    t0 = float(t[0])
    span = float(t[-1] - t[0])
    tau = (t - t0) / span

    n_tail = max(3, t.size // 5)
    b0 = float(v[-n_tail:].mean())
    a0 = float(v[0] - b0)
    shift = v - b0
    # log-linear regression on the samples that still carry signal
    sign = 1.0 if a0 >= 0.0 else -1.0
    usable = sign * shift > 0.02 * abs(a0) if a0 != 0.0 else np.zeros(t.size, bool)
    if usable.sum() >= 4:
        slope, intercept = np.polyfit(tau[usable], np.log(sign * shift[usable]), 1)
        g0 = max(-slope, 0.05)
        a0_reg = sign * math.exp(intercept)
    else:
        g0, a0_reg = 2.0, a0 if a0 != 0.0 else float(np.ptp(v))

    def resid(p):
        a, g, b = p
        return a * np.exp(np.clip(-g * tau, -700.0, 700.0)) + b - v

    # growth-oriented starts so a rising signal is diagnosed as such
    # instead of stalling in a straight-line local minimum
    b0_head = float(v[:n_tail].mean())
    a_grow = (float(v[-1]) - b0_head) * math.exp(-2.0)
    starts = [
        [a0_reg, g0, b0],
        [a0 if a0 != 0.0 else a0_reg, 0.5, float(v.min())],
        [a0 if a0 != 0.0 else a0_reg, 4.0, b0],
        [a_grow if a_grow != 0.0 else 1.0, -2.0, b0_head],
        [a0 if a0 != 0.0 else a0_reg, -0.5, b0_head],
    ]
    res = _run_lm(resid, starts, t.size)
    a, g, b = res.x
    rms = math.sqrt(2.0 * res.cost / t.size)

    if g < -IDENT_DECAY_FRACTION:
        raise FitFailureError(
            "exponential fit: signal grows over the window "
            f"(decay per window {g:.3e})",
            diagnostics={"decay_per_window": float(g)},
        )
    detail = ""
    u = t0 / span
    if abs(g) <= IDENT_DECAY_FRACTION:
        params = {
            "amplitude": float(a),
            "decay_time": math.inf,
            "offset": float(b),
        }
        detail = f"{NON_IDENTIFIABLE}: no measurable damping across the window"
        cov = None
    else:
        params = {
            "amplitude": float(a * math.exp(g * u)),
            "decay_time": span / g,
            "offset": float(b),
        }
        if params["decay_time"] > 10.0 * span:
            detail = (
                f"window spans only {span / params['decay_time']:.2f} decay "
                "constants; the decay time is an extrapolation"
            )
        jac_t = np.zeros((3, 3))
        jac_t[0, 0] = math.exp(g * u)
        jac_t[0, 1] = a * u * math.exp(g * u)
        jac_t[1, 1] = -span / (g * g)
        jac_t[2, 2] = 1.0
        cov = _covariance(res, jac_t)
    cov_map = dict(zip(EXPONENTIAL_PARAMS, cov)) if cov is not None else None
    return FitResult(
        model="exponential",
        params=params,
        covariance_diag=cov_map,
        residual_rms=rms,
        converged=True,
        detail=detail,
    )


def _spectral_seed(tau: np.ndarray, det: np.ndarray):
    """Peak location (cycles per window), phase and quality of the spectrum."""
    n = det.size
    windowed = np.fft.rfft(det * np.hanning(n))
    mag = np.abs(windowed)
    if mag.size < 3:
        raise FitFailureError("series too short for a spectral seed")
    k = int(mag[1:].argmax()) + 1
    floor = float(np.median(mag[1:]))
    peak = float(mag[k])
    if floor > 0.0 and peak < SPECTRAL_PEAK_FACTOR * floor:
        raise FitFailureError(
            "no spectral peak above the noise floor "
            f"(peak/median = {peak / floor:.2f})",
            diagnostics={"peak_over_median": peak / floor},
        )
    off = 0.0
    if 1 <= k < mag.size - 1 and mag[k - 1] > 0.0 and mag[k + 1] > 0.0:
        lm = np.log(mag[k - 1 : k + 2])
        denom = lm[0] - 2.0 * lm[1] + lm[2]
        if denom != 0.0:
            off = float(np.clip(0.5 * (lm[0] - lm[2]) / denom, -0.5, 0.5))
    cycles = (k + off) * (tau[-1] - tau[0])  # per unit tau, tau spans ~1
    # undo the linear phase of the symmetric taper so the angle refers to tau=0
    phase = _wrap_phase(float(np.angle(windowed[k])) + math.pi * k * (n - 1) / n)
    return cycles, phase


def fit_decaying_cosine(times, values) -> FitResult:
    """Fit A exp(-t/T2) cos(2 pi f t + phi) + B on a uniform time grid.

    The frequency seed comes from the spectral peak of the detrended
    series (raising FitFailureError when no peak clears the noise floor);
    amplitude is canonicalized positive, frequency non-negative and phase
    wrapped to (-pi, pi].
    """
    t, v = _as_fit_arrays(times, values, 16, "decaying-cosine fit")
    dt = np.diff(t)
    if float(dt.max() - dt.min()) > 1e-6 * float(dt.mean()):
        raise InvalidParameterError(
            "decaying-cosine fit requires uniformly sampled times (spectral seed)"
        )
    t0 = float(t[0])
    span = float(t[-1] - t[0])
    tau = (t - t0) / span

    b0 = float(v.mean())
    det = v - b0
    cycles0, phase0 = _spectral_seed(tau, det)
    half = t.size // 2
    r1 = float(np.sqrt(np.mean(det[:half] ** 2)))
    r2 = float(np.sqrt(np.mean(det[half:] ** 2)))
    if r1 > 0.0 and r2 > 0.0:
        # signed: negative when the envelope grows toward the window end
        g0 = 2.0 * math.log(r1 / r2)
    else:
        g0 = 0.1
    a0 = math.sqrt(2.0) * r1 * math.exp(0.25 * g0)

    def resid(p):
        a, g, c, ph, b = p
        env = a * np.exp(np.clip(-g * tau, -700.0, 700.0))
        return env * np.cos(2.0 * math.pi * c * tau + ph) + b - v

    starts = [[a0, g0, cycles0, phase0, b0]]
    for dph in (0.5 * math.pi, -0.5 * math.pi, math.pi):
        starts.append([a0, g0, cycles0, _wrap_phase(phase0 + dph), b0])
    starts.append([a0, 0.5, cycles0, phase0, b0])
    res = _run_lm(resid, starts, t.size)
    a, g, c, ph, b = res.x
    # canonical parameter ranges
    if a < 0.0:
        a, ph = -a, ph + math.pi
    if c < 0.0:
        c, ph = -c, -ph
    rms = math.sqrt(2.0 * res.cost / t.size)

    if g < -IDENT_DECAY_FRACTION:
        raise FitFailureError(
            f"decaying-cosine fit: envelope grows over the window (g = {g:.3e})",
            diagnostics={"decay_per_window": float(g)},
        )
    u = t0 / span
    freq = c / span
    phase_abs = _wrap_phase(ph - 2.0 * math.pi * c * u)
    detail = ""
    if abs(g) <= IDENT_DECAY_FRACTION:
        params = {
            "amplitude": float(a),
            "decay_time": math.inf,
            "frequency": float(freq),
            "phase": float(phase_abs),
            "offset": float(b),
        }
        detail = f"{NON_IDENTIFIABLE}: no measurable damping across the window"
        cov_map = None
    else:
        params = {
            "amplitude": float(a * math.exp(g * u)),
            "decay_time": span / g,
            "frequency": float(freq),
            "phase": float(phase_abs),
            "offset": float(b),
        }
        if params["decay_time"] > 10.0 * span:
            detail = (
                f"window spans only {span / params['decay_time']:.2f} decay "
                "constants; the decay time is an extrapolation"
            )
        jac_t = np.zeros((5, 5))
        jac_t[0, 0] = math.exp(g * u)
        jac_t[0, 1] = a * u * math.exp(g * u)
        jac_t[1, 1] = -span / (g * g)
        jac_t[2, 2] = 1.0 / span
        jac_t[3, 2] = -2.0 * math.pi * u
        jac_t[3, 3] = 1.0
        jac_t[4, 4] = 1.0
        cov = _covariance(res, jac_t)
        cov_map = dict(zip(COSINE_PARAMS, cov)) if cov is not None else None
    return FitResult(
        model="decaying_cosine",
        params=params,
        covariance_diag=cov_map,
        residual_rms=rms,
        converged=True,
        detail=detail,
    )


def add_noise(series: TimeSeries, sigma: float, seed: int) -> TimeSeries:
    """Gaussian noise of standard deviation ``sigma`` on every column.

    The generator is numpy's default PCG64 seeded with ``seed``; the seed
    is recorded in the metadata so any noisy series can be regenerated.
    """
    if not (sigma >= 0.0 and math.isfinite(sigma)):
        raise InvalidParameterError(f"sigma must be finite and >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    noisy = series.values + rng.normal(0.0, sigma, size=series.values.shape)
    meta = dict(series.meta)
    meta.update({"seed": seed, "noise_sigma": sigma})
    return TimeSeries(times=series.times.copy(), values=noisy, labels=series.labels, meta=meta)


# --------------------------------------------------------------------------
# protocols


def _scenario(
    device: DeviceParams,
    sources: Sequence[DissipationSource],
    hilbert: HilbertConfig | None,
    f_occupation: float | None,
):
    from .device import thermal_occupation  # local to avoid cycle noise

    f_occ = device.f_cavity if f_occupation is None else f_occupation
    if hilbert is None:
        max_n = max(
            (thermal_occupation(f_occ, s.temperature) for s in sources), default=0.0
        )
        hilbert = HilbertConfig(fock_cutoff=default_fock_cutoff(max_n))
    chi = 2.0 * math.pi * effective_chi_over_2pi(device)
    gamma1 = 1.0 / device.T1_intrinsic if device.T1_intrinsic is not None else 0.0
    gamma_phi = 1.0 / device.Tphi_intrinsic if device.Tphi_intrinsic is not None else 0.0
    terms = build_dissipators(sources, f_occ, hilbert, gamma1=gamma1, gamma_phi=gamma_phi)
    h = build_hamiltonian(
        2.0 * math.pi * device.f_cavity,
        2.0 * math.pi * device.f_qubit,
        chi,
        hilbert,
        frame="doubly_rotating",
    )
    ops = build_operators(hilbert)
    n_bar = effective_bath_occupation(sources, f_occ)
    rho_cavity = thermal_cavity_state(n_bar, hilbert.fock_cutoff)
    kappa_tot = sum(s.kappa for s in sources)
    meta = {
        "f_occupation": f_occ,
        "fock_cutoff": hilbert.fock_cutoff,
        "chi": chi,
        "kappa_tot": kappa_tot,
        "gamma1": gamma1,
        "gamma_phi": gamma_phi,
        "frame": "doubly_rotating",
    }
    return hilbert, ops, h, terms, rho_cavity, meta


def simulate_t1(
    device: DeviceParams,
    sources: Sequence[DissipationSource],
    t_final: float,
    samples: int,
    *,
    hilbert: HilbertConfig | None = None,
    f_occupation: float | None = None,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
) -> TimeSeries:
    """Excited-state population decay; requires ``device.T1_intrinsic``.

    The qubit starts in |e> with the cavity in the stationary thermal
    state of its sources; the returned column is ``p_excited``.
    """
    if device.T1_intrinsic is None:
        raise InvalidParameterError("simulate_t1 requires device.T1_intrinsic")
    hilbert, ops, h, terms, rho_cavity, meta = _scenario(
        device, sources, hilbert, f_occupation
    )
    excited = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    rho0 = np.kron(excited, rho_cavity)
    options = EvolveOptions(
        t_final=t_final, sample_count=samples, rel_tol=rel_tol, abs_tol=abs_tol
    )
    raw = evolve(rho0, h, terms, options, [("sigma_z", ops.sz)])
    p_e = 0.5 * (1.0 - raw.values[:, 0])
    meta = {**raw.meta, **meta, "protocol": "t1"}
    return TimeSeries(times=raw.times, values=p_e, labels=("p_excited",), meta=meta)


def simulate_ramsey(
    device: DeviceParams,
    sources: Sequence[DissipationSource],
    detuning: float,
    t_final: float,
    samples: int,
    *,
    hilbert: HilbertConfig | None = None,
    f_occupation: float | None = None,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
) -> TimeSeries:
    """Ramsey fringes at a deliberate detuning [Hz] from the qubit frequency.

    Evolves (|g> + |e>)/sqrt(2) with the cavity thermal, in the frame
    rotating ``detuning`` Hz away from the qubit, and returns columns
    ``sigma_x`` and ``sigma_y``.  Warns if the detuning exceeds the
    Nyquist frequency of the sample grid.
    """
    if not math.isfinite(detuning):
        raise InvalidParameterError(f"detuning must be finite, got {detuning}")
    hilbert, ops, h, terms, rho_cavity, meta = _scenario(
        device, sources, hilbert, f_occupation
    )
    options = EvolveOptions(
        t_final=t_final, sample_count=samples, rel_tol=rel_tol, abs_tol=abs_tol
    )
    nyquist = 0.5 * (samples - 1) / t_final
    if abs(detuning) > nyquist:
        warnings.warn(
            f"detuning {detuning:.4e} Hz exceeds the Nyquist frequency "
            f"{nyquist:.4e} Hz of the sample grid; fringes will alias",
            AliasingWarning,
            stacklevel=2,
        )
    h = h - 0.5 * (2.0 * math.pi * detuning) * ops.sz
    plus = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    rho0 = np.kron(plus, rho_cavity)
    raw = evolve(rho0, h, terms, options, [("sigma_x", ops.sx), ("sigma_y", ops.sy)])
    meta = {**raw.meta, **meta, "protocol": "ramsey", "detuning": detuning,
            "nyquist": nyquist, "envelope": "exponential"}
    return TimeSeries(times=raw.times, values=raw.values, labels=raw.labels, meta=meta)


def fit_coherence_series(
    series: TimeSeries,
    *,
    fit_start_factor: float = 5.0,
) -> FitResult:
    """Fit the decay of a simulated protocol series.

    For a Ramsey series the first ``fit_start_factor / kappa_tot`` seconds
    are excluded (cavity transient) and the ``sigma_x`` fringes are fit
    with the decaying-cosine model; a relaxation series is fit over its
    full span with the exponential model.  The applied window is recorded
    in the fit call's series metadata by the caller.
    """
    protocol = series.meta.get("protocol")
    if protocol == "t1":
        return fit_exponential(series.times, series.column("p_excited"))
    if protocol == "ramsey":
        kappa_tot = float(series.meta.get("kappa_tot", 0.0))
        start = fit_start_factor / kappa_tot if kappa_tot > 0.0 else 0.0
        mask = series.times >= start
        if int(mask.sum()) < 16:
            raise InvalidParameterError(
                f"fit window t >= {start:.3e} s keeps only {int(mask.sum())} of "
                f"{series.times.size} samples; extend t_final or lower fit_start_factor"
            )
        return fit_decaying_cosine(series.times[mask], series.column("sigma_x")[mask])
    raise InvalidParameterError(
        f"series has unknown protocol {protocol!r}; expected 't1' or 'ramsey'"
    )


def extract_coherence(
    device: DeviceParams,
    sources: Sequence[DissipationSource],
    protocol: str,
    t_final: float,
    samples: int,
    *,
    detuning: float = 0.0,
    hilbert: HilbertConfig | None = None,
    f_occupation: float | None = None,
    fit_start_factor: float = 5.0,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
) -> tuple[FitResult, DephasingPrediction]:
    """Simulate one protocol, fit its decay, and predict the analytic rate.

    A fit that fails outright is reported as a non-converged FitResult
    rather than raised, so callers can still compare against the
    prediction; the failure text lands in ``detail``.
    """
    if protocol == "t1":
        series = simulate_t1(
            device, sources, t_final, samples,
            hilbert=hilbert, f_occupation=f_occupation,
            rel_tol=rel_tol, abs_tol=abs_tol,
        )
    elif protocol == "ramsey":
        series = simulate_ramsey(
            device, sources, detuning, t_final, samples,
            hilbert=hilbert, f_occupation=f_occupation,
            rel_tol=rel_tol, abs_tol=abs_tol,
        )
    else:
        raise InvalidParameterError(
            f"protocol must be 't1' or 'ramsey', got {protocol!r}"
        )
    try:
        fit = fit_coherence_series(series, fit_start_factor=fit_start_factor)
    except FitFailureError as exc:
        fit = FitResult(
            model="exponential" if protocol == "t1" else "decaying_cosine",
            params={},
            covariance_diag=None,
            residual_rms=math.nan,
            converged=False,
            detail=str(exc),
        )
    prediction = make_prediction(
        DephasingInput.from_device(device, sources, f_occupation)
    )
    return fit, prediction
