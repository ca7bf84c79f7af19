"""Dense Lindblad master-equation engine for one qubit and one cavity mode.

The Hilbert space is qubit (x) cavity with the qubit first, so every
operator is a (2N x 2N) complex matrix for a Fock cutoff of N.  The qubit
basis is ordered (|g>, |e>) and sigma_z is diag(+1, -1) in that order,
i.e. sigma_z |g> = +|g>; the excited state is the higher-energy one under
the Hamiltonian below.

Two frames are supported:

* ``"lab"``:             H = w_c a'a - (w_01/2) s_z - chi a'a s_z
* ``"doubly_rotating"``: H = -chi a'a s_z

The second is the lab Hamiltonian with both bare rotations removed; all
three terms commute, so the transformation is exact, and the dissipators
are unchanged by it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .device import DissipationSource, thermal_occupation
from .errors import (
    InvalidParameterError,
    NumericalFailureError,
    SteadyStateAmbiguityError,
)
from .series import TimeSeries

FRAMES = ("lab", "doubly_rotating")

#: truncation rule: smallest cutoff >= this floor whose Bose tail is negligible
FOCK_CUTOFF_FLOOR = 4
FOCK_TAIL_BOUND = 1e-10

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8

#: largest rate*t_final product an explicit stepper is allowed to attempt
STIFFNESS_LIMIT = 1e9


@dataclass(frozen=True)
class HilbertConfig:
    """Truncation of the joint space: two qubit levels, ``fock_cutoff`` Fock states."""

    fock_cutoff: int

    def __post_init__(self):
        if not isinstance(self.fock_cutoff, int) or self.fock_cutoff < 2:
            raise InvalidParameterError(
                f"fock_cutoff must be an int >= 2, got {self.fock_cutoff}"
            )

    @property
    def dim(self) -> int:
        return 2 * self.fock_cutoff


def default_fock_cutoff(max_n_th: float) -> int:
    """Smallest cutoff N >= 4 whose Bose-Einstein tail mass is below 1e-10.

    For occupation n the tail above N is q**N with q = n/(n+1); the rule is
    evaluated for the hottest channel in play.
    """
    if not (max_n_th >= 0.0 and math.isfinite(max_n_th)):
        raise InvalidParameterError(f"occupation must be finite and >= 0, got {max_n_th}")
    n = FOCK_CUTOFF_FLOOR
    if max_n_th == 0.0:
        return n
    q = max_n_th / (max_n_th + 1.0)
    while q**n >= FOCK_TAIL_BOUND:
        n += 1
    return n


@dataclass(frozen=True, eq=False)
class SystemOperators:
    """Frequently used operators on the joint space, built once per cutoff."""

    hilbert: HilbertConfig
    identity: np.ndarray
    a: np.ndarray
    adag: np.ndarray
    number: np.ndarray
    sz: np.ndarray
    sm: np.ndarray
    sx: np.ndarray
    sy: np.ndarray


def build_operators(hilbert: HilbertConfig) -> SystemOperators:
    """Construct the joint-space operator set for a given truncation."""
    n = hilbert.fock_cutoff
    a_c = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)
    eye_q = np.eye(2, dtype=complex)
    eye_c = np.eye(n, dtype=complex)
    sz_q = np.diag([1.0, -1.0]).astype(complex)
    sm_q = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
    sx_q = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sy_q = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
    a = np.kron(eye_q, a_c)
    return SystemOperators(
        hilbert=hilbert,
        identity=np.kron(eye_q, eye_c),
        a=a,
        adag=a.conj().T,
        number=a.conj().T @ a,
        sz=np.kron(sz_q, eye_c),
        sm=np.kron(sm_q, eye_c),
        sx=np.kron(sx_q, eye_c),
        sy=np.kron(sy_q, eye_c),
    )


def effective_bath_occupation(sources: Sequence[DissipationSource], f_occupation: float) -> float:
    """Rate-weighted occupation sum(kappa_j n_j) / sum(kappa_j) seen by the cavity."""
    kappa_tot = sum(s.kappa for s in sources)
    if kappa_tot == 0.0:
        return 0.0
    return (
        sum(s.kappa * thermal_occupation(f_occupation, s.temperature) for s in sources)
        / kappa_tot
    )


def thermal_cavity_state(n_bar: float, fock_cutoff: int) -> np.ndarray:
    """Truncated, renormalized thermal state of the cavity mode alone."""
    if not (n_bar >= 0.0 and math.isfinite(n_bar)):
        raise InvalidParameterError(f"occupation must be finite and >= 0, got {n_bar}")
    if n_bar == 0.0:
        p = np.zeros(fock_cutoff)
        p[0] = 1.0
    else:
        q = n_bar / (n_bar + 1.0)
        p = (1.0 - q) * q ** np.arange(fock_cutoff, dtype=float)
        p /= p.sum()
    return np.diag(p).astype(complex)


def validate_density_matrix(rho: np.ndarray, check_positivity: bool = False) -> None:
    """Raise if ``rho`` is not Hermitian, trace-one and (optionally) positive."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidParameterError(f"density matrix must be square, got {rho.shape}")
    scale = max(1.0, float(np.abs(rho).max()))
    herm = float(np.abs(rho - rho.conj().T).max())
    if herm > HERMITICITY_TOL * scale:
        raise InvalidParameterError(
            f"density matrix not Hermitian: max deviation {herm:.2e}"
        )
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidParameterError(f"density matrix trace {tr!r} is not 1")
    if check_positivity:
        evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if float(evals.min()) < POSITIVITY_TOL:
            raise InvalidParameterError(
                f"density matrix has negative eigenvalue {evals.min():.2e}"
            )


def build_hamiltonian(
    omega_cavity: float,
    omega_qubit: float,
    chi: float,
    hilbert: HilbertConfig,
    frame: str = "doubly_rotating",
) -> np.ndarray:
    """Joint Hamiltonian in angular units [rad/s] for the requested frame.

    Parameters
    ----------
    omega_cavity, omega_qubit : float
        Bare angular frequencies [rad/s]; must be positive in the lab
        frame, ignored (any value) in the doubly rotating frame.
    chi : float
        Dispersive shift [rad/s], either sign.
    """
    if frame not in FRAMES:
        raise InvalidParameterError(f"frame must be one of {FRAMES}, got {frame!r}")
    for name, v in (("omega_cavity", omega_cavity), ("omega_qubit", omega_qubit), ("chi", chi)):
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v}")
    ops = build_operators(hilbert)
    h = -chi * (ops.number @ ops.sz)
    if frame == "lab":
        if omega_cavity <= 0.0 or omega_qubit <= 0.0:
            raise InvalidParameterError(
                "lab frame requires positive omega_cavity and omega_qubit"
            )
        h = h + omega_cavity * ops.number - 0.5 * omega_qubit * ops.sz
    return h


@dataclass(frozen=True, eq=False)
class LindbladTerm:
    """One collapse channel: rate [1/s] and collapse operator on the joint space."""

    rate: float
    collapse: np.ndarray
    label: str = ""

    def __post_init__(self):
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise InvalidParameterError(
                f"term {self.label!r}: rate must be finite and >= 0, got {self.rate}"
            )
        c = np.asarray(self.collapse, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InvalidParameterError(
                f"term {self.label!r}: collapse operator must be square, got {c.shape}"
            )
        object.__setattr__(self, "collapse", c)


def build_dissipators(
    sources: Sequence[DissipationSource],
    f_occupation: float,
    hilbert: HilbertConfig,
    gamma1: float = 0.0,
    gamma_phi: float = 0.0,
) -> list[LindbladTerm]:
    """Collapse channels for thermal cavity baths plus intrinsic qubit noise.

    Each source contributes photon loss at kappa_j (n_j + 1) on ``a`` and,
    for n_j > 0, photon gain at kappa_j n_j on ``a+``, with n_j the
    Bose-Einstein occupation at ``f_occupation`` and the source
    temperature.  Qubit relaxation enters as (gamma1, sigma-) and pure
    dephasing as (gamma_phi / 2, sigma_z), which damps qubit coherences at
    exactly gamma_phi.
    """
    for name, v in (("gamma1", gamma1), ("gamma_phi", gamma_phi)):
        if not (v >= 0.0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")
    ops = build_operators(hilbert)
    terms: list[LindbladTerm] = []
    for i, src in enumerate(sources):
        n_th = thermal_occupation(f_occupation, src.temperature)
        label = src.label or f"source{i}"
        terms.append(LindbladTerm(src.kappa * (n_th + 1.0), ops.a, f"{label}:loss"))
        if n_th > 0.0:
            terms.append(LindbladTerm(src.kappa * n_th, ops.adag, f"{label}:gain"))
    if gamma1 > 0.0:
        terms.append(LindbladTerm(gamma1, ops.sm, "qubit:relaxation"))
    if gamma_phi > 0.0:
        terms.append(LindbladTerm(0.5 * gamma_phi, ops.sz, "qubit:dephasing"))
    return terms


def _check_dims(rho: np.ndarray, h: np.ndarray, terms: Sequence[LindbladTerm]) -> int:
    d = h.shape[0]
    if h.ndim != 2 or h.shape != (d, d):
        raise InvalidParameterError(f"Hamiltonian must be square, got {h.shape}")
    if rho is not None and rho.shape != (d, d):
        raise InvalidParameterError(
            f"state dimension {rho.shape} does not match Hamiltonian {h.shape}"
        )
    for t in terms:
        if t.collapse.shape != (d, d):
            raise InvalidParameterError(
                f"collapse operator {t.label!r} has shape {t.collapse.shape}, "
                f"expected {(d, d)}"
            )
    return d


def lindblad_rhs(
    rho: np.ndarray, h: np.ndarray, terms: Sequence[LindbladTerm]
) -> np.ndarray:
    """Right-hand side -i[H, rho] + sum_k rate_k D[L_k] rho.

    D[L] rho = (2 L rho L' - L'L rho - rho L'L) / 2.  The result is
    traceless and Hermiticity-preserving up to roundoff.
    """
    rho = np.asarray(rho, dtype=complex)
    _check_dims(rho, h, terms)
    out = -1j * (h @ rho - rho @ h)
    for t in terms:
        l_op = t.collapse
        ldl = l_op.conj().T @ l_op
        out += t.rate * (
            l_op @ rho @ l_op.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
        )
    return out


@dataclass(frozen=True)
class EvolveOptions:
    """Integration window and adaptive Runge-Kutta tolerances."""

    t_final: float
    sample_count: int
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float | None = None

    def __post_init__(self):
        if not (self.t_final > 0.0 and math.isfinite(self.t_final)):
            raise InvalidParameterError(f"t_final must be > 0, got {self.t_final}")
        if not isinstance(self.sample_count, int) or self.sample_count < 2:
            raise InvalidParameterError(
                f"sample_count must be an int >= 2, got {self.sample_count}"
            )
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be > 0, got {v}")
        if self.max_step is not None and not (
            self.max_step > 0.0 and math.isfinite(self.max_step)
        ):
            raise InvalidParameterError(f"max_step must be > 0, got {self.max_step}")


def evolve_states(
    rho0: np.ndarray,
    h: np.ndarray,
    terms: Sequence[LindbladTerm],
    options: EvolveOptions,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the master equation; return (times, states of shape (nt, d, d)).

    Uses an adaptive embedded Runge-Kutta 4(5) pair on the flattened
    density matrix.  Raises NumericalFailureError if the step controller
    gives up before ``t_final``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = _check_dims(rho0, h, terms)
    validate_density_matrix(rho0, check_positivity=True)

    # An explicit stepper needs ~rate*t_final steps; refuse problems whose
    # step count could not finish on any desk machine instead of spinning.
    scale = float(np.abs(h).max()) + sum(
        t.rate * float(np.abs(t.collapse).max()) ** 2 for t in terms
    )
    if scale * options.t_final > STIFFNESS_LIMIT:
        raise NumericalFailureError(
            f"problem too stiff for an explicit stepper: rate*t_final "
            f"~ {scale * options.t_final:.2e} exceeds {STIFFNESS_LIMIT:.0e}; "
            "rescale rates or shorten the record"
        )

    # Fold the commutator and anticommutator parts into one left matrix:
    # drho = G rho + rho G' + sum_k (W_k rho W_k') with W_k = sqrt(rate) L_k.
    g_mat = -1j * h.astype(complex)
    weighted = []
    for t in terms:
        if t.rate == 0.0:
            continue
        w = math.sqrt(t.rate) * t.collapse
        weighted.append(w)
        g_mat -= 0.5 * (w.conj().T @ w)
    g_dag = g_mat.conj().T
    if weighted:
        w_stack = np.stack(weighted)
        wd_stack = np.stack([w.conj().T for w in weighted])

        def rhs(_t, y):
            r = y.reshape(d, d)
            dr = g_mat @ r + r @ g_dag
            dr += ((w_stack @ r) @ wd_stack).sum(axis=0)
            return dr.ravel()

    else:

        def rhs(_t, y):
            r = y.reshape(d, d)
            return (g_mat @ r + r @ g_dag).ravel()

    t_eval = np.linspace(0.0, options.t_final, options.sample_count)
    sol = solve_ivp(
        rhs,
        (0.0, options.t_final),
        rho0.ravel(),
        method="RK45",
        t_eval=t_eval,
        rtol=options.rel_tol,
        atol=options.abs_tol,
        max_step=options.max_step if options.max_step is not None else np.inf,
    )
    if not sol.success:
        reached = float(sol.t[-1]) if sol.t.size else 0.0
        raise NumericalFailureError(
            f"integration failed at t = {reached:.6e} s: {sol.message}", time=reached
        )
    states = sol.y.T.reshape(-1, d, d)
    return t_eval, states


def evolve(
    rho0: np.ndarray,
    h: np.ndarray,
    terms: Sequence[LindbladTerm],
    options: EvolveOptions,
    observables: Sequence[tuple[str, np.ndarray]],
) -> TimeSeries:
    """Integrate and record expectation values of the given observables.

    Returns a TimeSeries with one column per observable (real part; the
    largest imaginary remainder is recorded in ``meta['max_imag_expectation']``
    and is at roundoff level for Hermitian observables).  ``meta`` also
    carries trace/Hermiticity drift over all emitted samples, the smallest
    eigenvalue of the final state, and the final state itself.
    """
    labels = tuple(name for name, _ in observables)
    obs = [np.asarray(op, dtype=complex) for _, op in observables]
    times, states = evolve_states(rho0, h, terms, options)
    for op in obs:
        if op.shape != states.shape[1:]:
            raise InvalidParameterError(
                f"observable shape {op.shape} does not match state {states.shape[1:]}"
            )
    cols = np.empty((times.size, len(obs)), dtype=complex)
    for j, op in enumerate(obs):
        cols[:, j] = np.einsum("ij,tji->t", op, states)
    traces = np.einsum("tii->t", states)
    herm_dev = float(np.abs(states - states.conj().transpose(0, 2, 1)).max())
    final = states[-1]
    min_eig = float(np.linalg.eigvalsh(0.5 * (final + final.conj().T)).min())
    meta = {
        "max_trace_deviation": float(np.abs(traces - 1.0).max()),
        "max_hermiticity_deviation": herm_dev,
        "max_imag_expectation": float(np.abs(cols.imag).max()) if obs else 0.0,
        "min_final_eigenvalue": min_eig,
        "final_state": final,
        "rel_tol": options.rel_tol,
        "abs_tol": options.abs_tol,
        "seed": None,
    }
    return TimeSeries(times=times, values=cols.real, labels=labels, meta=meta)


def liouvillian_matrix(h: np.ndarray, terms: Sequence[LindbladTerm]) -> np.ndarray:
    """Dense superoperator S with vec(drho/dt) = S vec(rho), row-major vec."""
    d = _check_dims(None, h, terms)
    eye = np.eye(d, dtype=complex)
    s = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for t in terms:
        if t.rate == 0.0:
            continue
        l_op = t.collapse
        ldl = l_op.conj().T @ l_op
        s += t.rate * (
            np.kron(l_op, l_op.conj())
            - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
        )
    return s


def steady_state(
    h: np.ndarray,
    terms: Sequence[LindbladTerm],
    null_tol: float = 1e-8,
) -> np.ndarray:
    """Unique stationary density matrix of the Liouvillian, by dense null-space solve.

    Raises SteadyStateAmbiguityError when more than one singular value
    falls below ``null_tol`` times the largest (degenerate stationary
    manifold), and NumericalFailureError when none does.
    """
    if not terms:
        raise SteadyStateAmbiguityError(
            "no dissipation: every Hamiltonian eigenprojector is stationary",
        )
    s = liouvillian_matrix(h, terms)
    d = h.shape[0]
    _u, sing, vh = np.linalg.svd(s)
    threshold = null_tol * float(sing[0]) if sing[0] > 0.0 else null_tol
    null_count = int(np.sum(sing < threshold))
    if null_count == 0:
        raise NumericalFailureError(
            f"no stationary state at tolerance {null_tol:g}: smallest singular value "
            f"{sing[-1]:.3e} vs threshold {threshold:.3e}"
        )
    if null_count > 1:
        raise SteadyStateAmbiguityError(
            f"stationary manifold is {null_count}-dimensional at tolerance {null_tol:g}"
        )
    rho = vh[-1].conj().reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    if abs(tr) < 1e-12:
        raise NumericalFailureError(
            "stationary null vector is traceless; cannot normalize"
        )
    rho = rho / tr
    return rho


def expectation(rho: np.ndarray, observable: np.ndarray) -> complex:
    """Tr(observable @ rho); complex so that non-Hermitian probes are usable."""
    rho = np.asarray(rho, dtype=complex)
    observable = np.asarray(observable, dtype=complex)
    if rho.shape != observable.shape or rho.ndim != 2:
        raise InvalidParameterError(
            f"shape mismatch: state {rho.shape}, observable {observable.shape}"
        )
    return complex(np.einsum("ij,ji->", observable, rho))
