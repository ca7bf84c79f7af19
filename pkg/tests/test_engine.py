"""Master-equation machinery: operators, channels, integration, steady states."""

import math

import numpy as np
import pytest

from dephasim import (
    DissipationSource,
    EvolveOptions,
    HilbertConfig,
    InvalidParameterError,
    LindbladTerm,
    NumericalFailureError,
    SteadyStateAmbiguityError,
    build_dissipators,
    build_hamiltonian,
    build_operators,
    default_fock_cutoff,
    effective_bath_occupation,
    evolve,
    evolve_states,
    expectation,
    lindblad_rhs,
    liouvillian_matrix,
    steady_state,
    temperature_for_occupation,
    thermal_cavity_state,
)

H4 = HilbertConfig(fock_cutoff=4)
OPS4 = build_operators(H4)


def joint_state(qubit_rho: np.ndarray, cavity_rho: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(qubit_rho, complex), np.asarray(cavity_rho, complex))


GROUND = np.array([[1.0, 0.0], [0.0, 0.0]])
EXCITED = np.array([[0.0, 0.0], [0.0, 1.0]])
PLUS = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]])


# ---------------------------------------------------------------- truncation


@pytest.mark.parametrize(
    "n_th, expected", [(0.0, 4), (0.005, 5), (0.01, 5), (0.05, 8), (0.5, 21)]
)
def test_default_fock_cutoff_table(n_th, expected):
    assert default_fock_cutoff(n_th) == expected


def test_default_fock_cutoff_validation():
    with pytest.raises(InvalidParameterError):
        default_fock_cutoff(-0.1)
    with pytest.raises(InvalidParameterError):
        default_fock_cutoff(math.inf)


def test_hilbert_config():
    assert HilbertConfig(fock_cutoff=6).dim == 12
    with pytest.raises(InvalidParameterError):
        HilbertConfig(fock_cutoff=1)
    with pytest.raises(InvalidParameterError):
        HilbertConfig(fock_cutoff=4.0)  # type: ignore[arg-type]


# ----------------------------------------------------------------- operators


def test_ladder_commutator_truncated():
    # [a, a+] = 1 on the kept levels; the top level absorbs -(N-1)
    comm = OPS4.a @ OPS4.adag - OPS4.adag @ OPS4.a
    n = H4.fock_cutoff
    expected_cavity = np.diag([1.0] * (n - 1) + [-(n - 1.0)])
    expected = np.kron(np.eye(2), expected_cavity)
    np.testing.assert_allclose(comm, expected, atol=1e-15)


def test_number_operator_spectrum():
    evals = np.sort(np.linalg.eigvalsh(OPS4.number))
    np.testing.assert_allclose(evals, np.repeat(np.arange(4.0), 2), atol=1e-14)


def test_qubit_algebra():
    eye = OPS4.identity
    np.testing.assert_allclose(OPS4.sz @ OPS4.sz, eye, atol=1e-15)
    np.testing.assert_allclose(OPS4.sx @ OPS4.sx, eye, atol=1e-15)
    np.testing.assert_allclose(
        OPS4.sx @ OPS4.sy - OPS4.sy @ OPS4.sx, 2j * OPS4.sz, atol=1e-15
    )
    np.testing.assert_allclose(OPS4.sm + OPS4.sm.conj().T, OPS4.sx, atol=1e-15)


def test_lowering_operator_maps_excited_to_ground():
    n = H4.fock_cutoff
    excited_vac = np.zeros(2 * n, dtype=complex)
    excited_vac[n] = 1.0  # qubit index 1, cavity vacuum
    rho = np.outer(excited_vac, excited_vac.conj())
    assert expectation(rho, OPS4.sz).real == pytest.approx(-1.0)
    dropped = OPS4.sm @ excited_vac
    ground_vac = np.zeros(2 * n, dtype=complex)
    ground_vac[0] = 1.0
    np.testing.assert_allclose(dropped, ground_vac, atol=1e-15)


def test_operators_commute_across_subsystems():
    np.testing.assert_allclose(
        OPS4.a @ OPS4.sz, OPS4.sz @ OPS4.a, atol=1e-15
    )


# ------------------------------------------------------------ thermal states


def test_thermal_state_geometric_form():
    n_bar = 0.25
    rho = thermal_cavity_state(n_bar, 12)
    p = np.diag(rho).real
    assert p.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(rho, np.diag(p), atol=1e-15)
    q = n_bar / (n_bar + 1.0)
    ratios = p[1:] / p[:-1]
    np.testing.assert_allclose(ratios, q, rtol=1e-12)
    mean = float(np.arange(12) @ p)
    assert mean == pytest.approx(n_bar, rel=1e-6)  # truncation-tail error only


def test_thermal_state_vacuum():
    rho = thermal_cavity_state(0.0, 5)
    expected = np.zeros((5, 5))
    expected[0, 0] = 1.0
    np.testing.assert_allclose(rho, expected, atol=1e-15)
    with pytest.raises(InvalidParameterError):
        thermal_cavity_state(-0.1, 5)


def test_effective_bath_occupation_is_rate_weighted():
    f = 12.1e9
    t_hot = temperature_for_occupation(f, 0.05)
    t_cold = temperature_for_occupation(f, 0.01)
    sources = [
        DissipationSource(kappa=3.0, temperature=t_hot),
        DissipationSource(kappa=1.0, temperature=t_cold),
    ]
    n_eff = effective_bath_occupation(sources, f)
    assert n_eff == pytest.approx((3.0 * 0.05 + 1.0 * 0.01) / 4.0, rel=1e-12)
    assert effective_bath_occupation([], f) == 0.0


# ----------------------------------------------------------------- builders


def test_hamiltonian_doubly_rotating():
    chi = 2.0 * math.pi * 390e3
    h = build_hamiltonian(0.0, 0.0, chi, H4)
    np.testing.assert_allclose(h, -chi * (OPS4.number @ OPS4.sz), atol=0.0)
    np.testing.assert_allclose(h, h.conj().T, atol=0.0)


def test_hamiltonian_lab_frame():
    wc, wq, chi = 5.0, 3.0, 0.2
    h = build_hamiltonian(wc, wq, chi, H4, frame="lab")
    expected = -chi * (OPS4.number @ OPS4.sz) + wc * OPS4.number - 0.5 * wq * OPS4.sz
    np.testing.assert_allclose(h, expected, atol=1e-15)


def test_hamiltonian_validation():
    with pytest.raises(InvalidParameterError):
        build_hamiltonian(0.0, 0.0, 1.0, H4, frame="interaction")
    with pytest.raises(InvalidParameterError):
        build_hamiltonian(0.0, 0.0, math.nan, H4)
    with pytest.raises(InvalidParameterError):
        build_hamiltonian(0.0, 3.0, 1.0, H4, frame="lab")


def test_dissipator_rates_and_labels():
    f = 12.1e9
    n_th = 0.01
    src = DissipationSource(
        kappa=2.0, temperature=temperature_for_occupation(f, n_th), label="feed"
    )
    terms = build_dissipators([src], f, H4, gamma1=3.0, gamma_phi=5.0)
    by_label = {t.label: t for t in terms}
    assert set(by_label) == {
        "feed:loss", "feed:gain", "qubit:relaxation", "qubit:dephasing"
    }
    assert by_label["feed:loss"].rate == pytest.approx(2.0 * (n_th + 1.0), rel=1e-12)
    assert by_label["feed:gain"].rate == pytest.approx(2.0 * n_th, rel=1e-12)
    np.testing.assert_allclose(by_label["feed:loss"].collapse, OPS4.a)
    np.testing.assert_allclose(by_label["feed:gain"].collapse, OPS4.adag)
    assert by_label["qubit:relaxation"].rate == 3.0
    # the sigma_z channel carries half the dephasing rate so coherences
    # damp at exactly gamma_phi
    assert by_label["qubit:dephasing"].rate == 2.5
    np.testing.assert_allclose(by_label["qubit:dephasing"].collapse, OPS4.sz)


def test_dissipators_skip_frozen_gain_and_zero_rates():
    src = DissipationSource(kappa=2.0, temperature=0.0, label="cold")
    terms = build_dissipators([src], 12.1e9, H4)
    assert [t.label for t in terms] == ["cold:loss"]
    assert terms[0].rate == 2.0


def test_lindblad_term_validation():
    with pytest.raises(InvalidParameterError):
        LindbladTerm(rate=-1.0, collapse=OPS4.a)
    with pytest.raises(InvalidParameterError):
        LindbladTerm(rate=1.0, collapse=np.zeros((3, 4)))


# ------------------------------------------------------- right-hand side


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_rhs_traceless_and_hermiticity_preserving():
    h = build_hamiltonian(0.0, 0.0, 1.3, H4)
    terms = [LindbladTerm(0.7, OPS4.a), LindbladTerm(0.2, OPS4.adag),
             LindbladTerm(0.1, OPS4.sm)]
    rho = random_density(H4.dim, seed=7)
    d_rho = lindblad_rhs(rho, h, terms)
    assert abs(np.trace(d_rho)) < 1e-13
    assert np.abs(d_rho - d_rho.conj().T).max() < 1e-13


def test_rhs_matches_superoperator_matrix():
    h = build_hamiltonian(0.0, 0.0, 0.9, H4)
    terms = [LindbladTerm(0.4, OPS4.a), LindbladTerm(0.05, OPS4.adag),
             LindbladTerm(0.3, OPS4.sz)]
    s = liouvillian_matrix(h, terms)
    rho = random_density(H4.dim, seed=11)
    direct = lindblad_rhs(rho, h, terms).ravel()
    via_matrix = s @ rho.ravel()
    np.testing.assert_allclose(via_matrix, direct, atol=1e-12)


def test_rhs_dimension_mismatch():
    h = build_hamiltonian(0.0, 0.0, 1.0, H4)
    with pytest.raises(InvalidParameterError):
        lindblad_rhs(np.eye(3) / 3.0, h, [])
    bad_term = LindbladTerm(1.0, np.eye(3, dtype=complex))
    with pytest.raises(InvalidParameterError):
        lindblad_rhs(np.eye(H4.dim) / H4.dim, h, [bad_term])


# ------------------------------------------------------------- integration


def test_pure_dephasing_analytic_decay():
    gamma_phi = 2.0
    terms = [LindbladTerm(0.5 * gamma_phi, OPS4.sz, "dephasing")]
    rho0 = joint_state(PLUS, thermal_cavity_state(0.0, 4))
    h = np.zeros((H4.dim, H4.dim), dtype=complex)
    opts = EvolveOptions(t_final=2.0, sample_count=41, rel_tol=1e-10, abs_tol=1e-12)
    series = evolve(rho0, h, terms, opts, [("sigma_x", OPS4.sx)])
    expected = np.exp(-gamma_phi * series.times)
    np.testing.assert_allclose(series.column("sigma_x"), expected, atol=1e-8)


def test_cavity_amplitude_decay():
    # zero-temperature loss empties a thermal state at exactly kappa
    kappa = 1.5
    n0 = 0.6
    hil = HilbertConfig(fock_cutoff=12)
    ops = build_operators(hil)
    terms = [LindbladTerm(kappa, ops.a, "loss")]
    rho0 = joint_state(GROUND, thermal_cavity_state(n0, 12))
    h = np.zeros((hil.dim, hil.dim), dtype=complex)
    opts = EvolveOptions(t_final=2.0, sample_count=21, rel_tol=1e-10, abs_tol=1e-13)
    series = evolve(rho0, h, terms, opts, [("n", ops.number)])
    # renormalizing the truncated tail shifts the initial mean slightly
    # below the nominal n0; the decay law holds for the actual mean
    n_init = expectation(rho0, ops.number).real
    assert n_init == pytest.approx(n0, rel=1e-3)
    expected = n_init * np.exp(-kappa * series.times)
    np.testing.assert_allclose(series.column("n"), expected, rtol=2e-6, atol=1e-9)


def test_evolve_meta_and_shapes():
    terms = [LindbladTerm(0.3, OPS4.a)]
    rho0 = joint_state(GROUND, thermal_cavity_state(0.1, 4))
    h = build_hamiltonian(0.0, 0.0, 0.5, H4)
    opts = EvolveOptions(t_final=1.0, sample_count=9)
    series = evolve(rho0, h, terms, opts, [("n", OPS4.number), ("sz", OPS4.sz)])
    assert series.times.shape == (9,)
    assert series.values.shape == (9, 2)
    assert series.labels == ("n", "sz")
    meta = series.meta
    assert meta["max_trace_deviation"] < 1e-7
    assert meta["max_hermiticity_deviation"] < 1e-9
    assert meta["max_imag_expectation"] < 1e-10
    assert meta["min_final_eigenvalue"] > -1e-9
    assert meta["final_state"].shape == (H4.dim, H4.dim)
    assert meta["seed"] is None


def test_evolve_rejects_bad_initial_state():
    h = build_hamiltonian(0.0, 0.0, 0.5, H4)
    bad = np.eye(H4.dim, dtype=complex)  # trace != 1
    with pytest.raises(InvalidParameterError):
        evolve_states(bad, h, [], EvolveOptions(t_final=1.0, sample_count=3))
    skew = random_density(H4.dim, 3) + 0.1j * np.eye(H4.dim)
    with pytest.raises(InvalidParameterError):
        evolve_states(skew, h, [], EvolveOptions(t_final=1.0, sample_count=3))


def test_evolve_observable_shape_mismatch():
    rho0 = joint_state(GROUND, thermal_cavity_state(0.0, 4))
    h = np.zeros((H4.dim, H4.dim), dtype=complex)
    opts = EvolveOptions(t_final=0.5, sample_count=3)
    with pytest.raises(InvalidParameterError):
        evolve(rho0, h, [], opts, [("bad", np.eye(3))])


def test_evolve_options_validation():
    with pytest.raises(InvalidParameterError):
        EvolveOptions(t_final=0.0, sample_count=4)
    with pytest.raises(InvalidParameterError):
        EvolveOptions(t_final=1.0, sample_count=1)
    with pytest.raises(InvalidParameterError):
        EvolveOptions(t_final=1.0, sample_count=4, rel_tol=0.0)
    with pytest.raises(InvalidParameterError):
        EvolveOptions(t_final=1.0, sample_count=4, max_step=-1.0)


def test_stiffness_guard_refuses_impossible_step_counts():
    terms = [LindbladTerm(1e12, OPS4.a, "absurd")]
    rho0 = joint_state(GROUND, thermal_cavity_state(0.0, 4))
    h = np.zeros((H4.dim, H4.dim), dtype=complex)
    opts = EvolveOptions(t_final=10.0, sample_count=5)
    with pytest.raises(NumericalFailureError, match="stiff"):
        evolve_states(rho0, h, terms, opts)


# ------------------------------------------------------------- steady state


def test_steady_state_requires_dissipation():
    h = build_hamiltonian(0.0, 0.0, 1.0, H4)
    with pytest.raises(SteadyStateAmbiguityError):
        steady_state(h, [])


def test_steady_state_degenerate_without_qubit_relaxation():
    # sigma_z is conserved by cavity channels alone, so the stationary
    # manifold splits by qubit population and the solve must refuse
    h = build_hamiltonian(0.0, 0.0, 1.0, H4)
    terms = [LindbladTerm(1.0, OPS4.a), LindbladTerm(0.05, OPS4.adag)]
    with pytest.raises(SteadyStateAmbiguityError):
        steady_state(h, terms)


def test_steady_state_thermal_cavity():
    # loss at kappa(n+1), gain at kappa*n must stabilize the geometric
    # state with occupation n; qubit relaxation breaks the degeneracy
    n_bar = 0.08
    h = build_hamiltonian(0.0, 0.0, 1.0, H4)
    terms = [
        LindbladTerm(1.0 * (n_bar + 1.0), OPS4.a, "loss"),
        LindbladTerm(1.0 * n_bar, OPS4.adag, "gain"),
        LindbladTerm(0.01, OPS4.sm, "relax"),
    ]
    rho = steady_state(h, terms)
    residual = lindblad_rhs(rho, h, terms)
    assert np.abs(residual).max() < 1e-10
    expected = joint_state(GROUND, thermal_cavity_state(n_bar, 4))
    np.testing.assert_allclose(rho, expected, atol=1e-8)


def test_expectation_validation():
    with pytest.raises(InvalidParameterError):
        expectation(np.eye(4), np.eye(3))
