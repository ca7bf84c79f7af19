"""Scalar device math against independently computed reference values."""

import math

import pytest

from dephasim import (
    CavityGeometry,
    ChiDiscrepancyWarning,
    CoherenceRatioWarning,
    CoherenceRecord,
    DeviceParams,
    DissipationSource,
    InvalidParameterError,
    SingularParameterError,
    charging_energy,
    coupling_efficiency,
    derived_chi_over_2pi,
    dispersive_chi,
    effective_chi_over_2pi,
    kappa_from_q,
    modes_coupled_at_center,
    pure_dephasing_rate,
    purcell_t1,
    quality_factors,
    rectangular_mode_freq,
    temperature_for_occupation,
    thermal_occupation,
    transmon_f01,
)

TWO_PI = 2.0 * math.pi

BOX = CavityGeometry(a=18.6e-3, b=4.2e-3, d=15.5e-3)


def reldiff(a, b):
    return abs(a - b) / abs(b)


def test_charging_energy_reference():
    assert reldiff(charging_energy(91e-15), 212859662.908342) < 1e-12


def test_charging_energy_scales_inversely():
    assert charging_energy(45.5e-15) == pytest.approx(2 * charging_energy(91e-15))


@pytest.mark.parametrize("bad", [0.0, -1e-15, math.inf, math.nan])
def test_charging_energy_rejects_nonpositive(bad):
    with pytest.raises(InvalidParameterError):
        charging_energy(bad)


def test_dispersive_chi_reference():
    e_c = charging_energy(91e-15)
    chi = dispersive_chi(153e6, 4.2e9 - 12.1e9, e_c)
    assert reldiff(chi, -77745.48493924926) < 1e-12
    assert chi < 0.0


def test_dispersive_chi_is_homogeneous_in_units():
    # Hz in, Hz out must equal (rad/s in, rad/s out) / 2pi
    hz = dispersive_chi(153e6, -7.9e9, 2.12e8)
    rad = dispersive_chi(TWO_PI * 153e6, TWO_PI * -7.9e9, TWO_PI * 2.12e8)
    assert rad == pytest.approx(TWO_PI * hz, rel=1e-14)


def test_dispersive_chi_singularities():
    with pytest.raises(SingularParameterError):
        dispersive_chi(153e6, 0.0, 2.12e8)
    with pytest.raises(SingularParameterError):
        dispersive_chi(153e6, 2.12e8, 2.12e8)


@pytest.mark.parametrize(
    "f, t, expected",
    [
        (12.1e9, 0.070, 2.496164869781184e-4),
        (4.2e9, 0.070, 0.059501905180248164),
    ],
)
def test_thermal_occupation_reference(f, t, expected):
    assert reldiff(thermal_occupation(f, t), expected) < 1e-12


def test_thermal_occupation_limits():
    assert thermal_occupation(12.1e9, 0.0) == 0.0
    assert thermal_occupation(12.1e9, 0.008) < 1e-30
    # extreme ratio underflows to zero instead of overflowing
    assert thermal_occupation(12.1e9, 1e-5) == 0.0


def test_thermal_occupation_monotone_in_temperature():
    temps = [0.02, 0.05, 0.1, 0.2, 0.5]
    occs = [thermal_occupation(12.1e9, t) for t in temps]
    assert occs == sorted(occs)
    assert all(n > 0.0 for n in occs)


def test_temperature_for_occupation_inverts():
    t = temperature_for_occupation(12.1e9, 0.005)
    assert reldiff(t, 0.10949934464353524) < 1e-12
    assert thermal_occupation(12.1e9, t) == pytest.approx(0.005, rel=1e-12)


def test_kappa_from_q_reference():
    kappa = kappa_from_q(12.1e9, 10400.0)
    assert reldiff(kappa / TWO_PI, 1163461.5384615385) < 1e-12


def test_purcell_reference():
    kappa = kappa_from_q(12.1e9, 10400.0)
    t1 = purcell_t1(TWO_PI * 153e6, TWO_PI * -7.9e9, kappa)
    assert reldiff(t1, 3.647030720436971e-4) < 1e-12


def test_purcell_singularities():
    with pytest.raises(SingularParameterError):
        purcell_t1(0.0, 1.0, 1.0)
    with pytest.raises(SingularParameterError):
        purcell_t1(1.0, 0.0, 1.0)


def test_quality_factors_reference():
    q1, q2 = quality_factors(4.2e9, 70e-6, 95e-6)
    assert reldiff(q1, 1847256.4803107982) < 1e-12
    assert reldiff(q2, 2506990.937564655) < 1e-12


@pytest.mark.parametrize(
    "t1, t2, expected",
    [(70e-6, 95e-6, 3383.45864661654), (45e-6, 18e-6, 44444.444444444445)],
)
def test_pure_dephasing_rate_reference(t1, t2, expected):
    assert reldiff(pure_dephasing_rate(t1, t2), expected) < 1e-12


def test_pure_dephasing_rate_edge_cases():
    # exactly lifetime-limited: no catastrophic cancellation, exactly zero
    assert pure_dephasing_rate(70e-6, 140e-6) == 0.0
    # an unphysical record is passed through, not masked
    assert pure_dephasing_rate(10e-6, 30e-6) < 0.0


@pytest.mark.parametrize(
    "mnl, expected",
    [((1, 0, 1), 12588462085.665373), ((3, 0, 1), 26039222488.16047)],
)
def test_rectangular_mode_reference(mnl, expected):
    assert reldiff(rectangular_mode_freq(BOX, *mnl), expected) < 1e-12


def test_rectangular_mode_index_validation():
    with pytest.raises(InvalidParameterError):
        rectangular_mode_freq(BOX, 0, 0, 1)
    with pytest.raises(InvalidParameterError):
        rectangular_mode_freq(BOX, -1, 0, 1)


def test_center_coupled_modes_all_odd():
    modes = modes_coupled_at_center(BOX, max_index=7)
    assert modes, "expected at least one center-coupled mode"
    for idx in modes:
        assert all(i == 0 or i % 2 == 1 for i in idx)
    freqs = [rectangular_mode_freq(BOX, *idx) for idx in modes]
    assert freqs == sorted(freqs)
    assert modes[0] == (1, 0, 1)
    assert (3, 0, 1) in modes


def test_coupling_efficiency():
    assert coupling_efficiency(1.0, 3.0) == pytest.approx(0.25)
    assert coupling_efficiency(2.0, 0.0) == 1.0
    with pytest.raises(InvalidParameterError):
        coupling_efficiency(0.0, 0.0)


def test_transmon_f01_reference():
    e_c = charging_energy(91e-15)
    assert reldiff(transmon_f01(10.3946e9, e_c), 3994363698.9464116) < 1e-12
    # closed form check with round numbers: sqrt(8*2e9*2e8) - 2e8
    assert transmon_f01(2e9, 2e8) == pytest.approx(
        math.sqrt(3.2e18) - 2e8, rel=1e-14
    )


def test_chi_override_wins_and_warns_on_large_mismatch():
    device = DeviceParams(
        f_qubit=4.2e9, f_cavity=12.1e9, g_over_2pi=153e6, Q_total=10400.0,
        coupling_ratio=0.25, C_sigma=91e-15, chi_over_2pi=390e3,
    )
    assert derived_chi_over_2pi(device) == pytest.approx(-77745.48493924926)
    with pytest.warns(ChiDiscrepancyWarning):
        assert effective_chi_over_2pi(device) == 390e3


def test_chi_override_quiet_when_close():
    derived = -77745.48493924926
    device = DeviceParams(
        f_qubit=4.2e9, f_cavity=12.1e9, g_over_2pi=153e6, Q_total=10400.0,
        coupling_ratio=0.25, C_sigma=91e-15, chi_over_2pi=derived * 1.05,
    )
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert effective_chi_over_2pi(device) == pytest.approx(derived * 1.05)


def test_chi_unresolvable_without_inputs():
    device = DeviceParams(
        f_qubit=4.2e9, f_cavity=12.1e9, g_over_2pi=153e6, Q_total=10400.0,
        coupling_ratio=0.25,
    )
    with pytest.raises(InvalidParameterError):
        effective_chi_over_2pi(device)


def test_coherence_record_warns_past_bound():
    with pytest.warns(CoherenceRatioWarning):
        CoherenceRecord(T1=10e-6, T2_star=30e-6)


def test_dissipation_source_validation():
    with pytest.raises(InvalidParameterError):
        DissipationSource(kappa=-1.0, temperature=0.1)
    with pytest.raises(InvalidParameterError):
        DissipationSource(kappa=1.0, temperature=-0.1)


def test_device_params_validation():
    with pytest.raises(InvalidParameterError):
        DeviceParams(
            f_qubit=0.0, f_cavity=12.1e9, g_over_2pi=0.0, Q_total=1e4,
            coupling_ratio=0.5,
        )
    with pytest.raises(InvalidParameterError):
        DeviceParams(
            f_qubit=4.2e9, f_cavity=12.1e9, g_over_2pi=0.0, Q_total=1e4,
            coupling_ratio=1.5,
        )
