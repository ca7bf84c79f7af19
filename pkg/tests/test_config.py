"""Flat key=value configuration parsing, typing, and builders."""

import math

import pytest

from dephasim import ConfigError
from dephasim.config import (
    RunConfig,
    SCHEMA,
    SOURCE_FIELDS,
    describe_schema,
    parse_config,
)

GOOD = """\
# reference run
device.f_qubit_hz   = 4.2e9
device.f_cavity_hz  = 12.1e9
device.q_total      = 10400

device.chi_hz = 390e3
experiment.protocol = ramsey
experiment.t_final_s = 2.6e-4
experiment.samples = 600
analytics.compare_small_chi = true
sweep.parameter = "sources.0.temperature_k"
sweep.values = 0.05, 0.1, 0.15
sources.0.kappa_hz = 1.1634615e6
sources.0.temperature_k = 0.1095
sources.0.label = feedline
"""


@pytest.fixture()
def good_cfg(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(GOOD)
    return parse_config(p)


def test_parse_types_and_comments(good_cfg):
    assert good_cfg.values["device.f_qubit_hz"] == 4.2e9
    assert good_cfg.values["experiment.samples"] == 600
    assert isinstance(good_cfg.values["experiment.samples"], int)
    assert good_cfg.values["analytics.compare_small_chi"] is True
    assert good_cfg.values["sweep.parameter"] == "sources.0.temperature_k"
    assert good_cfg.values["sweep.values"] == [0.05, 0.1, 0.15]
    assert good_cfg.values["sources.0.label"] == "feedline"


def test_parse_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/run.cfg")


def test_parse_duplicate_key(tmp_path):
    p = tmp_path / "dup.cfg"
    p.write_text("device.q_total = 1\ndevice.q_total = 2\n")
    with pytest.raises(ConfigError, match=r"dup\.cfg:2.*duplicate"):
        parse_config(p)


def test_parse_bad_line_reports_lineno(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("device.q_total = 1\nthis is not a setting\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:2"):
        parse_config(p)


def test_parse_unknown_key(tmp_path):
    p = tmp_path / "unk.cfg"
    p.write_text("device.colour = blue\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config(p)


def test_parse_unknown_source_field(tmp_path):
    p = tmp_path / "src.cfg"
    p.write_text("sources.0.power_w = 1.0\n")
    with pytest.raises(ConfigError, match="unknown source field"):
        parse_config(p)


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("device.q_total = plenty", "expected a number"),
        ("experiment.samples = 12.5", "expected an integer"),
        ("analytics.compare_small_chi = maybe", "expected true/false"),
        ("sweep.values = ", "non-empty"),
        ("sweep.values = a, b", "must be numbers"),
        ("device.q_total = inf", "finite"),
    ],
)
def test_parse_type_errors(tmp_path, line, fragment):
    p = tmp_path / "typed.cfg"
    p.write_text(line + "\n")
    with pytest.raises(ConfigError, match=fragment):
        parse_config(p)


@pytest.mark.parametrize(
    "override, fragment",
    [
        ("experiment.protocol=echo", "protocol"),
        ("analytics.small_chi_variant=fancy", "small_chi_variant"),
        ("sweep.target=dance", "target"),
    ],
)
def test_parse_enum_validation(override, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(None, [override])


def test_overrides_win_and_coerce(tmp_path, good_cfg):
    p = tmp_path / "run.cfg"
    p.write_text(GOOD)
    cfg = parse_config(p, ["experiment.samples=64", "device.chi_hz=-77.7e3"])
    assert cfg.values["experiment.samples"] == 64
    assert cfg.values["device.chi_hz"] == -77.7e3
    with pytest.raises(ConfigError, match="key=value"):
        parse_config(p, ["experiment.samples"])


def test_get_require_defaults():
    cfg = RunConfig(values={"device.f_qubit_hz": 4.2e9})
    # schema default flows through both get and require
    assert cfg.get("experiment.samples") == 400
    assert cfg.require("experiment.samples") == 400
    # None-default keys fall back to the caller's default
    assert cfg.get("device.chi_hz") is None
    assert cfg.get("device.chi_hz", 1.0) == 1.0
    with pytest.raises(ConfigError, match="missing required"):
        cfg.require("experiment.t_final_s")
    with pytest.raises(ConfigError, match="unknown config key"):
        cfg.get("experiment.banana")


def test_with_value_coerces_and_copies(good_cfg):
    other = good_cfg.with_value("experiment.samples", "32")
    assert other.values["experiment.samples"] == 32
    assert good_cfg.values["experiment.samples"] == 600


def test_has_section(good_cfg):
    assert good_cfg.has_section("device")
    assert good_cfg.has_section("sources")
    assert not good_cfg.has_section("geometry")


def test_coupling_ratio_precedence():
    base = {
        "device.f_qubit_hz": 4.2e9, "device.f_cavity_hz": 12.1e9,
        "device.q_total": 1e4,
    }
    explicit = RunConfig(values={**base, "device.coupling_ratio": 0.7,
                                 "device.kappa_ext_hz": 1.0,
                                 "device.kappa_int_hz": 99.0})
    assert explicit.coupling_ratio() == 0.7
    derived = RunConfig(values={**base, "device.kappa_ext_hz": 1.0,
                                "device.kappa_int_hz": 3.0})
    assert derived.coupling_ratio() == 0.25
    assert RunConfig(values=base).coupling_ratio() == 1.0


def test_device_builder(good_cfg):
    device = good_cfg.device()
    assert device.f_qubit == 4.2e9
    assert device.chi_over_2pi == 390e3
    assert device.coupling_ratio == 1.0
    assert device.T1_intrinsic is None


def test_device_builder_incomplete():
    cfg = RunConfig(values={"device.f_qubit_hz": 4.2e9})
    with pytest.raises(ConfigError, match="incomplete"):
        cfg.device()


def test_sources_builder(good_cfg):
    (src,) = good_cfg.sources()
    assert src.kappa == pytest.approx(2 * math.pi * 1.1634615e6, rel=1e-15)
    assert src.temperature == 0.1095
    assert src.label == "feedline"


def test_sources_default_label_and_ordering():
    cfg = RunConfig(values={
        "sources.2.kappa_hz": 2.0, "sources.2.temperature_k": 0.1,
        "sources.0.kappa_hz": 1.0, "sources.0.temperature_k": 0.2,
    })
    labels = [s.label for s in cfg.sources()]
    assert labels == ["source0", "source2"]


def test_sources_missing_field():
    cfg = RunConfig(values={"sources.0.kappa_hz": 1.0})
    with pytest.raises(ConfigError, match="missing.*temperature_k"):
        cfg.sources()


def test_optional_sections_absent(good_cfg):
    assert good_cfg.geometry() is None
    assert good_cfg.coherence() is None
    assert good_cfg.hilbert() is None
    sized = good_cfg.with_value("hilbert.fock_cutoff", 7)
    assert sized.hilbert().fock_cutoff == 7


def test_geometry_builder():
    cfg = RunConfig(values={
        "geometry.a_m": 18.6e-3, "geometry.b_m": 4.2e-3, "geometry.d_m": 15.5e-3,
    })
    geom = cfg.geometry()
    assert (geom.a, geom.b, geom.d) == (18.6e-3, 4.2e-3, 15.5e-3)
    broken = RunConfig(values={"geometry.a_m": 1.0})
    with pytest.raises(ConfigError, match="incomplete"):
        broken.geometry()


def test_resolved_items_echoes_full_recipe(good_cfg):
    resolved = dict(good_cfg.resolved_items())
    # provided values come back as given
    assert resolved["device.chi_hz"] == 390e3
    assert resolved["experiment.samples"] == 600
    # defaults of touched sections are materialized
    assert resolved["experiment.detuning_hz"] == 0.0
    assert resolved["analytics.small_chi_variant"] == "normalized"
    # untouched sections stay out entirely, defaults included
    assert not any(k.startswith("geometry.") for k in resolved)
    assert "integrator.rel_tol" not in resolved
    # source keys are present and last
    keys = list(dict(good_cfg.resolved_items()))
    assert keys[-3:] == [
        "sources.0.kappa_hz", "sources.0.label", "sources.0.temperature_k",
    ]


def test_resolved_items_ordering_follows_schema(good_cfg):
    keys = [k for k, _ in good_cfg.resolved_items() if not k.startswith("sources.")]
    schema_order = [k for k in SCHEMA if k in keys]
    assert keys == schema_order


def test_describe_schema_covers_every_key():
    doc = describe_schema()
    for key in SCHEMA:
        assert f"`{key}`" in doc, key
    for fld in SOURCE_FIELDS:
        assert fld in doc
    assert "required" in doc
