"""Run configuration: a flat text file of dotted keys with unit-suffixed names.

The format is one ``key = value`` assignment per line::

    # lines starting with '#' are comments
    device.f_qubit_hz   = 4.2e9
    sources.0.kappa_hz  = 1.163e6
    sources.0.label     = feedline
    sweep.values        = 0.02, 0.05, 0.1

Flat keys diff cleanly and sort stably.  Dissipation sources are indexed
(``sources.0.*``, ``sources.1.*``).  Every physical key carries its unit
in the name (``_hz``, ``_k``, ``_s``, ``_f``, ``_m``); rates given in Hz
are cyclic frequencies and are converted to angular rates where the model
needs them.  ``--set key=value`` overrides are applied after the file and
coerced the same way.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .constants import TWO_PI
from .device import (
    CavityGeometry,
    CoherenceRecord,
    DeviceParams,
    DissipationSource,
)
from .engine import HilbertConfig
from .errors import ConfigError

PROTOCOLS = ("t1", "ramsey")

REQUIRED = object()

#: key -> (python type, default or REQUIRED-when-section-used, help)
SCHEMA: dict[str, tuple[type, Any, str]] = {
    "device.f_qubit_hz": (float, REQUIRED, "qubit transition frequency"),
    "device.f_cavity_hz": (float, REQUIRED, "cavity resonance frequency"),
    "device.g_hz": (float, 0.0, "qubit-cavity coupling g/2pi"),
    "device.q_total": (float, REQUIRED, "loaded cavity quality factor"),
    "device.kappa_ext_hz": (float, None, "externally coupled part of the cavity linewidth"),
    "device.kappa_int_hz": (float, None, "internally dissipated part of the cavity linewidth"),
    "device.coupling_ratio": (float, None, "external fraction of the linewidth (default: from kappa_ext/kappa_int, else 1)"),
    "device.c_sigma_f": (float, None, "total transmon shunt capacitance"),
    "device.e_j_hz": (float, None, "Josephson energy E_J/h"),
    "device.chi_hz": (float, None, "measured dispersive shift chi/2pi (overrides derivation)"),
    "device.t1_intrinsic_s": (float, None, "intrinsic qubit relaxation time"),
    "device.tphi_intrinsic_s": (float, None, "intrinsic pure-dephasing time"),
    "device.f_occupation_hz": (float, None, "frequency at which bath occupations are evaluated (default: cavity)"),
    "coherence.t1_s": (float, None, "measured relaxation time"),
    "coherence.t2_star_s": (float, None, "measured Ramsey coherence time"),
    "geometry.a_m": (float, REQUIRED, "cavity interior width"),
    "geometry.b_m": (float, REQUIRED, "cavity interior height"),
    "geometry.d_m": (float, REQUIRED, "cavity interior length"),
    "geometry.max_index": (int, 9, "largest mode index scanned for center-coupled modes"),
    "hilbert.fock_cutoff": (int, None, "photon-number truncation (default: automatic)"),
    "experiment.protocol": (str, REQUIRED, "t1 or ramsey"),
    "experiment.t_final_s": (float, REQUIRED, "duration of the simulated record"),
    "experiment.samples": (int, 400, "number of evenly spaced samples"),
    "experiment.detuning_hz": (float, 0.0, "deliberate Ramsey detuning"),
    "experiment.fit_start_factor": (float, 5.0, "Ramsey fit window starts at this many 1/kappa_tot"),
    "experiment.noise_sigma": (float, 0.0, "additive Gaussian noise level"),
    "experiment.seed": (int, 0, "noise generator seed"),
    "integrator.rel_tol": (float, 1e-8, "relative tolerance of the time stepper"),
    "integrator.abs_tol": (float, 1e-10, "absolute tolerance of the time stepper"),
    "analytics.small_chi_variant": (str, "normalized", "small-shift formula variant: normalized or unnormalized"),
    "analytics.compare_small_chi": (bool, False, "also report the other small-shift variant in predictions"),
    "sweep.parameter": (str, REQUIRED, "dotted key of the swept float parameter"),
    "sweep.values": (list, REQUIRED, "comma-separated values the swept parameter takes"),
    "sweep.target": (str, "predict", "what to run per point: predict or simulate"),
    "verify.chi_over_kappa": (list, None, "override the chi/kappa_tot axis of the check grid"),
    "verify.n_th": (list, None, "override the occupation axis of the check grid"),
}

SOURCE_FIELDS: dict[str, tuple[type, Any, str]] = {
    "kappa_hz": (float, REQUIRED, "channel linewidth kappa/2pi"),
    "temperature_k": (float, REQUIRED, "effective bath temperature"),
    "label": (str, None, "channel name used in reports"),
}

_SOURCE_KEY = re.compile(r"^sources\.(\d+)\.(\w+)$")

_SECTION_REQUIRED = {
    "device": ("device.f_qubit_hz", "device.f_cavity_hz", "device.q_total"),
    "geometry": ("geometry.a_m", "geometry.b_m", "geometry.d_m"),
    "coherence": ("coherence.t1_s", "coherence.t2_star_s"),
    "sweep": ("sweep.parameter", "sweep.values"),
}

_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _schema_entry(key: str) -> tuple[type, Any, str]:
    m = _SOURCE_KEY.match(key)
    if m:
        fld = m.group(2)
        if fld not in SOURCE_FIELDS:
            known = ", ".join(sorted(SOURCE_FIELDS))
            raise ConfigError(f"unknown source field in {key!r}; known: {known}")
        return SOURCE_FIELDS[fld]
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    return SCHEMA[key]


def _coerce(key: str, value: Any) -> Any:
    typ, _, _ = _schema_entry(key)
    if typ is float:
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise ConfigError(f"{key}: expected a number, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{key}: value must be finite, got {value!r}")
        return value
    if typ is int:
        if isinstance(value, str):
            try:
                value = int(value)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if typ is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in _BOOL_WORDS:
            return _BOOL_WORDS[value.lower()]
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    if typ is str:
        if isinstance(value, str):
            return value.strip("\"'")
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    if typ is list:
        if isinstance(value, str):
            value = [p.strip() for p in value.split(",") if p.strip()]
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError(f"{key}: expected a non-empty comma-separated list of numbers")
        out = []
        for v in value:
            try:
                out.append(float(v))
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: list entries must be numbers, got {v!r}") from None
        return out
    raise ConfigError(f"{key}: unsupported schema type {typ!r}")  # pragma: no cover


@dataclass
class RunConfig:
    """Validated flat configuration with schema-typed values."""

    values: dict[str, Any] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        if key in self.values:
            return self.values[key]
        _typ, schema_default, _ = _schema_entry(key)
        if schema_default is REQUIRED or schema_default is None:
            return default
        return schema_default

    def require(self, key: str) -> Any:
        if key in self.values:
            return self.values[key]
        _typ, schema_default, _ = _schema_entry(key)
        if schema_default is not REQUIRED and schema_default is not None:
            return schema_default
        raise ConfigError(f"missing required config key {key!r}")

    def has_section(self, section: str) -> bool:
        prefix = section + "."
        return any(k.startswith(prefix) for k in self.values)

    def with_value(self, key: str, value: Any) -> "RunConfig":
        """A copy with one key replaced (used by sweeps)."""
        merged = dict(self.values)
        merged[key] = _coerce(key, value)
        return RunConfig(values=merged)

    # ---- builders ------------------------------------------------------

    def coupling_ratio(self) -> float:
        ratio = self.get("device.coupling_ratio")
        if ratio is not None:
            return ratio
        k_ext = self.get("device.kappa_ext_hz")
        k_int = self.get("device.kappa_int_hz")
        if k_ext is not None and k_int is not None:
            from .device import coupling_efficiency

            return coupling_efficiency(k_ext, k_int)
        return 1.0

    def device(self) -> DeviceParams:
        self._check_section("device")
        return DeviceParams(
            f_qubit=self.require("device.f_qubit_hz"),
            f_cavity=self.require("device.f_cavity_hz"),
            g_over_2pi=self.get("device.g_hz", 0.0),
            Q_total=self.require("device.q_total"),
            coupling_ratio=self.coupling_ratio(),
            C_sigma=self.get("device.c_sigma_f"),
            E_J_over_h=self.get("device.e_j_hz"),
            chi_over_2pi=self.get("device.chi_hz"),
            T1_intrinsic=self.get("device.t1_intrinsic_s"),
            Tphi_intrinsic=self.get("device.tphi_intrinsic_s"),
        )

    def sources(self) -> list[DissipationSource]:
        indices = sorted(
            {int(m.group(1)) for k in self.values if (m := _SOURCE_KEY.match(k))}
        )
        out = []
        for i in indices:
            prefix = f"sources.{i}."
            for fld, (_typ, default, _help) in SOURCE_FIELDS.items():
                if default is REQUIRED and prefix + fld not in self.values:
                    raise ConfigError(f"source {i}: missing {prefix + fld!r}")
            out.append(
                DissipationSource(
                    kappa=TWO_PI * self.values[prefix + "kappa_hz"],
                    temperature=self.values[prefix + "temperature_k"],
                    label=self.values.get(prefix + "label", f"source{i}"),
                )
            )
        return out

    def geometry(self) -> CavityGeometry | None:
        if not self.has_section("geometry"):
            return None
        self._check_section("geometry")
        return CavityGeometry(
            a=self.require("geometry.a_m"),
            b=self.require("geometry.b_m"),
            d=self.require("geometry.d_m"),
        )

    def coherence(self) -> CoherenceRecord | None:
        if not self.has_section("coherence"):
            return None
        self._check_section("coherence")
        return CoherenceRecord(
            T1=self.require("coherence.t1_s"),
            T2_star=self.require("coherence.t2_star_s"),
        )

    def hilbert(self) -> HilbertConfig | None:
        cutoff = self.get("hilbert.fock_cutoff")
        return None if cutoff is None else HilbertConfig(fock_cutoff=cutoff)

    def _check_section(self, section: str) -> None:
        missing = [
            k for k in _SECTION_REQUIRED.get(section, ()) if k not in self.values
        ]
        if missing:
            raise ConfigError(
                f"section {section!r} is incomplete: missing {', '.join(missing)}"
            )

    # ---- reporting -----------------------------------------------------

    def resolved_items(self) -> Iterator[tuple[str, Any]]:
        """Provided keys plus applicable defaults, in schema order.

        Defaults are materialized for every section the config touches, so
        the echoed header of an output file pins down the full run recipe.
        """
        sections = {k.split(".", 1)[0] for k in self.values}
        for key, (_typ, default, _help) in SCHEMA.items():
            if key.split(".", 1)[0] not in sections:
                continue
            if key in self.values:
                yield key, self.values[key]
            elif default is not REQUIRED and default is not None:
                yield key, default
        source_keys = sorted(
            (k for k in self.values if _SOURCE_KEY.match(k)),
            key=lambda k: (int(_SOURCE_KEY.match(k).group(1)), k),
        )
        for key in source_keys:
            yield key, self.values[key]


def parse_config(
    path: str | Path | None = None,
    overrides: Iterable[str] = (),
) -> RunConfig:
    """Load one flat key=value config file, apply overrides, type-check.

    ``overrides`` are ``key=value`` strings (the CLI's ``--set``); they are
    applied after the file and coerced to the key's schema type.
    """
    flat: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {p}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config file {p}: {exc}") from None
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key or " " in key:
                raise ConfigError(f"{p}:{lineno}: expected 'key = value', got {line!r}")
            if key in flat:
                raise ConfigError(f"{p}:{lineno}: duplicate key {key!r}")
            flat[key] = value
    for item in overrides:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        flat[key] = value.strip()
    values = {key: _coerce(key, value) for key, value in flat.items()}
    protocol = values.get("experiment.protocol")
    if protocol is not None and protocol not in PROTOCOLS:
        raise ConfigError(
            f"experiment.protocol must be one of {PROTOCOLS}, got {protocol!r}"
        )
    variant = values.get("analytics.small_chi_variant")
    if variant is not None and variant not in ("normalized", "unnormalized"):
        raise ConfigError(
            "analytics.small_chi_variant must be 'normalized' or 'unnormalized', "
            f"got {variant!r}"
        )
    target = values.get("sweep.target")
    if target is not None and target not in ("predict", "simulate"):
        raise ConfigError(f"sweep.target must be 'predict' or 'simulate', got {target!r}")
    return RunConfig(values=values)


def describe_schema() -> str:
    """Markdown description of every config key (the shipped schema document)."""
    lines = [
        "# Configuration schema",
        "",
        "One `key = value` per line; `#` starts a comment.  Keys are dotted and",
        "flat.  Unit suffixes are part of the key name and are mandatory:",
        "`_hz` hertz (cyclic), `_k` kelvin, `_s` seconds, `_f` farads, `_m` meters.",
        "",
        "| key | type | default | meaning |",
        "|---|---|---|---|",
    ]

    def _row(key, typ, default, help_text):
        if default is REQUIRED:
            shown = "required"
        elif default is None:
            shown = "—"
        else:
            shown = f"`{default}`"
        return f"| `{key}` | {typ.__name__} | {shown} | {help_text} |"

    for key, (typ, default, help_text) in SCHEMA.items():
        lines.append(_row(key, typ, default, help_text))
    lines += [
        "",
        "Dissipation sources are indexed (`sources.0.*`, `sources.1.*`, ...):",
        "",
        "| key | type | default | meaning |",
        "|---|---|---|---|",
    ]
    for fld, (typ, default, help_text) in SOURCE_FIELDS.items():
        lines.append(_row(f"sources.<i>.{fld}", typ, default, help_text))
    lines.append("")
    return "\n".join(lines)
