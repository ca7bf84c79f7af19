"""Command-line surface.

Subcommands: ``derive`` (scalar device quantities), ``predict`` (closed-form
dephasing rates), ``simulate`` (one master-equation protocol plus fit),
``sweep`` (one parameter axis), ``verify`` (the built-in check suite).

Exit codes are a stable contract: 0 success, 1 verification failure,
2 invalid configuration, 3 numerical failure, 4 fit failure.  All delimited
outputs embed the resolved configuration; figures are rendered next to them
unless ``--no-figures`` is given.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

from . import __version__
from .analytics import DephasingInput, make_prediction, predict_t2
from .config import RunConfig, _schema_entry, parse_config
from .constants import TWO_PI
from .device import (
    coupling_efficiency,
    derived_chi_over_2pi,
    e_c_over_h,
    effective_chi_over_2pi,
    kappa_from_q,
    modes_coupled_at_center,
    pure_dephasing_rate,
    purcell_t1,
    quality_factors,
    rectangular_mode_freq,
    thermal_occupation,
    transmon_f01,
)
from .errors import (
    ConfigError,
    FitFailureError,
    InvalidParameterError,
    NumericalFailureError,
)
from .experiments import fit_coherence_series, simulate_ramsey, simulate_t1
from .report import render_summary, write_summary, write_table, write_timeseries
from .verification import run_all_checks

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_FIT = 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value config file")
    common.add_argument(
        "--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
        help="override one config key (repeatable)",
    )
    common.add_argument(
        "--out", metavar="DIR", default=".", help="output directory (default: .)"
    )
    common.add_argument(
        "--jobs", type=int, default=1, metavar="N",
        help="concurrent worker processes for sweeps and the verify grid",
    )
    common.add_argument(
        "--format", choices=("csv", "json-summary"), default="csv",
        help="stdout rendering: human-readable text (csv files are always "
        "written) or the summary document itself",
    )
    common.add_argument(
        "--no-figures", action="store_true", help="skip rendering .png figures"
    )

    parser = argparse.ArgumentParser(
        prog="dephasim",
        description="Thermal-photon dephasing of a dispersively coupled qubit: "
        "device math, Lindblad simulation, and coherence fitting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("derive", parents=[common], help="derived device quantities")
    sub.add_parser("predict", parents=[common], help="closed-form dephasing rates")
    sub.add_parser("simulate", parents=[common], help="run one protocol and fit it")
    sub.add_parser("sweep", parents=[common], help="repeat predict/simulate along one axis")
    sub.add_parser("verify", parents=[common], help="run the built-in check suite")
    return parser


def _emit(out_dir: Path, fmt: str, summary: dict[str, Any]) -> None:
    path = write_summary(out_dir / "summary.json", summary)
    if fmt == "json-summary":
        sys.stdout.write(path.read_text())
    else:
        sys.stdout.write(render_summary(summary))


def _inputs_section(cfg: RunConfig) -> dict[str, Any]:
    return dict(cfg.resolved_items())


def cmd_derive(cfg: RunConfig, out_dir: Path, fmt: str, figures: bool) -> int:
    device = cfg.device()
    sources = cfg.sources()
    geometry = cfg.geometry()
    coherence = cfg.coherence()
    f_occ = cfg.get("device.f_occupation_hz", device.f_cavity)

    derived: dict[str, Any] = {}
    rows: list[dict[str, Any]] = []

    def add(name: str, value: Any, unit: str) -> None:
        derived[name] = value
        rows.append({"quantity": name, "value": value, "unit": unit})

    add("delta_hz", device.delta_over_2pi, "Hz")
    kappa = kappa_from_q(device.f_cavity, device.Q_total)
    add("kappa_hz", kappa / TWO_PI, "Hz")
    e_c = e_c_over_h(device)
    if e_c is not None:
        add("e_c_hz", e_c, "Hz")
    if device.E_J_over_h is not None and e_c is not None:
        add("e_j_over_e_c", device.E_J_over_h / e_c, "1")
        add("f01_transmon_hz", transmon_f01(device.E_J_over_h, e_c), "Hz")
    chi_derived = derived_chi_over_2pi(device)
    if chi_derived is not None:
        add("chi_derived_hz", chi_derived, "Hz")
    if device.chi_over_2pi is not None:
        add("chi_supplied_hz", device.chi_over_2pi, "Hz")
    if chi_derived is not None or device.chi_over_2pi is not None:
        add("chi_effective_hz", effective_chi_over_2pi(device), "Hz")
    for src in sources:
        n = thermal_occupation(f_occ, src.temperature)
        add(f"n_th_{src.label}", n, "1")
    if device.g_over_2pi > 0.0:
        add(
            "purcell_t1_s",
            purcell_t1(TWO_PI * device.g_over_2pi, TWO_PI * device.delta_over_2pi, kappa),
            "s",
        )
    add("coupling_efficiency", device.coupling_ratio, "1")
    if coherence is not None:
        q1, q2 = quality_factors(device.f_qubit, coherence.T1, coherence.T2_star)
        add("q1", q1, "1")
        add("q2", q2, "1")
        add("gamma_phi_record_per_s", pure_dephasing_rate(coherence.T1, coherence.T2_star), "1/s")
    if geometry is not None:
        max_index = cfg.get("geometry.max_index")
        modes = modes_coupled_at_center(geometry, max_index)
        for rank, idx in enumerate(modes[:2], start=1):
            m, n, l = idx
            add(f"mode_{rank}_indices", f"{m}{n}{l}", "1")
            add(f"mode_{rank}_hz", rectangular_mode_freq(geometry, m, n, l), "Hz")

    header = list(cfg.resolved_items())
    write_table(out_dir / "derived.csv", ("quantity", "value", "unit"), rows, header)
    if geometry is not None and figures:
        from .plots import plot_modes

        plot_modes(geometry, cfg.get("geometry.max_index"), out_dir / "modes.png",
                   f_qubit=device.f_qubit)
    _emit(out_dir, fmt, {"inputs": _inputs_section(cfg), "derived": derived})
    return EXIT_OK


def _prediction_section(cfg: RunConfig) -> dict[str, Any]:
    device = cfg.device()
    sources = cfg.sources()
    if not sources:
        raise ConfigError("predict needs at least one dissipation source")
    inp = DephasingInput.from_device(
        device, sources, cfg.get("device.f_occupation_hz")
    )
    variant = cfg.get("analytics.small_chi_variant")
    pred = make_prediction(inp, small_chi_variant=variant)
    section: dict[str, Any] = {
        "chi_hz": inp.chi / TWO_PI,
        "kappa_tot_hz": inp.kappa_tot / TWO_PI,
        "excitation_flux_per_s": inp.excitation_flux,
        "gamma_exact_per_s": pred.gamma_exact,
        f"gamma_small_chi_{variant}_per_s": pred.gamma_small_chi,
        "gamma_saturation_per_s": pred.gamma_saturation,
        "regime": pred.regime,
    }
    if cfg.get("analytics.compare_small_chi"):
        other = "unnormalized" if variant == "normalized" else "normalized"
        from .analytics import gamma_thermal_small_chi

        section[f"gamma_small_chi_{other}_per_s"] = gamma_thermal_small_chi(
            inp, variant=other
        )
    gamma_phi = pred.gamma_exact
    if device.Tphi_intrinsic is not None:
        section["gamma_phi_intrinsic_per_s"] = 1.0 / device.Tphi_intrinsic
        gamma_phi += 1.0 / device.Tphi_intrinsic
    section["gamma_phi_total_per_s"] = gamma_phi
    if device.T1_intrinsic is not None:
        section["t2_predicted_s"] = predict_t2(device.T1_intrinsic, gamma_phi)
    return section


def cmd_predict(cfg: RunConfig, out_dir: Path, fmt: str, figures: bool) -> int:
    section = _prediction_section(cfg)
    rows = [
        {"quantity": k, "value": v}
        for k, v in section.items()
    ]
    write_table(
        out_dir / "prediction.csv", ("quantity", "value"), rows, cfg.resolved_items()
    )
    _emit(out_dir, fmt, {"inputs": _inputs_section(cfg), "prediction": section})
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out_dir: Path, fmt: str, figures: bool) -> int:
    device = cfg.device()
    sources = cfg.sources()
    protocol = cfg.require("experiment.protocol")
    t_final = cfg.require("experiment.t_final_s")
    samples = cfg.get("experiment.samples")
    kwargs = dict(
        hilbert=cfg.hilbert(),
        f_occupation=cfg.get("device.f_occupation_hz"),
        rel_tol=cfg.get("integrator.rel_tol"),
        abs_tol=cfg.get("integrator.abs_tol"),
    )
    if protocol == "t1":
        series = simulate_t1(device, sources, t_final, samples, **kwargs)
    else:
        series = simulate_ramsey(
            device, sources, cfg.get("experiment.detuning_hz"), t_final, samples,
            **kwargs,
        )
    sigma = cfg.get("experiment.noise_sigma")
    if sigma > 0.0:
        from .experiments import add_noise

        series = add_noise(series, sigma, cfg.get("experiment.seed"))

    header = list(cfg.resolved_items())
    write_timeseries(out_dir / "timeseries.csv", series, header)

    summary: dict[str, Any] = {"inputs": _inputs_section(cfg)}
    prediction: dict[str, Any] = {}
    expected_rate = None
    if sources:
        inp = DephasingInput.from_device(
            device, sources, cfg.get("device.f_occupation_hz")
        )
        pred = make_prediction(inp, small_chi_variant=cfg.get("analytics.small_chi_variant"))
        prediction = {
            "gamma_exact_per_s": pred.gamma_exact,
            "regime": pred.regime,
        }
    if protocol == "t1":
        expected_rate = 1.0 / device.T1_intrinsic
        prediction["decay_rate_per_s"] = expected_rate
    else:
        gamma_phi = prediction.get("gamma_exact_per_s", 0.0)
        if device.Tphi_intrinsic is not None:
            gamma_phi += 1.0 / device.Tphi_intrinsic
        expected_rate = gamma_phi
        if device.T1_intrinsic is not None:
            expected_rate += 0.5 / device.T1_intrinsic
        prediction["decay_rate_per_s"] = expected_rate
    summary["prediction"] = prediction

    fit_start = None
    if protocol == "ramsey":
        kappa_tot = sum(s.kappa for s in sources)
        if kappa_tot > 0.0:
            fit_start = cfg.get("experiment.fit_start_factor") / kappa_tot
    rc = EXIT_OK
    fit = None
    try:
        fit = fit_coherence_series(
            series, fit_start_factor=cfg.get("experiment.fit_start_factor")
        )
        fit_section: dict[str, Any] = {
            "model": fit.model,
            "converged": fit.converged,
            "residual_rms": fit.residual_rms,
            **{k: v for k, v in fit.params.items()},
        }
        if fit.covariance_diag is not None:
            fit_section["variance"] = dict(fit.covariance_diag)
        if fit.detail:
            fit_section["detail"] = fit.detail
        rate_fit = (
            1.0 / fit.params["decay_time"] if fit.params.get("decay_time") else None
        )
        if rate_fit is not None:
            fit_section["decay_rate_per_s"] = rate_fit
            if expected_rate:
                fit_section["discrepancy_pct"] = (
                    100.0 * abs(rate_fit - expected_rate) / expected_rate
                )
    except FitFailureError as exc:
        fit_section = {"model": protocol, "converged": False, "detail": str(exc)}
        rc = EXIT_FIT
    summary["fit"] = fit_section

    if figures:
        from .plots import plot_timeseries

        plot_timeseries(series, out_dir / "timeseries.png", fit=fit, fit_start=fit_start)
    _emit(out_dir, fmt, summary)
    return rc


def _sweep_worker(payload: tuple[dict, str, float, str]) -> dict[str, Any]:
    values, parameter, value, target = payload
    cfg = RunConfig(values=values).with_value(parameter, value)
    row: dict[str, Any] = {parameter: value}
    if target == "predict":
        section = _prediction_section(cfg)
        for key in (
            "gamma_exact_per_s",
            "gamma_saturation_per_s",
            "regime",
            "t2_predicted_s",
        ):
            if key in section:
                row[key] = section[key]
        small_chi = [k for k in section if k.startswith("gamma_small_chi_")]
        for key in small_chi:
            row[key] = section[key]
        return row
    from .experiments import extract_coherence

    fit, pred = extract_coherence(
        cfg.device(),
        cfg.sources(),
        cfg.require("experiment.protocol"),
        cfg.require("experiment.t_final_s"),
        cfg.get("experiment.samples"),
        detuning=cfg.get("experiment.detuning_hz"),
        hilbert=cfg.hilbert(),
        f_occupation=cfg.get("device.f_occupation_hz"),
        fit_start_factor=cfg.get("experiment.fit_start_factor"),
        rel_tol=cfg.get("integrator.rel_tol"),
        abs_tol=cfg.get("integrator.abs_tol"),
    )
    gamma_fit = math.nan
    if fit.converged and fit.params.get("decay_time"):
        gamma_fit = 1.0 / fit.params["decay_time"]
    row.update(
        {
            "gamma_fit_per_s": gamma_fit,
            "gamma_exact_per_s": pred.gamma_exact,
            "rel_deviation": abs(gamma_fit - pred.gamma_exact) / pred.gamma_exact
            if pred.gamma_exact > 0.0 and not math.isnan(gamma_fit)
            else math.nan,
            "converged": fit.converged,
            "detail": fit.detail,
        }
    )
    return row


def cmd_sweep(cfg: RunConfig, out_dir: Path, fmt: str, figures: bool, jobs: int) -> int:
    parameter = cfg.require("sweep.parameter")
    values = cfg.require("sweep.values")
    target = cfg.get("sweep.target")
    typ, _, _ = _schema_entry(parameter)
    if typ is not float:
        raise ConfigError(f"sweep.parameter must name a numeric key, got {parameter!r}")
    payloads = [(cfg.values, parameter, v, target) for v in values]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(payloads))) as pool:
            rows = list(pool.map(_sweep_worker, payloads))
    else:
        rows = [_sweep_worker(p) for p in payloads]

    fieldnames = list(rows[0].keys())
    write_table(out_dir / "sweep.csv", fieldnames, rows, cfg.resolved_items())
    section_name = "prediction" if target == "predict" else "fit"
    _emit(out_dir, fmt, {"inputs": _inputs_section(cfg), section_name: rows})
    if figures:
        from .plots import plot_sweep

        columns = {
            key: [row.get(key, math.nan) for row in rows]
            for key in fieldnames
            if key.startswith("gamma_") and key != "gamma_saturation_per_s"
        }
        if columns:
            plot_sweep(parameter, values, columns, out_dir / "sweep.png")
    if target == "simulate" and any(not r["converged"] for r in rows):
        return EXIT_FIT
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out_dir: Path, fmt: str, figures: bool, jobs: int) -> int:
    checks = run_all_checks(
        jobs=jobs,
        chi_ratios=cfg.get("verify.chi_over_kappa"),
        n_ths=cfg.get("verify.n_th"),
    )
    rows = [
        {
            "check": c.name,
            "status": c.status,
            "measured": c.measured,
            "bound": c.bound,
            "comparison": c.comparison,
            "detail": c.detail,
        }
        for c in checks
    ]
    write_table(
        out_dir / "checks.csv",
        ("check", "status", "measured", "bound", "comparison", "detail"),
        rows,
        cfg.resolved_items(),
    )
    summary = {"inputs": _inputs_section(cfg), "checks": rows}
    write_summary(out_dir / "summary.json", summary)
    if fmt == "json-summary":
        sys.stdout.write((out_dir / "summary.json").read_text())
    else:
        width = max(len(c.name) for c in checks)
        for c in checks:
            line = (
                f"{c.status.upper():<4}  {c.name:<{width}}  "
                f"{c.measured:.3e} {c.comparison} {c.bound:.3e}  {c.detail}"
            )
            sys.stdout.write(line.rstrip() + "\n")
    failed = [c for c in checks if c.status == "fail"]
    sys.stdout.write(
        f"\n{len(checks) - len(failed)}/{len(checks)} checks passed"
        + (f" ({len(failed)} FAILED)" if failed else "")
        + "\n"
    )
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, args.overrides)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        figures = not args.no_figures
        if args.command == "derive":
            return cmd_derive(cfg, out_dir, args.format, figures)
        if args.command == "predict":
            return cmd_predict(cfg, out_dir, args.format, figures)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir, args.format, figures)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir, args.format, figures, args.jobs)
        if args.command == "verify":
            return cmd_verify(cfg, out_dir, args.format, figures, args.jobs)
        parser.error(f"unknown command {args.command!r}")  # pragma: no cover
    except (ConfigError, InvalidParameterError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except NumericalFailureError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FitFailureError as exc:
        print(f"error: fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK  # pragma: no cover


def entry() -> None:
    sys.exit(main())
