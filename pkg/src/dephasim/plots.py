"""Figure rendering for the report path.

Figures are a convenience layer on top of the delimited outputs (which
remain the machine contract): a quick look at a simulated record with its
fit overlaid, a sweep trend, or the cavity mode ladder.  The Agg backend
is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first
import numpy as np  # noqa: E402

from .device import CavityGeometry, modes_coupled_at_center, rectangular_mode_freq
from .experiments import FitResult, decaying_cosine_model, exponential_model
from .series import TimeSeries

_DPI = 150


def _time_axis(times: np.ndarray) -> tuple[np.ndarray, str]:
    span = float(times[-1])
    for scale, unit in ((1.0, "s"), (1e3, "ms"), (1e6, "us"), (1e9, "ns")):
        if span * scale >= 1.0:
            return times * scale, unit
    return times * 1e9, "ns"


def plot_timeseries(
    series: TimeSeries,
    path: str | Path,
    fit: FitResult | None = None,
    fit_start: float | None = None,
) -> Path:
    """Data columns as points, the fitted model (if converged) as a line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    t_scaled, unit = _time_axis(series.times)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i, label in enumerate(series.labels):
        ax.plot(t_scaled, series.values[:, i], ".", ms=3, label=label)
    if fit is not None and fit.converged and fit.params:
        model = exponential_model if fit.model == "exponential" else decaying_cosine_model
        t_dense = np.linspace(series.times[0], series.times[-1], 1200)
        if fit_start is not None:
            t_dense = t_dense[t_dense >= fit_start]
        scale = t_scaled[-1] / series.times[-1] if series.times[-1] else 1.0
        ax.plot(t_dense * scale, model(t_dense, fit.params), "k--", lw=1.2, label="fit")
    if fit_start is not None and fit_start > series.times[0]:
        scale = t_scaled[-1] / series.times[-1] if series.times[-1] else 1.0
        ax.axvline(fit_start * scale, color="0.6", lw=0.8, ls=":")
    protocol = series.meta.get("protocol", "")
    ax.set_xlabel(f"time ({unit})")
    ax.set_ylabel("observable")
    ax.set_title(f"{protocol} record".strip())
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_sweep(
    parameter: str,
    values: Sequence[float],
    columns: Mapping[str, Sequence[float]],
    path: str | Path,
) -> Path:
    """Sweep trends; axes go logarithmic when the data allow it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    finite_positive = True
    for label, col in columns.items():
        y = np.asarray(col, dtype=float)
        ax.plot(x, y, "o-", ms=4, label=label)
        good = y[np.isfinite(y)]
        finite_positive &= bool(good.size) and bool(np.all(good > 0.0))
    if np.all(x > 0.0) and x.max() / max(x.min(), 1e-300) > 30.0:
        ax.set_xscale("log")
    if finite_positive:
        ax.set_yscale("log")
    ax.set_xlabel(parameter)
    ax.set_ylabel("rate (1/s)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_modes(
    geom: CavityGeometry,
    max_index: int,
    path: str | Path,
    f_qubit: float | None = None,
) -> Path:
    """The cavity mode ladder, center-coupled modes highlighted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coupled = set(modes_coupled_at_center(geom, max_index))
    rng = range(max_index + 1)
    seen = set()
    freqs, flags = [], []
    for m in rng:
        for n in rng:
            for l in rng:
                idx = (m, n, l)
                if sum(1 for i in idx if i == 0) > 1 or idx in seen:
                    continue
                seen.add(idx)
                freqs.append(rectangular_mode_freq(geom, m, n, l) / 1e9)
                flags.append(idx in coupled)
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    other = [f for f, c in zip(freqs, flags) if not c]
    strong = [f for f, c in zip(freqs, flags) if c]
    ax.vlines(other, 0.0, 0.6, color="0.75", lw=1.0, label="uncoupled at center")
    ax.vlines(strong, 0.0, 1.0, color="C0", lw=1.6, label="antinode at center")
    if f_qubit is not None:
        ax.axvline(f_qubit / 1e9, color="C3", lw=1.2, ls="--", label="qubit")
    ax.set_xlabel("frequency (GHz)")
    ax.set_yticks([])
    ax.set_xlim(0.0, max(freqs) * 1.05)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
