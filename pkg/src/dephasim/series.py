"""Sampled time-series container shared by the engine and experiment layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Real-valued samples of one or more observables on a common time grid.

    Attributes
    ----------
    times : ndarray, shape (nt,)
        Strictly increasing sample times [s].
    values : ndarray, shape (nt, ncols)
        One column per observable.
    labels : tuple of str
        Column names, same length as ``values`` has columns.
    meta : dict
        Free-form provenance: solver diagnostics, protocol parameters, the
        noise seed (None for deterministic runs), fit-window settings, ...
    """

    times: np.ndarray
    values: np.ndarray
    labels: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", tuple(self.labels))
        if t.ndim != 1 or t.size < 2:
            raise InvalidParameterError("times must be a 1-D array with >= 2 samples")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise InvalidParameterError("times and values must be finite")
        if np.any(np.diff(t) <= 0.0):
            raise InvalidParameterError("times must be strictly increasing")
        if v.shape[0] != t.size:
            raise InvalidParameterError(
                f"values rows ({v.shape[0]}) must match times ({t.size})"
            )
        if v.shape[1] != len(self.labels):
            raise InvalidParameterError(
                f"got {len(self.labels)} labels for {v.shape[1]} columns"
            )

    def column(self, label: str) -> np.ndarray:
        """Samples of the observable named ``label``."""
        try:
            j = self.labels.index(label)
        except ValueError:
            raise InvalidParameterError(
                f"no column {label!r}; have {self.labels}"
            ) from None
        return self.values[:, j]
