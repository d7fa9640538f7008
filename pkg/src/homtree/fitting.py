"""Power-law decay fits in log-log coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import FitError

MIN_POINTS = 8
MIN_DECADES = 1.0


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit ``log y = intercept + slope log t``."""

    slope: float
    intercept: float
    stderr: float
    ci: tuple
    n_points: int
    decades: float

    def predict(self, t):
        return np.exp(self.intercept) * np.asarray(t, dtype=float) ** self.slope

    def within(self, lo, hi):
        return lo <= self.slope <= hi


def fit_decay(t, y, min_points=MIN_POINTS, min_decades=MIN_DECADES, level=0.95):
    """Fit a power law to positive samples y(t).

    Raises :class:`FitError` for fewer than ``min_points`` samples, a time
    span under ``min_decades`` decades, or nonpositive values.
    """
    t = np.asarray(t, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if t.shape != y.shape:
        raise FitError("t and y must have the same length")
    if t.size < min_points:
        raise FitError(f"decay fit needs at least {min_points} points, got {t.size}")
    if np.any(t <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise FitError("decay fit needs positive times and positive finite values")
    decades = math.log10(t.max() / t.min())
    if decades < min_decades:
        raise FitError(f"time grid spans {decades:.2f} decades, need at least {min_decades}")
    res = stats.linregress(np.log(t), np.log(y))
    q = stats.t.ppf(0.5 + level / 2.0, t.size - 2)
    ci = (res.slope - q * res.stderr, res.slope + q * res.stderr)
    return DecayFit(float(res.slope), float(res.intercept), float(res.stderr), ci, int(t.size), decades)


def window_envelope(func, t, period, samples=64):
    """max of |func| over [t_i, t_i + period] for each t_i.

    Oscillating decays such as Bessel functions cross zero, so a fit to raw
    samples depends on where they land; the running maximum over one period
    tracks the amplitude instead.
    """
    out = np.empty(len(t))
    for i, ti in enumerate(np.asarray(t, dtype=float)):
        s = np.linspace(ti, ti + period, samples)
        out[i] = np.max(np.abs(func(s)))
    return out
