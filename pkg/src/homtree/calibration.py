"""Calibrated constants for the "less than or equal up to a constant" estimates.

Each constant is the maximum observed ratio on a fixed, declared sample
set.  Tests then assert the bound at fresh points.  The stored values ship
in ``data/calibration.json`` and :func:`verify_calibration` recomputes them.
"""
from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from .kernel import bessel_oscillatory_J, kernel_lq_norm, kernel_pointwise_report, schrodinger_kernel
from .spectral import gamma0
from .tree import RadialFunction, kunze_stein_probe

CALIBRATION_SETS = {
    "pointwise": {"Q": 2, "t": [0.3, 1, 2, 5, 10, 50, 200], "n_max": 40},
    "small_time": {"Q": [2, 3], "q": [4, "inf"], "t": np.linspace(-0.95, 0.95, 39).round(6).tolist()},
    "bessel_J": {"c_Q": 2, "m_max": 50, "t_min": 1.0, "t_max": 200.0, "t_points": 20000},
    "kunze_stein": {"q": 4, "r": 3, "trials": 20, "seed": 0, "Q": 2, "f1_radius": 2, "f2_radius": 2},
    "scattering": {"Q": 2, "gamma": 3, "lam": 1.0, "amplitude": 0.1, "T": 100, "dt": 1e-3},
}


def _q(v):
    return math.inf if v == "inf" else float(v)


def pointwise_constant(cfg=None):
    cfg = CALIBRATION_SETS["pointwise"] if cfg is None else cfg
    best = 0.0
    for t in cfg["t"]:
        s = schrodinger_kernel(cfg["Q"], t, n_max=max(cfg["n_max"], 0))
        best = max(best, kernel_pointwise_report(s, cfg["n_max"]).max_ratio)
    return best


def small_time_constant(cfg=None):
    cfg = CALIBRATION_SETS["small_time"] if cfg is None else cfg
    best = 0.0
    for Q in cfg["Q"]:
        for t in cfg["t"]:
            s = schrodinger_kernel(Q, t)
            for q in cfg["q"]:
                best = max(best, kernel_lq_norm(s, _q(q)))
    return best


def bessel_J_constant(cfg=None):
    """max |J(t, m)| |t|^{1/2} / (1 + m) over the declared grid (c = gamma(0))."""
    cfg = CALIBRATION_SETS["bessel_J"] if cfg is None else cfg
    c = gamma0(cfg["c_Q"])
    m = np.arange(cfg["m_max"] + 1)
    # dense grid: the sup sits on oscillation peaks
    t = np.linspace(cfg["t_min"], cfg["t_max"], cfg["t_points"])
    J = np.abs(bessel_oscillatory_J(t[:, None], m[None, :], c))
    return float(np.max(J * np.sqrt(t)[:, None] / (1 + m)))


def kunze_stein_constant(cfg=None):
    cfg = CALIBRATION_SETS["kunze_stein"] if cfg is None else cfg
    rep = kunze_stein_probe(cfg["q"], cfg["r"], cfg["trials"], cfg["seed"], cfg["Q"], cfg["f1_radius"], cfg["f2_radius"])
    return rep.sup_ratio


def scattering_constant_calibration(cfg=None):
    from .analysis import scattering_constant, scattering_probe
    from .nls import EvolutionConfig, NonlinearitySpec, nls_evolve

    cfg = CALIBRATION_SETS["scattering"] if cfg is None else cfg
    f = RadialFunction.delta(cfg["Q"], 0, 0, cfg["amplitude"])
    spec = NonlinearitySpec(cfg["gamma"], cfg["lam"])
    traj = nls_evolve(f, spec, EvolutionConfig(dt=cfg["dt"], T=cfg["T"], stride=int(round(0.1 / cfg["dt"]))))
    ratios = scattering_constant(traj, scattering_probe(traj))
    return max(ratios.values())


CALIBRATORS = {
    "pointwise_C_star": pointwise_constant,
    "small_time_norm": small_time_constant,
    "bessel_J_C": bessel_J_constant,
    "kunze_stein": kunze_stein_constant,
    "scattering_K": scattering_constant_calibration,
}


def compute_calibration(names=None):
    names = list(CALIBRATORS) if names is None else names
    return {k: float(CALIBRATORS[k]()) for k in names}


def load_calibration():
    text = resources.files("homtree").joinpath("data/calibration.json").read_text(encoding="utf-8")
    return json.loads(text)["constants"]


def constant(name):
    return load_calibration()[name]


def verify_calibration(names=None, rtol=1e-9):
    """Recompute constants; returns {name: (stored, fresh, ok)}."""
    stored = load_calibration()
    fresh = compute_calibration(names)
    return {k: (stored[k], v, abs(v - stored[k]) <= rtol * max(abs(stored[k]), 1e-300)) for k, v in fresh.items()}


def write_calibration(path):
    payload = {"sets": CALIBRATION_SETS, "constants": compute_calibration()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload
