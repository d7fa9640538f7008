"""Fast invariant suite behind ``homtree selftest``.

Each check returns its measured error and tolerance.  ``fault="plancherel"``
perturbs the inversion constant by 1% so the suite can be shown to catch it.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

FAULT_SCALE = {"plancherel": 1.01}


def _rel_l2(a, b):
    from .tree import lp_norm

    return lp_norm(a - b, 2) / lp_norm(b, 2)


def check_factorization(rng, scale):
    from .spectral import SpectralGrid, abel_transform, fourier_Z, spherical_transform
    from .tree import RadialFunction

    err = 0.0
    for Q in (2, 3):
        for _ in range(10):
            N = int(rng.integers(0, 26))
            f = RadialFunction(Q, rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1))
            g = SpectralGrid(Q, N + 1)
            H = spherical_transform(f, g).values
            FA = fourier_Z(abel_transform(f), g).values
            err = max(err, np.abs(H - FA).max() / np.abs(H).max())
    return err, 1e-10


def check_normalization(rng, scale):
    from .spectral import normalization_audit

    audit = normalization_audit(constant_scale=scale)
    return max(abs(r - 1.0) for r in audit.ratios.values()), 1e-12


def check_plancherel_roundtrip(rng, scale):
    from .spectral import (
        SpectralGrid,
        density_required_nodes,
        inverse_spherical,
        plancherel_constant,
        plancherel_norm_sq,
        spherical_transform,
    )
    from .tree import RadialFunction, lp_norm

    err = 0.0
    for Q in (2, 3, 5):
        N = 12
        f = RadialFunction(Q, rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1))
        g = SpectralGrid(Q, density_required_nodes(Q, N), plancherel_constant(Q) * scale)
        F = spherical_transform(f, g)
        err = max(err, _rel_l2(inverse_spherical(F, N, "density"), f))
        err = max(err, abs(plancherel_norm_sq(F) / lp_norm(f, 2) ** 2 - 1.0))
    return err, 1e-10


def check_kernel_spectral(rng, scale):
    from .kernel import schrodinger_kernel
    from .spectral import SpectralGrid, gamma_eig, spherical_transform

    err = 0.0
    for t in (0.5, 5.0):
        s = schrodinger_kernel(2, t)
        g = SpectralGrid(2, 200)
        H = spherical_transform(s.values, g).values
        err = max(err, np.abs(H - np.exp(1j * t * (1 - gamma_eig(2, g.lam)))).max())
    return err, 1e-8


def check_kernel_routes(rng, scale):
    from .kernel import schrodinger_kernel

    err = 0.0
    for Q in (2, 3):
        for t in (0.5, 5.0, 50.0):
            a = schrodinger_kernel(Q, t, n_max=40).values.values
            b = schrodinger_kernel(Q, t, n_max=40, route="quadrature").values.values
            err = max(err, np.abs(a - b).max())
    return err, 1e-9


def check_bessel_identity(rng, scale):
    from .kernel import bessel_oscillatory_J, oscillatory_J
    from .spectral import gamma0

    m = np.arange(51)
    c = gamma0(2)
    err = 0.0
    for t in (-150.0, -3.0, 0.0, 1.0, 20.0, 200.0 / c):
        err = max(err, np.abs(oscillatory_J(t, m, c) - bessel_oscillatory_J(t, m, c)).max())
    return err, 1e-10


def check_unitarity(rng, scale):
    from .propagator import propagate_spectral
    from .tree import RadialFunction, lp_norm

    f = RadialFunction(2, rng.standard_normal(6) + 1j * rng.standard_normal(6))
    u = propagate_spectral(f, 3.0)
    err = abs(lp_norm(u, 2) / lp_norm(f, 2) - 1.0)
    v = propagate_spectral(u, 4.0)
    w = propagate_spectral(f, 7.0)
    n = min(v.N, w.N)
    err2 = np.abs(v.values[: n + 1] - w.values[: n + 1]).max()
    return max(err, err2 * 1e-1), 1e-10


def check_convolution_oracle(rng, scale):
    from .tree import RadialFunction, build_truncated_tree, lift, radial_convolve, vertex_convolve

    tree = build_truncated_tree(2, 8)
    err = 0.0
    for _ in range(5):
        f = RadialFunction(2, rng.standard_normal(4) + 1j * rng.standard_normal(4))
        g = RadialFunction(2, rng.standard_normal(4) + 1j * rng.standard_normal(4))
        a = radial_convolve(f, g)
        b = vertex_convolve(lift(f, tree), g).radial_profile()
        n = len(b) - 1
        err = max(err, np.abs(a.values[: n + 1] - b).max())
    return err, 1e-12


def check_energy_oracle(rng, scale):
    from .nls import NonlinearitySpec, energy
    from .tree import RadialFunction

    e = energy(RadialFunction.delta(2, 0, 0), NonlinearitySpec(3, 0.0))
    return abs(e - 1.5), 1e-14


def check_admissible_gate(rng, scale):
    from .analysis import is_admissible

    half = Fraction(1, 2)
    cases = {(0, half): True, (0, 0): False, (half, 0): True, (half, half): False,
             (Fraction(1, 4), Fraction(1, 4)): True, (Fraction(3, 5), Fraction(1, 4)): False,
             (Fraction(1, 4), Fraction(1, 2)): False, (Fraction(1, 1000), Fraction(499, 1000)): True}
    wrong = sum(is_admissible(a, b) != ok for (a, b), ok in cases.items())
    return float(wrong), 0.0


def check_calibration(rng, scale):
    from .calibration import verify_calibration

    res = verify_calibration(["pointwise_C_star", "bessel_J_C", "small_time_norm"])
    return max(abs(new - old) / abs(old) for old, new, _ in res.values()), 1e-9


CHECKS = [
    ("transform_factorization", check_factorization),
    ("normalization_audit", check_normalization),
    ("plancherel_roundtrip", check_plancherel_roundtrip),
    ("kernel_spectral_consistency", check_kernel_spectral),
    ("kernel_route_agreement", check_kernel_routes),
    ("bessel_identity", check_bessel_identity),
    ("unitarity_group_law", check_unitarity),
    ("convolution_oracle", check_convolution_oracle),
    ("energy_vertex_oracle", check_energy_oracle),
    ("admissible_square_gate", check_admissible_gate),
    ("calibration_reproducible", check_calibration),
]


def run_selftest(seed=0, fault=None):
    if fault is not None and fault not in FAULT_SCALE:
        raise ValueError(f"unknown fault {fault!r}")
    scale = FAULT_SCALE.get(fault, 1.0)
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        err, tol = fn(rng, scale)
        err = float(err)
        out.append({"name": name, "error": err, "tolerance": tol, "passed": bool(math.isfinite(err) and err <= tol)})
    return out
