import math

import numpy as np
import pytest
from scipy import integrate, special

from homtree.calibration import constant
from homtree.errors import DivergenceError, DomainError
from homtree.kernel import (
    bessel_J,
    bessel_oscillatory_J,
    kernel_lq_norm,
    kernel_pointwise_report,
    oscillatory_J,
    required_radius,
    rigorous_bound,
    schrodinger_kernel,
    truncation_depth,
)
from homtree.spectral import SpectralGrid, gamma0, gamma_eig, spherical_transform


def test_oscillatory_J_trivial():
    assert oscillatory_J(0.0, 0, 1.0) == pytest.approx(math.pi)
    assert abs(oscillatory_J(0.0, 3, 1.0)) < 1e-14
    assert oscillatory_J(3.0, 2, 1.0) == pytest.approx(-math.pi * special.jv(2, 3.0), abs=1e-13)
    with pytest.raises(DomainError):
        oscillatory_J(1.0, 1, -1.0)


def test_bessel_J_against_integral():
    assert bessel_J(0, 0.0) == 1.0
    assert bessel_J(4, 0.0) == 0.0
    ref, _ = integrate.quad(lambda th: math.cos(th - 2 * math.sin(th)), 0, math.pi, epsabs=1e-14)
    assert bessel_J(1, 2.0) == pytest.approx(ref / math.pi, rel=1e-12)
    with pytest.raises(DomainError):
        bessel_J(-1, 1.0)


def test_bessel_identity_grid():
    c = gamma0(2)
    m = np.arange(51)
    for t in np.linspace(-200 / c, 200 / c, 17):
        assert np.abs(oscillatory_J(t, m, c) - bessel_oscillatory_J(t, m, c)).max() <= 1e-10


def test_bessel_bound_out_of_sample():
    CJ = constant("bessel_J_C")
    c = gamma0(2)
    m = np.arange(51)
    rng = np.random.default_rng(11)
    for t in np.exp(rng.uniform(0, math.log(1000), 50)):
        J = np.abs(bessel_oscillatory_J(t, m, c))
        assert np.all(J <= CJ * t ** -0.5 * (1 + m))


def test_kernel_at_zero_is_delta():
    s = schrodinger_kernel(2, 0.0)
    expect = np.zeros(s.n_max + 1)
    expect[0] = 1
    np.testing.assert_allclose(s.values.values, expect, atol=1e-15)


def test_kernel_metadata():
    s = schrodinger_kernel(3, 2.0, tol=1e-8, route="quadrature")
    assert s.K == truncation_depth(3, 1e-8) == math.ceil(8 * math.log(10) / math.log(3)) + 2
    assert s.route == "quadrature"
    assert s.nodes >= 64
    assert s.truncation_error < 1e-8


@pytest.mark.parametrize("Q", [2, 3])
@pytest.mark.parametrize("t", [0.5, 5.0, 50.0])
def test_route_agreement(Q, t):
    a = schrodinger_kernel(Q, t, n_max=40)
    b = schrodinger_kernel(Q, t, n_max=40, route="quadrature")
    assert np.abs(a.values.values - b.values.values).max() <= 10 * a.tol


@pytest.mark.parametrize("t", [0.5, 1.0, 5.0, 50.0])
def test_spectral_consistency(t):
    s = schrodinger_kernel(2, t)
    g = SpectralGrid(2, 300)
    H = spherical_transform(s.values, g).values
    assert np.abs(H - np.exp(1j * t * (1 - gamma_eig(2, g.lam)))).max() <= 100 * s.tol


def test_time_reversal_and_bounds():
    a = schrodinger_kernel(2, 7.0).values.values
    b = schrodinger_kernel(2, -7.0).values.values
    np.testing.assert_allclose(b, np.conj(a), atol=1e-15)
    assert np.all(np.abs(a) <= 1 + 1e-12)
    assert np.all(np.abs(a) <= rigorous_bound(2, np.arange(a.size)) + 1e-15)


def test_pointwise_report():
    s = schrodinger_kernel(2, 0.0)
    rep = kernel_pointwise_report(s, 10)
    assert rep.ratios[0] == pytest.approx(1.0)
    assert rep.n.size == 11


def test_pointwise_calibration_reproduced():
    cstar = constant("pointwise_C_star")
    worst = max(kernel_pointwise_report(schrodinger_kernel(2, t, n_max=40), 40).max_ratio
                for t in (0.3, 1, 2, 5, 10, 50, 200))
    assert worst <= cstar * (1 + 1e-9)
    assert worst == pytest.approx(cstar, rel=1e-9)


def test_lq_norm():
    s0 = schrodinger_kernel(2, 0.0)
    for q in (3, 4, math.inf):
        assert kernel_lq_norm(s0, q) == pytest.approx(1.0)
    s = schrodinger_kernel(2, 100.0)
    assert kernel_lq_norm(s, math.inf) == np.abs(s.values.values).max()
    with pytest.raises(DivergenceError, match="q > 2"):
        kernel_lq_norm(s, 2)


def test_lq_norm_tail_radius():
    # q close to 2 needs a much larger radius; the norm must still converge
    R = required_radius(2, 2.5, 1e-10)
    assert R > 100
    s = schrodinger_kernel(2, 3.0)
    a = kernel_lq_norm(s, 2.5)
    b = kernel_lq_norm(schrodinger_kernel(2, 3.0, n_max=R + 50), 2.5)
    assert a == pytest.approx(b, rel=1e-10)


def test_kernel_decay_slope_q4_Q3():
    from homtree.fitting import fit_decay

    t = np.geomspace(10, 1000, 25)
    norms = [kernel_lq_norm(schrodinger_kernel(3, ti), 4) for ti in t]
    assert -1.6 <= fit_decay(t, norms).slope <= -1.4
