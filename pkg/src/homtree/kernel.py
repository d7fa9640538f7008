"""The Schroedinger kernel s_t, the radial convolution kernel of exp(itL).

s_t(n) = e^{it} (2/pi) sum_{k>=0} Q^{-n/2-k} D(n+2k+1), with
D(m) = int_0^pi exp(-i gamma0 t cos l) sin l sin(m l) dl.

Two routes evaluate D: a periodic trapezoid rule (a type-I sine transform of
the integrand) and the Bessel reduction
D(m) = (pi/2) [(-i)^{m-1} J_{m-1}(x) - (-i)^{m+1} J_{m+1}(x)], x = gamma0 t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft, special

from .errors import DivergenceError, DomainError
from .spectral import gamma0
from .tree import RadialFunction, TreeParams, _check_Q, log_sphere_weights

DEFAULT_TOL = 1e-10


def bessel_J(m, x):
    """Bessel function of the first kind J_m(x) for integer m >= 0."""
    m = np.asarray(m)
    if np.any(m < 0) or np.any(m != np.floor(m)):
        raise DomainError("bessel_J expects integer orders m >= 0")
    out = special.jv(m, np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def _trapezoid_J(t, m, c, P):
    lam = np.linspace(0.0, math.pi, P + 1)
    w = np.full(P + 1, math.pi / P)
    w[[0, -1]] *= 0.5
    vals = np.exp(1j * c * t * np.cos(lam))
    m = np.atleast_1d(np.asarray(m))
    return (np.cos(np.multiply.outer(m, lam)) * (w * vals)).sum(axis=-1)


def oscillatory_J(t, m, c, rtol=1e-14):
    """J(t, m) = int_0^pi exp(i c t cos l) cos(m l) dl.

    The integrand extends to an even 2pi-periodic analytic function, so the
    trapezoid rule converges geometrically.  Starting from
    ``max(64, 8 (m + ceil(c|t|)))`` nodes, the count doubles until two
    successive values agree to ``rtol``.
    """
    if c <= 0:
        raise DomainError("oscillatory_J needs c > 0")
    m_arr = np.asarray(m)
    if np.any(m_arr < 0):
        raise DomainError("oscillatory_J needs m >= 0")
    P = max(64, 8 * (int(np.max(m_arr)) + int(math.ceil(c * abs(t)))))
    prev = _trapezoid_J(t, m_arr, c, P)
    for _ in range(6):
        P *= 2
        cur = _trapezoid_J(t, m_arr, c, P)
        if np.max(np.abs(cur - prev)) <= rtol * max(1.0, np.max(np.abs(cur))):
            prev = cur
            break
        prev = cur
    return prev.reshape(m_arr.shape) if m_arr.ndim else complex(prev[0])


def bessel_oscillatory_J(t, m, c):
    """Closed form pi i^m J_m(c t) of :func:`oscillatory_J`."""
    m = np.asarray(m)
    return math.pi * (1j ** m) * special.jv(m, c * t)


def truncation_depth(Q, tol):
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    return int(math.ceil(math.log(1.0 / tol) / math.log(Q))) + 2


def default_radius(Q, t, tol):
    return int(math.ceil(gamma0(Q) * abs(t))) + 2 * int(math.ceil(math.log(1.0 / tol) / math.log(Q)))


def _D_bessel(x, mmax):
    """D(m) for m = 0..mmax via the Bessel reduction."""
    orders = np.arange(-1, mmax + 2)
    J = special.jv(orders, x) * (-1j) ** orders
    # J[k] holds (-i)^{k-1} J_{k-1}(x)
    return 0.5 * math.pi * (J[:-2] - J[2:])


def _D_quadrature(x, mmax, P):
    """D(m) for m = 0..mmax by the trapezoid rule on P panels (sine transform)."""
    lam = np.arange(1, P) * math.pi / P
    g = np.exp(-1j * x * np.cos(lam)) * np.sin(lam)
    y = fft.dst(g.real, type=1) + 1j * fft.dst(g.imag, type=1)
    D = np.zeros(mmax + 1, dtype=complex)
    # y[m-1] = 2 sum_j g_j sin(m lam_j)
    D[1:] = (math.pi / P) * 0.5 * y[:mmax]
    return D


@dataclass(frozen=True, eq=False)
class SchrodingerKernel:
    """Kernel values s_t(0..n_max) with the truncation metadata."""

    params: TreeParams
    t: float
    values: RadialFunction
    K: int
    nodes: int
    route: str
    truncation_error: float
    tol: float = DEFAULT_TOL
    meta: dict = field(default_factory=dict)

    @property
    def Q(self):
        return self.params.Q

    @property
    def n_max(self):
        return self.params.N

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values.values, dtype=dtype)


def schrodinger_kernel(Q, t, tol=DEFAULT_TOL, n_max=None, route="bessel", K=None):
    """Evaluate s_t(n) for n = 0..n_max.

    The k-series is cut at ``K = ceil(log(1/tol)/log Q) + 2``; the
    remainder is bounded by ``(4/pi) Q^{-K-1} Q/(Q-1)`` because every
    integral is bounded by 2.  ``route`` selects ``"bessel"`` or
    ``"quadrature"`` for the integrals D(m).
    """
    Q = _check_Q(Q)
    t = float(t)
    if K is None:
        K = truncation_depth(Q, tol)
    if n_max is None:
        n_max = default_radius(Q, t, tol)
    n_max = int(n_max)
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    x = gamma0(Q) * t
    mmax = n_max + 2 * K + 1
    if route == "bessel":
        D = _D_bessel(x, mmax)
        nodes = 0
    elif route == "quadrature":
        nodes = max(64, 8 * (n_max + 2 * K + 1 + int(math.ceil(abs(x)))))
        D = _D_quadrature(x, mmax, nodes)
    else:
        raise DomainError(f"unknown kernel route {route!r}")
    # sum_k Q^{-k} D(n+2k+1) as a short loop over k (K is small)
    n = np.arange(n_max + 1)
    acc = np.zeros(n_max + 1, dtype=complex)
    for k in range(K, -1, -1):
        acc = acc / Q + D[n + 2 * k + 1] if k < K else D[n + 2 * k + 1].astype(complex)
    vals = np.exp(1j * t) * (2.0 / math.pi) * np.exp(-0.5 * n * math.log(Q)) * acc
    err = (4.0 / math.pi) * Q ** (-K - 1) * Q / (Q - 1)
    return SchrodingerKernel(
        TreeParams(Q, n_max), t, RadialFunction(Q, vals), K, nodes, route, err, tol
    )


def rigorous_bound(Q, n):
    """|s_t(n)| <= (4/pi) Q/(Q-1) Q^{-n/2}, valid for every t."""
    return (4.0 / math.pi) * Q / (Q - 1.0) * np.exp(-0.5 * np.asarray(n) * math.log(Q))


def pointwise_envelope(Q, t, n):
    """Decay envelope Q^{-n/2} (|t| < 1) or |t|^{-3/2} (1+n)^2 Q^{-n/2}."""
    n = np.asarray(n, dtype=float)
    base = np.exp(-0.5 * n * math.log(Q))
    if abs(t) < 1:
        return base
    return abs(t) ** -1.5 * (1.0 + n) ** 2 * base


@dataclass
class PointwiseReport:
    t: float
    n: np.ndarray
    ratios: np.ndarray

    @property
    def max_ratio(self):
        return float(self.ratios.max())

    @property
    def argmax(self):
        return int(self.n[np.argmax(self.ratios)])


def kernel_pointwise_report(s, n_max=None):
    """Ratios |s_t(n)| / envelope(t, n) for n = 0..n_max."""
    n_max = s.n_max if n_max is None else min(int(n_max), s.n_max)
    n = np.arange(n_max + 1)
    vals = np.abs(s.values.values[: n_max + 1])
    return PointwiseReport(s.t, n, vals / pointwise_envelope(s.Q, s.t, n))


def required_radius(Q, q, tol):
    """Smallest R with the rigorous tail sum_{n>R} w(n) |s_t(n)|^q below tol."""
    if q <= 2:
        raise DivergenceError(f"the radial L^q series diverges for q={q}; it needs q > 2")
    if math.isinf(q):
        return 0
    B = (4.0 / math.pi) * Q / (Q - 1.0)
    r = Q ** (1.0 - q / 2.0)
    # tail = B^q (Q+1)/Q * r^{R+1} / (1 - r)
    coef = B ** q * (Q + 1.0) / Q / (1.0 - r)
    return max(0, int(math.ceil(math.log(tol / coef) / math.log(r))))


def kernel_lq_norm(s, q, tol=None):
    """||s_t||_q over the tree, from the weighted radial sum.

    q = inf gives max_n |s_t(n)|.  For finite q the kernel is re-evaluated on
    a larger radius when the rigorous tail bound past ``s.n_max`` exceeds
    ``tol`` (default: the kernel's own tolerance).
    """
    q = float(q)
    if q <= 2:
        raise DivergenceError(f"kernel L^q norm needs q > 2 (sum of Q^(n(1-q/2)) diverges), got q={q}")
    tol = s.tol if tol is None else tol
    if math.isinf(q):
        return float(np.abs(s.values.values).max())
    R = required_radius(s.Q, q, tol)
    if R > s.n_max:
        s = schrodinger_kernel(s.Q, s.t, tol=s.tol, n_max=R, route=s.route, K=s.K)
    a = np.abs(s.values.values)
    logw = log_sphere_weights(s.Q, s.n_max)
    with np.errstate(divide="ignore"):
        logs = logw + q * np.log(a)
    top = logs.max()
    return float(math.exp((top + math.log(np.exp(logs - top).sum())) / q))
