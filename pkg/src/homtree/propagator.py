"""The linear Schroedinger group exp(itL) on radial data.

Production route: spectral multiplier.  f is Abel transformed, taken to
the Fourier side on Z, multiplied by exp(it(1 - gamma)), and brought back.
Validation route: convolution with the kernel s_t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TruncationError
from .fitting import fit_decay
from .kernel import DEFAULT_TOL, default_radius, kernel_lq_norm, schrodinger_kernel
from .spectral import (
    SpectralGrid,
    _abel_values,
    _inverse_abel_values,
    gamma0,
)
from .tree import RadialFunction, _check_Q, log_sphere_weights, lp_norm, radial_convolve

TAIL_TOL = 1e-9
TAIL_GUARD = 8


def spreading_margin(Q, t):
    """Extra radii past the light cone gamma0 |t| (Airy transition width)."""
    return 32 + int(math.ceil(8.0 * (gamma0(Q) * abs(t) / 2.0) ** (1.0 / 3.0)))


@dataclass(frozen=True)
class PropagatorPlan:
    """Radii and spectral grid for propagating data of radius ``n_in`` up to ``t_max``."""

    Q: int
    n_in: int
    t_max: float
    margin: int
    n_out: int
    grid: SpectralGrid
    tail_tol: float = TAIL_TOL

    @classmethod
    def build(cls, Q, n_in, t_max, margin=None, n_out=None, tail_tol=TAIL_TOL):
        Q = _check_Q(Q)
        spread = int(math.ceil(gamma0(Q) * abs(t_max)))
        if margin is None:
            margin = spreading_margin(Q, t_max)
        if n_out is None:
            n_out = n_in + spread + margin
        # aliasing on the Z side starts at degree 2M - n_out; the product
        # exp(-it gamma) Hf has effective degree n_in + spread + margin
        M = max(n_out + 1, n_in + spread + margin + n_out // 2 + 1)
        return cls(Q, int(n_in), abs(float(t_max)), int(margin), int(n_out), SpectralGrid(Q, M), tail_tol)

    def symbol(self, t):
        return np.exp(1j * t * (1.0 - gamma0(self.Q) * np.cos(self.grid.theta)))

    def matrix(self, t, dtype=complex):
        """Dense propagation matrix from radius n_in to radius n_out.

        ``dtype=np.clongdouble`` evaluates it in extended precision.
        """
        return _propagate_values(self, np.eye(self.n_in + 1, dtype=dtype), t)


def _propagate_core(Q, vals, t, M, n_out):
    """exp(itL) applied to the columns of ``vals`` in their own precision."""
    rdt = np.finfo(vals.dtype).dtype
    one = rdt.type(1)
    theta = (np.arange(M, dtype=rdt) + rdt.type(0.5)) * np.arccos(-one) / M
    sq = np.sqrt(rdt.type(Q))
    phase = rdt.type(t) * (one - 2 * one / (sq + one / sq) * np.cos(theta))
    sym = np.cos(phase) + 1j * np.sin(phase)
    n = np.arange(vals.shape[0], dtype=rdt)
    coef = np.where(n == 0, one, 2 * one).astype(rdt)
    col = (slice(None),) + (None,) * (vals.ndim - 1)
    Af = _abel_values(Q, vals)
    F = np.cos(np.outer(theta, n)) @ (coef[col] * Af)
    F = sym[col] * F
    m = np.arange(n_out + 3, dtype=rdt)
    h = np.cos(np.outer(m, theta)) @ F / M
    return _inverse_abel_values(Q, h)[: n_out + 1]


def _propagate_values(plan, vals, t):
    return _propagate_core(plan.Q, vals, t, plan.grid.M, plan.n_out)


def spectral_factors(plan):
    """Matrices (V, B, omega) with exp(itL) = B diag(exp(i t omega)) V on the plan's radii.

    V maps radii 0..n_in to grid values of the spherical transform (as F A)
    and B maps grid values back to radii 0..n_out.
    """
    g = plan.grid
    n = np.arange(plan.n_in + 1)
    coef = np.where(n == 0, 1.0, 2.0)
    V = np.cos(np.outer(g.theta, n)) @ (coef[:, None] * _abel_values(plan.Q, np.eye(plan.n_in + 1)))
    m = np.arange(plan.n_out + 3)
    B = _inverse_abel_values(plan.Q, np.cos(np.outer(m, g.theta)) / g.M)[: plan.n_out + 1]
    omega = 1.0 - gamma0(plan.Q) * np.cos(g.theta)
    return V, B, omega


def linear_flow(f, times, plan=None):
    """States exp(itL) f at every t in ``times``, shape (len(times), n_out + 1)."""
    times = np.asarray(times, dtype=float)
    if plan is None:
        plan = PropagatorPlan.build(f.Q, f.N, np.abs(times).max(initial=0.0))
    V, B, omega = spectral_factors(plan)
    vals = np.zeros(plan.n_in + 1, dtype=complex)
    vals[: f.N + 1] = f.values
    Vf = V @ vals
    out = np.empty((times.size, plan.n_out + 1), dtype=complex)
    for i in range(0, times.size, 256):
        blk = times[i : i + 256]
        out[i : i + 256] = (np.exp(1j * np.outer(blk, omega)) * Vf) @ B.T
    return out


def tail_fraction(f, guard=TAIL_GUARD):
    """Share of the l2 mass carried by the outermost ``guard`` radii."""
    logw = log_sphere_weights(f.Q, f.N)
    a = np.abs(f.values)
    with np.errstate(divide="ignore"):
        logs = logw + 2.0 * np.log(a)
    top = logs.max()
    if not np.isfinite(top):
        return 0.0
    w = np.exp(logs - top)
    return float(w[-guard:].sum() / w.sum())


def propagate_spectral(f, t, plan=None, check=True):
    """u = exp(itL) f through the spectral multiplier exp(it(1 - gamma)).

    Raises :class:`TruncationError` if more than ``plan.tail_tol`` of the
    mass reaches the outermost radii of the output range.
    """
    if plan is None:
        plan = PropagatorPlan.build(f.Q, f.N, t)
    elif plan.Q != f.Q:
        raise DomainError("plan and data use different Q")
    if f.N > plan.n_in:
        raise DomainError(f"data radius {f.N} exceeds the plan input radius {plan.n_in}")
    if abs(t) > plan.t_max * (1 + 1e-12):
        raise DomainError(f"|t|={abs(t)} exceeds the plan horizon {plan.t_max}")
    vals = np.zeros(plan.n_in + 1, dtype=complex)
    vals[: f.N + 1] = f.values
    u = RadialFunction(f.Q, _propagate_values(plan, vals, t))
    if check:
        leak = tail_fraction(u)
        if leak > plan.tail_tol:
            raise TruncationError(
                f"{leak:.2e} of the mass reached the last {TAIL_GUARD} radii at t={t}; enlarge the plan margin",
                leak,
            )
    return u


def propagate_convolution(f, t, tol=DEFAULT_TOL):
    """u = f * s_t through the kernel; valid on radii where s_t is stored."""
    n_max = 2 * f.support_radius + default_radius(f.Q, t, tol)
    s = schrodinger_kernel(f.Q, t, tol=tol, n_max=n_max)
    u = radial_convolve(f, s.values)
    keep = n_max - f.support_radius
    return RadialFunction(f.Q, u.values[: keep + 1])


def generator_residual(f, h, plan=None):
    """max |(exp(ihL) f - f)/h - i L f| on radii where L f is defined."""
    from .tree import laplacian_apply

    if plan is None:
        plan = PropagatorPlan.build(f.Q, f.N + 1, abs(h))
    u = propagate_spectral(f.padded(f.N + 1), h, plan)
    Lf = laplacian_apply(f.padded(f.N + 1))
    r = (u.values[: f.N + 1] - f.values) / h - 1j * Lf.values[: f.N + 1]
    return float(np.abs(r).max())


@dataclass
class DispersiveScan:
    Q: int
    q: float
    t: np.ndarray
    norms: np.ndarray
    fit: object = None


def dispersive_decay_scan(q, t_grid, Q=2, tol=DEFAULT_TOL, fit=True):
    """||s_t||_q over t_grid, the delta-data lower bound of ||exp(itL)||_{q'->q}.

    Fits the log-log slope over the samples with |t| >= 1 when ``fit``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    norms = np.array([kernel_lq_norm(schrodinger_kernel(Q, t, tol=tol), q) for t in t_grid])
    out = DispersiveScan(Q, q, t_grid, norms)
    if fit:
        big = np.abs(t_grid) >= 1
        out.fit = fit_decay(np.abs(t_grid[big]), norms[big])
    return out


@dataclass
class MixedNormReport:
    q: float
    q_tilde: float
    t: float
    ratios: np.ndarray

    @property
    def constant(self):
        return float(self.ratios.max())


def mixed_norm_probe(q, q_tilde, t, Q=2, samples=32, radius=4, seed=0):
    """Empirical constant ||f * s_t||_q / ||f||_{q~'} over seeded radial data.

    The first sample is delta_0, so the report is never below the kernel norm.
    """
    for e in (q, q_tilde):
        if not (2 < e <= math.inf):
            raise DomainError(f"mixed-norm exponents must exceed 2, got {e}")
    qp = q_tilde / (q_tilde - 1.0) if math.isfinite(q_tilde) else 1.0
    rng = np.random.default_rng(seed)
    plan = PropagatorPlan.build(Q, radius, t)
    ratios = []
    for i in range(samples):
        if i == 0:
            f = RadialFunction.delta(Q, 0, radius)
        else:
            v = rng.standard_normal(radius + 1) + 1j * rng.standard_normal(radius + 1)
            f = RadialFunction(Q, v * np.exp(-0.5 * np.arange(radius + 1) * math.log(Q)))
        u = propagate_spectral(f, t, plan)
        ratios.append(lp_norm(u, q) / lp_norm(f, qp))
    return MixedNormReport(q, q_tilde, t, np.array(ratios))
