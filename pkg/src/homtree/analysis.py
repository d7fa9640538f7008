"""Strichartz norms, admissible pairs, decay fits and the scattering probe."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import DomainError, NonAdmissibleError
from .fitting import DecayFit, fit_decay, window_envelope  # noqa: F401  (re-exported)
from .propagator import propagate_spectral
from .tree import RadialFunction, lp_norm

HALF = Fraction(1, 2)


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(10**9)


def is_admissible(inv_p, inv_q):
    """Membership of (1/p, 1/q) in (0, 1/2] x [0, 1/2) plus the corner (0, 1/2).

    Arguments are reciprocals; pass Fractions for exact boundary tests.
    """
    a, b = _as_fraction(inv_p), _as_fraction(inv_q)
    if a == 0 and b == HALF:
        return True
    return 0 < a <= HALF and 0 <= b < HALF


@dataclass(frozen=True)
class AdmissiblePair:
    """Exponent pair (p, q) stored through its reciprocals."""

    inv_p: Fraction
    inv_q: Fraction

    def __post_init__(self):
        a, b = _as_fraction(self.inv_p), _as_fraction(self.inv_q)
        object.__setattr__(self, "inv_p", a)
        object.__setattr__(self, "inv_q", b)
        if not is_admissible(a, b):
            raise NonAdmissibleError(
                f"(1/p, 1/q) = ({a}, {b}) lies outside the admissible square "
                "(0, 1/2] x [0, 1/2) together with the point (0, 1/2)"
            )

    @classmethod
    def from_exponents(cls, p, q):
        inv = [Fraction(0) if math.isinf(e) else (Fraction(1, e) if isinstance(e, int) else 1 / _as_fraction(e))
               for e in (p, q)]
        return cls(*inv)

    @property
    def p(self):
        return math.inf if self.inv_p == 0 else float(1 / self.inv_p)

    @property
    def q(self):
        return math.inf if self.inv_q == 0 else float(1 / self.inv_q)


@dataclass
class NormReport:
    """Space-time norm of a trajectory for one exponent pair."""

    pair: AdmissiblePair
    times: np.ndarray
    lq: np.ndarray
    norm: float
    windows: list = field(default_factory=list)
    increments: np.ndarray = None
    cumulative: np.ndarray = None
    stride_change: float = 0.0
    fit: DecayFit = None

    @property
    def stride_ok(self):
        return self.stride_change < 1e-3


def _lp_time(times, vals, p):
    if math.isinf(p):
        return float(np.max(vals)) if vals.size else 0.0
    return float(integrate.trapezoid(vals ** p, times) ** (1.0 / p))


def strichartz_norm(traj, pair, windows=None, fit_from=10.0):
    """||u||_{L^p_t L^q_x} over the recorded times, plus windowed pieces.

    ``windows`` is a list of (a, b) intervals; each increment is the
    L^p_t L^q_x norm restricted to it.  The stride check recomputes the total
    with every other sample and reports the relative change.  When the
    samples past ``fit_from`` span a decade, the decay of ||u(t)||_q is
    fitted as well.
    """
    if not isinstance(pair, AdmissiblePair):
        pair = AdmissiblePair(*pair)
    times = np.asarray(traj.times, dtype=float)
    if times.size > 1:
        density = (times.size - 1) / (times[-1] - times[0])
        if density < 10 - 1e-9:
            raise DomainError(f"trajectory has {density:.2f} samples per unit time; Strichartz norms need >= 10")
    lq = traj.lq_series(pair.q)
    p = pair.p
    total = _lp_time(times, lq, p)
    coarse = _lp_time(times[::2], lq[::2], p) if times.size > 4 else total
    change = abs(coarse - total) / total if total > 0 else 0.0
    incs, cums = [], []
    for a, b in windows or []:
        sel = (times >= a - 1e-12) & (times <= b + 1e-12)
        if sel.sum() < 2:
            raise DomainError(f"window [{a}, {b}] holds fewer than two samples")
        incs.append(_lp_time(times[sel], lq[sel], p))
        upto = times <= b + 1e-12
        cums.append(_lp_time(times[upto], lq[upto], p))
    fit = None
    late = times >= fit_from
    if late.sum() >= 8 and times[late][-1] >= 10 * times[late][0] and np.all(lq[late] > 0):
        fit = fit_decay(times[late], lq[late])
    return NormReport(pair, times, lq, total, list(windows or []), np.array(incs), np.array(cums), change, fit)


# --------------------------------------------------------------------------
# scattering


@dataclass
class ScatteringReport:
    """Cauchy table of z(t) = exp(-itL) u(t) on a time ladder."""

    times: np.ndarray
    z: list
    distances: np.ndarray  # d[j, k] = ||z(t_j) - z(t_k)||_2
    u_plus: RadialFunction
    residuals: np.ndarray  # ||z(t_k) - u_plus||_2 = ||u(t_k) - exp(i t_k L) u_plus||_2

    def d(self, a, b):
        i = int(np.argmin(np.abs(self.times - a)))
        j = int(np.argmin(np.abs(self.times - b)))
        if abs(self.times[i] - a) > 1e-9 or abs(self.times[j] - b) > 1e-9:
            raise DomainError(f"times {a}, {b} are not on the ladder {self.times.tolist()}")
        return float(self.distances[i, j])

    def doubling_increments(self):
        """d(T, 2T) for every ladder time T whose double is also on the ladder."""
        out = {}
        for T in self.times:
            if np.any(np.abs(self.times - 2 * T) < 1e-9) and T > 0:
                out[float(T)] = self.d(T, 2 * T)
        return out


def _diff_norm(a, b):
    n = max(a.N, b.N)
    return lp_norm(a.padded(n) - b.padded(n), 2)


def scattering_probe(traj, ladder=None):
    """Pull recorded states back by the linear flow and tabulate Cauchy distances.

    The default ladder is 10 * 2^j inside the horizon plus the horizon itself
    and T = 50 when recorded.  The candidate scattering state is z(T_max).
    """
    times = np.asarray(traj.times, dtype=float)
    T_max = float(times[-1])
    if ladder is None:
        ladder = [10.0 * 2**j for j in range(int(math.log2(T_max / 10.0)) + 1)] if T_max >= 10 else []
        ladder += [50.0, T_max]
    ladder = np.array(sorted({float(t) for t in ladder if t <= T_max + 1e-9}))
    z = []
    for t in ladder:
        k = int(np.argmin(np.abs(times - t)))
        if abs(times[k] - t) > 1e-9:
            raise DomainError(f"ladder time {t} was not recorded in the trajectory")
        u = traj.state(k)
        z.append(propagate_spectral(u, -t))
    n = len(z)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = _diff_norm(z[i], z[j])
    u_plus = z[-1]
    res = np.array([_diff_norm(zi, u_plus) for zi in z])
    return ScatteringReport(ladder, z, D, u_plus, res)


def scattering_constant(traj, report, pair_exponent=None):
    """Ratios d(T, 2T) / (int_T^{2T} ||u||_q^p)^{gamma/p} with p = q = 1 + gamma."""
    gamma = traj.spec.gamma
    p = 1.0 + gamma if pair_exponent is None else pair_exponent
    lq = traj.lq_series(p)
    out = {}
    for T, d in report.doubling_increments().items():
        sel = (traj.times >= T - 1e-12) & (traj.times <= 2 * T + 1e-12)
        strich = integrate.trapezoid(lq[sel] ** p, traj.times[sel]) ** (gamma / p)
        out[T] = d / strich
    return out
