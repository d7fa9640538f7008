"""Homogeneous tree combinatorics, radial functions and convolution.

Radial data live in :class:`RadialFunction`, indexed by the distance ``n`` to
the base point.  Everything that is computed radially has a brute-force twin
on an explicit BFS-ordered :class:`TruncatedTree`, which is what the test
suite uses as ground truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, TreeSizeError

DEFAULT_VERTEX_BUDGET = 10**7


def _check_Q(Q):
    if int(Q) != Q or Q < 2:
        raise DomainError(f"branching number Q must be an integer >= 2, got {Q!r}")
    return int(Q)


@dataclass(frozen=True)
class TreeParams:
    """Branching number ``Q`` (vertex degree Q+1) and radial truncation ``N``."""

    Q: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "Q", _check_Q(self.Q))
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"truncation radius N must be a non-negative integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Complex amplitudes ``values[n]`` on the spheres ``S(o, n)``, n = 0..N.

    ``trusted`` is the largest radius whose value is reliable.  Operators that
    need a neighbour beyond the stored range lower it instead of inventing a
    boundary condition.  Entries past ``trusted`` are kept at zero.
    """

    Q: int
    values: np.ndarray
    trusted: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "Q", _check_Q(self.Q))
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.size == 0:
            raise DomainError("a radial function needs at least the value at n = 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        n_last = vals.size - 1
        trusted = n_last if self.trusted is None else int(self.trusted)
        object.__setattr__(self, "trusted", min(trusted, n_last))

    @property
    def N(self):
        return self.values.size - 1

    @property
    def params(self):
        return TreeParams(self.Q, self.N)

    @property
    def support_radius(self):
        """Largest n with a nonzero value (0 for the zero function)."""
        nz = np.flatnonzero(self.values)
        return int(nz[-1]) if nz.size else 0

    def __len__(self):
        return self.values.size

    def __getitem__(self, n):
        return self.values[n]

    @classmethod
    def delta(cls, Q, n=0, N=None, amplitude=1.0):
        N = n if N is None else N
        vals = np.zeros(N + 1, dtype=complex)
        vals[n] = amplitude
        return cls(Q, vals)

    @classmethod
    def zeros(cls, Q, N):
        return cls(Q, np.zeros(N + 1, dtype=complex))

    def padded(self, N):
        """Zero-pad (or truncate) to radius ``N``."""
        vals = np.zeros(N + 1, dtype=complex)
        m = min(N, self.N) + 1
        vals[:m] = self.values[:m]
        return RadialFunction(self.Q, vals, min(self.trusted, N) if self.trusted < self.N else N)

    def with_values(self, values, trusted=None):
        return RadialFunction(self.Q, values, self.trusted if trusted is None else trusted)

    def conj(self):
        return self.with_values(self.values.conj())

    def _binary(self, other, op):
        if isinstance(other, RadialFunction):
            if other.Q != self.Q:
                raise DomainError("cannot combine radial functions on trees with different Q")
            N = max(self.N, other.N)
            a, b = self.padded(N), other.padded(N)
            trusted = min(a.trusted, b.trusted)
            return RadialFunction(self.Q, op(a.values, b.values), trusted)
        return self.with_values(op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __repr__(self):
        return f"RadialFunction(Q={self.Q}, N={self.N}, trusted={self.trusted})"


def sphere_size(Q, n, max_value=None):
    """Number of vertices at distance ``n`` from a fixed vertex.

    Exact Python integer: 1 for n = 0, (Q+1) Q^(n-1) otherwise.  When
    ``max_value`` is given (e.g. ``2**63 - 1`` for an int64 consumer) a result
    that does not fit raises ``OverflowError`` rather than wrapping.
    """
    Q = _check_Q(Q)
    if int(n) != n or n < 0:
        raise DomainError(f"radius must be a non-negative integer, got {n!r}")
    n = int(n)
    size = 1 if n == 0 else (Q + 1) * Q ** (n - 1)
    if max_value is not None and size > max_value:
        raise OverflowError(f"|S(o,{n})| = (Q+1)Q^{n - 1} with Q={Q} exceeds {max_value}")
    return size


def log_sphere_weights(Q, N):
    """Natural log of the sphere sizes for n = 0..N (never overflows)."""
    n = np.arange(N + 1, dtype=float)
    logw = math.log(Q + 1) + (n - 1) * math.log(Q)
    logw[0] = 0.0
    return logw


def sphere_weights(Q, N):
    """Sphere sizes as float64; raises ``OverflowError`` past the float range."""
    logw = log_sphere_weights(Q, N)
    if logw[-1] > math.log(np.finfo(float).max):
        raise OverflowError(f"sphere size at radius {N} for Q={Q} exceeds the float64 range")
    return np.exp(logw)


def _weighted_power_sum_log(Q, values, p):
    """log of sum_n w(n) |f(n)|^p, computed without overflow."""
    a = np.abs(np.asarray(values))
    mask = a > 0
    if not mask.any():
        return -np.inf
    logs = log_sphere_weights(Q, a.size - 1)[mask] + p * np.log(a[mask])
    top = logs.max()
    return top + math.log(np.exp(logs - top).sum())


def lp_norm(f, p):
    """L^p norm of a radial function for the counting measure on the tree."""
    if not p >= 1:
        raise DomainError(f"L^p norms need p >= 1, got p={p}")
    if math.isinf(p):
        return float(np.abs(f.values).max())
    s = _weighted_power_sum_log(f.Q, f.values, p)
    return 0.0 if s == -np.inf else float(math.exp(s / p))


def mean_apply(f):
    """Radial mean operator: average over the Q+1 neighbours.

    (Mf)(0) = f(1) and (Mf)(n) = (f(n-1) + Q f(n+1)) / (Q+1).  The last
    stored radius has no outer neighbour, so it is zeroed and the trusted
    range shrinks by one.
    """
    if f.N < 2:
        raise DomainError("mean_apply needs N >= 2")
    Q, v = f.Q, f.values
    out = np.zeros_like(v)
    out[0] = v[1]
    out[1:-1] = (v[:-2] + Q * v[2:]) / (Q + 1)
    trusted = min(f.trusted, f.N) - 1
    out[trusted + 1:] = 0.0
    return RadialFunction(Q, out, trusted)


def laplacian_apply(f):
    """Combinatorial Laplacian ``L = I - M`` with the same boundary flag."""
    m = mean_apply(f)
    out = f.values - m.values
    out[m.trusted + 1:] = 0.0
    return RadialFunction(f.Q, out, m.trusted)


# --------------------------------------------------------------------------
# explicit trees (oracles)


@dataclass(frozen=True, eq=False)
class TruncatedTree:
    """Ball of radius ``R`` around the root, vertices in BFS order.

    The vertices of level ``n`` occupy the contiguous block
    ``level_start[n]:level_start[n+1]`` and the children of any vertex are
    contiguous in the next level.
    """

    Q: int
    R: int
    parent: np.ndarray
    level: np.ndarray
    first_child: np.ndarray
    n_children: np.ndarray
    level_start: np.ndarray

    @property
    def n_vertices(self):
        return self.parent.size

    def level_slice(self, n):
        return slice(int(self.level_start[n]), int(self.level_start[n + 1]))

    def children(self, v):
        return np.arange(self.first_child[v], self.first_child[v] + self.n_children[v])

    def neighbors(self, v):
        kids = self.children(v)
        p = self.parent[v]
        return kids if p < 0 else np.concatenate(([p], kids))

    def spheres(self, x, radius):
        """Vertex index arrays of S(x, 0), ..., S(x, radius) inside the tree."""
        layers = [np.array([x])]
        prev = np.array([], dtype=np.int64)
        for _ in range(radius):
            cur = layers[-1]
            if cur.size == 0:
                layers.append(cur)
                continue
            ups = self.parent[cur]
            ups = ups[ups >= 0]
            fc, nc = self.first_child[cur], self.n_children[cur]
            downs = np.concatenate([np.arange(a, a + b) for a, b in zip(fc, nc)])
            nxt = np.concatenate((ups, downs)).astype(np.int64)
            nxt = nxt[~np.isin(nxt, prev)]
            prev = cur
            layers.append(nxt)
        return layers


def tree_vertex_count(Q, R):
    return 1 + sum(sphere_size(Q, n) for n in range(1, R + 1))


def build_truncated_tree(Q, R, budget=DEFAULT_VERTEX_BUDGET):
    """Build the BFS-ordered ball of radius ``R`` in the tree of degree Q+1."""
    Q = _check_Q(Q)
    if int(R) != R or R < 0:
        raise DomainError(f"tree radius must be a non-negative integer, got {R!r}")
    R = int(R)
    count = tree_vertex_count(Q, R)
    if count > budget:
        raise TreeSizeError(
            f"truncated tree with Q={Q}, R={R} has {count} vertices, over the budget of {budget}"
        )
    sizes = [sphere_size(Q, n) for n in range(R + 1)]
    level_start = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    parent = np.full(count, -1, dtype=np.int64)
    level = np.zeros(count, dtype=np.int64)
    n_children = np.zeros(count, dtype=np.int64)
    first_child = np.zeros(count, dtype=np.int64)
    for n in range(R + 1):
        lo, hi = level_start[n], level_start[n + 1]
        level[lo:hi] = n
        if n < R:
            per = Q + 1 if n == 0 else Q
            n_children[lo:hi] = per
            first_child[lo:hi] = hi + per * np.arange(hi - lo)
            parent[hi:level_start[n + 2]] = np.repeat(np.arange(lo, hi), per)
        else:
            first_child[lo:hi] = count
    return TruncatedTree(Q, R, parent, level, first_child, n_children, level_start)


@dataclass(frozen=True, eq=False)
class VertexField:
    """Complex amplitude per vertex of a truncated tree.

    Vertices farther than ``trusted_radius`` from the root carry NaN.
    """

    tree: TruncatedTree
    values: np.ndarray
    trusted_radius: int | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.size != self.tree.n_vertices:
            raise DomainError("vertex field size does not match the tree")
        object.__setattr__(self, "values", vals)
        if self.trusted_radius is None:
            object.__setattr__(self, "trusted_radius", self.tree.R)

    def lp_norm(self, p):
        a = np.abs(self.values[self.tree.level <= self.trusted_radius])
        if math.isinf(p):
            return float(a.max())
        return float((a**p).sum() ** (1.0 / p))

    def radial_profile(self, check=True, atol=0.0):
        """Read one value per level; optionally verify constancy on spheres."""
        t = self.tree
        out = np.empty(self.trusted_radius + 1, dtype=complex)
        for n in range(self.trusted_radius + 1):
            block = self.values[t.level_slice(n)]
            if check and np.abs(block - block[0]).max() > atol:
                raise DomainError(f"vertex field is not constant on the sphere of radius {n}")
            out[n] = block[0]
        return RadialFunction(t.Q, out)


def lift(f, tree):
    """Spread a radial function over the vertices of ``tree``."""
    vals = np.zeros(tree.n_vertices, dtype=complex)
    m = min(f.N, tree.R)
    mask = tree.level <= m
    vals[mask] = f.values[tree.level[mask]]
    return VertexField(tree, vals)


def vertex_mean(field):
    """Neighbour average on the explicit tree; leaves become untrusted."""
    t = field.tree
    v = field.values
    acc = np.zeros_like(v)
    nonroot = np.arange(1, t.n_vertices)
    np.add.at(acc, t.parent[nonroot], v[nonroot])
    acc[nonroot] += v[t.parent[nonroot]]
    out = acc / (t.Q + 1)
    trusted = min(field.trusted_radius, t.R - 1)
    out[t.level > trusted] = np.nan
    return VertexField(t, out, trusted)


def vertex_convolve(field, g, at=None):
    """Brute-force ``(f * g)(x) = sum_n g(n) sum_{y in S(x,n)} f(y)``.

    Evaluated only where every sphere up to the support of ``g`` fits inside
    the tree (``|x| <= R - support``); other vertices are NaN.  ``at`` limits
    evaluation to the given vertex indices.
    """
    t = field.tree
    s = g.support_radius
    trusted = min(field.trusted_radius, t.R) - s
    if trusted < 0:
        raise DomainError(
            f"no vertex of the radius-{t.R} tree has complete spheres up to radius {s}; "
            f"use a larger oracle tree (R >= {t.R - trusted})"
        )
    targets = np.flatnonzero(t.level <= trusted) if at is None else np.asarray(at)
    out = np.full(t.n_vertices, np.nan, dtype=complex)
    gv = g.values
    for x in targets:
        if t.level[x] > trusted:
            raise DomainError(f"vertex {x} lies outside the trusted region |x| <= {trusted}")
        acc = 0.0j
        for n, layer in enumerate(t.spheres(int(x), s)):
            if gv[n] != 0:
                acc += gv[n] * field.values[layer].sum()
        out[x] = acc
    return VertexField(t, out, trusted)


def radial_convolve(f, g):
    """Convolution of two radial functions via exact sphere intersection counts.

    The output has radius ``f.N + g.N``.  If either input is only trusted on
    part of its stored range, the output trust shrinks accordingly.
    """
    if f.Q != g.Q:
        raise DomainError("radial functions live on trees with different Q")
    Q = f.Q
    # sum over the shorter support; counts then stay small integers
    a, b = (f, g) if f.support_radius <= g.support_radius else (g, f)
    n_out = f.N + g.N
    bv = np.zeros(n_out + a.N + 1, dtype=complex)
    bv[: b.N + 1] = b.values
    out = np.zeros(n_out + 1, dtype=complex)
    m = np.arange(n_out + 1)
    for j in range(a.support_radius + 1):
        if a.values[j] == 0:
            continue
        acc = np.zeros(n_out + 1, dtype=complex)
        # branch-point bookkeeping done per m; vectorised over m for fixed (j, l)
        for l in range(j + 1):
            d = m + j - 2 * l
            valid = m >= l
            cnt = np.zeros(n_out + 1)
            eq_m = valid & (m == l)
            if j == l:
                cnt[eq_m] = 1.0
            elif l == 0:
                cnt[eq_m] = (Q + 1) * float(Q) ** (j - 1)
            else:
                cnt[eq_m] = float(Q) ** (j - l)
            gt = valid & (m > l)
            if l == j:
                cnt[gt] = 1.0
            else:
                cnt[gt] = (Q if l == 0 else Q - 1) * float(Q) ** (j - l - 1)
            dd = np.clip(d, 0, bv.size - 1)
            acc += np.where(valid, cnt * bv[dd], 0.0)
        out += a.values[j] * acc
    trusted = n_out
    if f.trusted < f.N:
        trusted = min(trusted, f.trusted - g.N)
    if g.trusted < g.N:
        trusted = min(trusted, g.trusted - f.N)
    if trusted < 0:
        raise DomainError("convolution has an empty trusted range; store the inputs on a larger radius")
    out[trusted + 1:] = 0.0
    return RadialFunction(Q, out, trusted)


def nu_measure(Q, N=1):
    """Normalised uniform probability on the unit sphere, as a radial function."""
    return RadialFunction.delta(Q, 1, max(N, 1), 1.0 / (Q + 1))


# --------------------------------------------------------------------------
# Kunze-Stein probe


@dataclass
class KunzeSteinReport:
    q: float
    r: float
    trials: int
    seed: int
    ratios: np.ndarray = field(repr=False)

    @property
    def sup_ratio(self):
        return float(self.ratios.max())


def check_kunze_stein_exponents(q, r):
    if not (2 < q < math.inf):
        raise DomainError(f"need 2 < q < inf, got q={q}")
    if not (2 < r < math.inf):
        raise DomainError(f"need 2 < r < inf, got r={r}")
    if not (q / 2 < r < q):
        raise DomainError(f"need q/2 < r < q, got q={q}, r={r}")


def kunze_stein_ratio(f1, f2, q, r):
    """||f1 * f2||_q / (||f1||_{q'} ||f2||_r) for a vertex field and a radial kernel."""
    t = f1.tree
    conv = vertex_convolve(f1, f2)
    nz = np.flatnonzero(f1.values)
    reach = (int(t.level[nz].max()) if nz.size else 0) + f2.support_radius
    if reach > conv.trusted_radius:
        raise DomainError("f1 support plus kernel support does not fit the oracle tree")
    q_dual = q / (q - 1)
    return conv.lp_norm(q) / (f1.lp_norm(q_dual) * lp_norm(f2, r))


def kunze_stein_probe(q, r, trials=100, seed=0, Q=2, f1_radius=3, f2_radius=3):
    """Empirical constant of the L^{q'} * L^r(radial) -> L^q inclusion.

    Draws ``trials`` seeded pairs: f1 arbitrary complex on the ball of radius
    ``f1_radius``, f2 radial with support ``f2_radius``.  The convolution is
    evaluated by vertex enumeration on a tree large enough to hold its whole
    support, so no value is lost to truncation.
    """
    check_kunze_stein_exponents(q, r)
    rng = np.random.default_rng(seed)
    R = f1_radius + 2 * f2_radius
    tree = build_truncated_tree(Q, R)
    inner = tree.level <= f1_radius
    ratios = np.empty(trials)
    for i in range(trials):
        v = np.zeros(tree.n_vertices, dtype=complex)
        k = int(inner.sum())
        v[inner] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        f1 = VertexField(tree, v)
        w = rng.standard_normal(f2_radius + 1) + 1j * rng.standard_normal(f2_radius + 1)
        f2 = RadialFunction(Q, w)
        ratios[i] = kunze_stein_ratio(f1, f2, q, r)
    return KunzeSteinReport(q, r, trials, seed, ratios)
