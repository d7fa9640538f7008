"""scikit-learn style wrappers around the functional core.

Each row of X is one radial function f(0..N).  Fitting fixes the radius
and builds the grid or propagation plan; transforming applies the operator
to every row.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_radial_array, check_times, check_width
from .fitting import fit_decay
from .propagator import PropagatorPlan, _propagate_core
from .spectral import (
    SpectralFunction,
    SpectralGrid,
    _abel_values,
    _inverse_abel_values,
    density_required_nodes,
    inverse_spherical,
    weighted_phi_matrix,
)
from .tree import _check_Q


class SphericalTransformer(TransformerMixin, BaseEstimator):
    """Spherical transform H of radial rows, sampled on a cell-centred grid.

    Parameters
    ----------
    Q : int
        Branching number of the tree.
    n_nodes : int or None
        Grid size; defaults to the smallest size that inverts exactly.
    method : {"abel", "density"}
        Inversion route used by ``inverse_transform``.
    """

    def __init__(self, Q=2, n_nodes=None, method="abel"):
        self.Q = Q
        self.n_nodes = n_nodes
        self.method = method

    def fit(self, X, y=None):
        X = check_radial_array(X)
        Q = _check_Q(self.Q)
        N = X.shape[1] - 1
        need = N + 1 if self.method == "abel" else density_required_nodes(Q, N)
        M = need if self.n_nodes is None else int(self.n_nodes)
        self.radius_ = N
        self.grid_ = SpectralGrid(Q, M)
        self.matrix_ = weighted_phi_matrix(Q, self.grid_.theta, N)
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_width(check_radial_array(X), self.radius_ + 1)
        return X @ self.matrix_.T

    def inverse_transform(self, Y):
        check_is_fitted(self, "grid_")
        Y = np.atleast_2d(np.asarray(Y, dtype=complex))
        check_width(Y, self.grid_.M, "Y")
        return np.array([inverse_spherical(SpectralFunction(self.grid_, y), self.radius_, self.method).values for y in Y])


class AbelTransformer(TransformerMixin, BaseEstimator):
    """Abel transform of radial rows; output rows are one-sided even sequences."""

    def __init__(self, Q=2):
        self.Q = Q

    def fit(self, X, y=None):
        X = check_radial_array(X)
        _check_Q(self.Q)
        self.radius_ = X.shape[1] - 1
        return self

    def transform(self, X):
        check_is_fitted(self, "radius_")
        X = check_width(check_radial_array(X), self.radius_ + 1)
        return _abel_values(self.Q, X.T).T

    def inverse_transform(self, G):
        check_is_fitted(self, "radius_")
        G = check_radial_array(G, "G")
        return _inverse_abel_values(self.Q, G.T).T


class SchrodingerPropagator(TransformerMixin, BaseEstimator):
    """Linear Schroedinger flow exp(itL) applied to radial rows.

    ``transform`` returns rows of radius ``n_out_`` (input radius plus the
    spreading allowance); ``inverse_transform`` flows back by -t and keeps
    the fitted input radius.
    """

    def __init__(self, Q=2, t=1.0, margin=None):
        self.Q = Q
        self.t = t
        self.margin = margin

    def fit(self, X, y=None):
        X = check_radial_array(X)
        self.radius_ = X.shape[1] - 1
        self.plan_ = PropagatorPlan.build(_check_Q(self.Q), self.radius_, self.t, self.margin)
        self.n_out_ = self.plan_.n_out
        return self

    def transform(self, X):
        check_is_fitted(self, "plan_")
        X = check_width(check_radial_array(X), self.radius_ + 1)
        p = self.plan_
        return _propagate_core(p.Q, X.T, self.t, p.grid.M, p.n_out).T

    def inverse_transform(self, U):
        check_is_fitted(self, "plan_")
        U = check_width(check_radial_array(U, "U"), self.n_out_ + 1, "U")
        back = PropagatorPlan.build(self.plan_.Q, self.n_out_, self.t, self.margin)
        return _propagate_core(back.Q, U.T, -self.t, back.grid.M, self.radius_).T


class PowerLawDecay(RegressorMixin, BaseEstimator):
    """Fit y ~ C t^slope by least squares in log-log coordinates."""

    def __init__(self, min_points=8, min_decades=1.0):
        self.min_points = min_points
        self.min_decades = min_decades

    def fit(self, t, y):
        t = check_times(t)
        fit = fit_decay(t, np.asarray(y, dtype=float), self.min_points, self.min_decades)
        self.fit_ = fit
        self.slope_ = fit.slope
        self.intercept_ = fit.intercept
        self.ci_ = fit.ci
        return self

    def predict(self, t):
        check_is_fitted(self, "fit_")
        return self.fit_.predict(check_times(t))

    def score(self, t, y, sample_weight=None):
        """R^2 of the fit in log space."""
        check_is_fitted(self, "fit_")
        ly = np.log(np.asarray(y, dtype=float))
        pred = np.log(self.predict(t))
        ss = np.sum((ly - pred) ** 2)
        tot = np.sum((ly - ly.mean()) ** 2)
        return 1.0 - ss / tot if tot > 0 else 1.0
