import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from homtree.errors import DomainError
from homtree.estimators import AbelTransformer, PowerLawDecay, SchrodingerPropagator, SphericalTransformer
from homtree.spectral import SpectralGrid, spherical_transform
from homtree.tree import RadialFunction


def rows(rng, n, N):
    return rng.standard_normal((n, N + 1)) + 1j * rng.standard_normal((n, N + 1))


def test_params_and_clone():
    est = SphericalTransformer(Q=3, method="density")
    assert est.get_params() == {"Q": 3, "n_nodes": None, "method": "density"}
    c = clone(est).set_params(Q=5)
    assert c.Q == 5 and est.Q == 3


@pytest.mark.parametrize("est", [SphericalTransformer(), AbelTransformer(), SchrodingerPropagator()])
def test_not_fitted(est):
    with pytest.raises(NotFittedError):
        est.transform(np.ones((1, 3)))


@pytest.mark.parametrize("method", ["abel", "density"])
def test_spherical_roundtrip(method):
    X = rows(np.random.default_rng(0), 4, 10)
    est = SphericalTransformer(Q=2, method=method).fit(X)
    Y = est.transform(X)
    ref = spherical_transform(RadialFunction(2, X[1]), SpectralGrid(2, est.grid_.M)).values
    np.testing.assert_allclose(Y[1], ref, atol=1e-12)
    np.testing.assert_allclose(est.inverse_transform(Y), X, atol=1e-10)


def test_abel_roundtrip():
    X = rows(np.random.default_rng(1), 3, 8)
    est = AbelTransformer(Q=3).fit(X)
    np.testing.assert_allclose(est.inverse_transform(est.transform(X)), X, atol=1e-12)


def test_propagator_roundtrip_and_width():
    X = rows(np.random.default_rng(2), 3, 4)
    est = SchrodingerPropagator(Q=2, t=5.0).fit(X)
    U = est.transform(X)
    assert U.shape == (3, est.n_out_ + 1)
    np.testing.assert_allclose(est.inverse_transform(U), X, atol=1e-10)
    with pytest.raises(DomainError, match="columns"):
        est.transform(X[:, :3])


def test_validation_rejects_bad_input():
    est = AbelTransformer()
    with pytest.raises(DomainError):
        est.fit(np.array([[np.nan, 1.0]]))
    with pytest.raises(DomainError):
        est.fit(np.ones((2, 2, 2)))
    with pytest.raises(DomainError):
        est.fit(np.array(["a", "b"]))


def test_pipeline():
    X = rows(np.random.default_rng(3), 2, 5)
    pipe = make_pipeline(SchrodingerPropagator(t=1.0), AbelTransformer())
    out = pipe.fit_transform(X)
    assert out.shape[0] == 2


def test_power_law_regressor():
    t = np.geomspace(1, 1000, 20)
    y = 2.0 * t ** -1.5
    reg = PowerLawDecay().fit(t, y)
    assert reg.slope_ == pytest.approx(-1.5)
    np.testing.assert_allclose(reg.predict(t), y, rtol=1e-10)
    assert reg.score(t, y) == pytest.approx(1.0)
