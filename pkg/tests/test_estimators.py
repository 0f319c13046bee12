import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dqho.bath import thermal_preparation
from dqho.chain import ChainParams, chain_spectral_density, quench_preparation
from dqho.estimators import MomentPropagator, ResponseFunctionEstimator, StationaryStateEstimator
from dqho.exceptions import ConfigError
from dqho.propagation import PhaseMoments, propagate_moments

from conftest import chain_response

REF_CHAIN = ChainParams(0.6, 0.5, 1.0)


def test_response_estimator_decoupled():
    est = ResponseFunctionEstimator(omega=2.0, t_max=10.0, dt=0.01).fit()
    t = np.array([[0.5], [3.0]])
    out = est.transform(t)
    assert out.shape == (2, 3)
    assert np.allclose(est.predict(t), np.sin(2.0 * t.ravel()) / 2.0, atol=1e-12)
    assert est.n_poles_ == 1


def test_response_estimator_matches_functional(ref_chain):
    _, spec, rf = ref_chain
    est = ResponseFunctionEstimator(spec, omega=1.0, t_max=60.0).fit()
    t = np.array([1.0, 10.0, 40.0])
    assert np.allclose(est.predict(t), rf.evaluate(t)[0], atol=1e-12)


def test_response_estimator_volterra_agrees():
    spec = chain_spectral_density(REF_CHAIN)
    a = ResponseFunctionEstimator(spec, omega=1.0, t_max=20.0, dt=0.01).fit()
    b = clone(a).set_params(method="volterra").fit()
    t = np.linspace(0, 20, 41)
    assert np.max(np.abs(a.predict(t) - b.predict(t))) < 1e-4


def test_response_estimator_errors():
    with pytest.raises(NotFittedError):
        ResponseFunctionEstimator().predict([1.0])
    with pytest.raises(ConfigError):
        ResponseFunctionEstimator(method="magic").fit()
    with pytest.raises(ConfigError):
        ResponseFunctionEstimator(spectral_density="chain").fit()


def test_stationary_estimator():
    p = ChainParams(0.6, 0.2, 1.0)
    est = StationaryStateEstimator(chain_spectral_density(p), 1.0, quench_preparation(p, 0.5)).fit()
    assert est.equilibrates_
    assert est.t_inf_ == pytest.approx(0.502275170157829385814, rel=1e-9)
    assert est.flags_["T3"] is False
    assert est.get_params()["tol2"] == 1e-3


def test_stationary_estimator_poles():
    p = ChainParams(0.8, 0.5, np.sqrt(1.6))
    est = StationaryStateEstimator(chain_spectral_density(p), p.omega).fit()
    assert not est.equilibrates_ and est.sigma_inf_ is None


def test_moment_propagator(ref_chain):
    _, spec, rf = ref_chain
    prep = thermal_preparation(0.5)
    est = MomentPropagator(spec, 1.0, prep, t=20.0).fit()
    X = np.array([[0.0, 0.0, 0.5, 0.0, 0.5], [1.0, -0.5, 1.0, 0.1, 0.3]])
    out = est.transform(X)
    for row, res in zip(X, out):
        m0 = PhaseMoments(row[:2], [[row[2], row[3]], [row[3], row[4]]])
        ref = propagate_moments(rf, spec, prep, m0, 20.0)
        assert np.allclose(res, [*ref.X, ref.sigma[0, 0], ref.sigma[0, 1], ref.sigma[1, 1]],
                           atol=1e-8)
    with pytest.raises(ConfigError):
        est.transform(X[:, :3])
