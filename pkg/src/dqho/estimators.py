"""Thin scikit-learn style wrappers around the functional API.

Hyperparameters go to ``__init__``; ``fit`` does the expensive solve and
stores results in trailing-underscore attributes. Nothing is learned from
data, so ``fit`` ignores ``X`` and ``y``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bath import SpectralDensity, thermal_preparation
from .equilibrium import classify, stationary_state
from .exceptions import ConfigError
from .propagation import PhaseMoments, propagate_trajectory
from .response import compute_u_fourier, compute_u_volterra

__all__ = ["ResponseFunctionEstimator", "StationaryStateEstimator", "MomentPropagator"]


def _spec(spec):
    if spec is None:
        return SpectralDensity.null()
    if not isinstance(spec, SpectralDensity):
        raise ConfigError("spectral_density must be a SpectralDensity")
    return spec


def _solve(spec, omega, method, t_max, dt):
    times = np.arange(int(round(t_max / dt)) + 1) * dt
    if method == "fourier":
        return compute_u_fourier(spec, omega, times)
    if method == "volterra":
        return compute_u_volterra(spec, omega, times,
                                  omega_max=max(spec.support[1], omega)).response()
    raise ConfigError(f"unknown method {method!r}")


class ResponseFunctionEstimator(BaseEstimator, TransformerMixin):
    """Response function u(t) of the damped oscillator.

    ``transform`` maps a column of times to ``(u, u', u'')``; ``predict``
    returns u alone.
    """

    def __init__(self, spectral_density=None, omega=1.0, method="fourier", t_max=50.0, dt=0.05):
        self.spectral_density = spectral_density
        self.omega = omega
        self.method = method
        self.t_max = t_max
        self.dt = dt

    def fit(self, X=None, y=None):
        self.response_ = _solve(_spec(self.spectral_density), self.omega, self.method,
                                self.t_max, self.dt)
        self.poles_ = self.response_.poles
        self.n_poles_ = len(self.poles_)
        return self

    def transform(self, X):
        check_is_fitted(self, "response_")
        t = check_array(X, ensure_2d=False).ravel()
        return np.column_stack(self.response_.evaluate(t))

    def predict(self, X):
        return self.transform(X)[:, 0]


class StationaryStateEstimator(BaseEstimator):
    """Long-time state and thermalization flags for a bath preparation."""

    def __init__(self, spectral_density=None, omega=1.0, preparation=None, tol2=1e-3, tol3=1e-6):
        self.spectral_density = spectral_density
        self.omega = omega
        self.preparation = preparation
        self.tol2 = tol2
        self.tol3 = tol3

    def fit(self, X=None, y=None):
        spec = _spec(self.spectral_density)
        prep = self.preparation if self.preparation is not None else thermal_preparation(0.0)
        self.classification_ = classify(spec, self.omega, prep, self.tol2, self.tol3)
        self.flags_ = self.classification_.flags
        self.equilibrates_ = bool(self.flags_["E0"])
        if self.equilibrates_:
            st = stationary_state(spec, self.omega, prep)
            self.sigma_inf_, self.omega_inf_, self.t_inf_ = st.sigma, st.omega_inf, st.t_inf
        else:
            self.sigma_inf_ = self.omega_inf_ = self.t_inf_ = None
        return self


class MomentPropagator(BaseEstimator, TransformerMixin):
    """Propagates Gaussian initial states of the central oscillator.

    Rows of ``X`` are ``(q, p, Sqq, Sqp, Spp)``; ``transform`` returns the
    same columns at time ``t``.
    """

    def __init__(self, spectral_density=None, omega=1.0, preparation=None, t=10.0,
                 method="fourier", dt=0.05, tol=1e-8):
        self.spectral_density = spectral_density
        self.omega = omega
        self.preparation = preparation
        self.t = t
        self.method = method
        self.dt = dt
        self.tol = tol

    def fit(self, X=None, y=None):
        self.spec_ = _spec(self.spectral_density)
        self.preparation_ = (self.preparation if self.preparation is not None
                             else thermal_preparation(0.0))
        self.response_ = _solve(self.spec_, self.omega, self.method, self.t, self.dt)
        return self

    def transform(self, X):
        check_is_fitted(self, "response_")
        X = check_array(X)
        if X.shape[1] != 5:
            raise ConfigError("rows must be (q, p, Sqq, Sqp, Spp)")
        out = np.empty_like(X)
        for k, (q, p, sqq, sqp, spp) in enumerate(X):
            m0 = PhaseMoments([q, p], [[sqq, sqp], [sqp, spp]])
            Xt, S = propagate_trajectory(self.response_, self.spec_, self.preparation_, m0,
                                         [self.response_.t_max], self.tol)
            out[k] = [Xt[0, 0], Xt[0, 1], S[0, 0, 0], S[0, 0, 1], S[0, 1, 1]]
        return out
