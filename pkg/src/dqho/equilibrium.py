"""Stationary state, effective frequency and temperature, thermalization flags.

In the no-pole regime the stationary covariance only depends on the bath
energy distribution ``E(w) = (w^2 Sqq(w) + Spp(w)) / 2``:

    Sigma_QQ = int gamma(w) |L(w)|^2 E(w) / w dw,   L(w) = int_0^inf u(t) e^{i w t} dt
    Sigma_PP = int gamma(w) |L(w)|^2 E(w) w dw

and ``L(w) = conj F(w + i0)`` turns these into ``(2/pi) int Im F ...`` forms.
Both routes are computed; the F-form is authoritative.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bath import arcoth, thermal_energy
from .exceptions import ConfigError, InvalidPreparationError, NotEquilibratingError
from .quadrature import adaptive_support_rule, hermite_fourier_cumulative, support_rule
from .response import compute_u_fourier, f_boundary, find_poles

__all__ = [
    "StationaryState",
    "Classification",
    "effective_temperature",
    "effective_frequency_temperature",
    "stationary_covariance",
    "stationary_state",
    "weak_damping_state",
    "classify",
]

ARCOTH_TOL = 1e-12


def effective_temperature(sqq, spp, tol=ARCOTH_TOL):
    """Temperature of the thermal state with variances ``sqq``, ``spp``.

    ``2 sqrt(sqq spp) = 1`` (a pure state) gives 0; values below ``1 - tol``
    violate the uncertainty bound and raise.
    """
    x = 2.0 * np.sqrt(sqq * spp)
    if x < 1.0 - tol:
        raise InvalidPreparationError(f"2 sqrt(Sqq Spp) = {x:.15g} < 1")
    omega = np.sqrt(spp / sqq)
    if x <= 1.0:
        return 0.0
    return float(0.5 * omega / arcoth(x))


def effective_frequency_temperature(sigma):
    """``(Omega_inf, T_inf)`` of a stationary covariance."""
    sigma = np.asarray(sigma, dtype=float)
    sqq, spp = sigma[0, 0], sigma[1, 1]
    if sqq <= 0 or spp <= 0:
        raise InvalidPreparationError("stationary variances must be positive")
    return float(np.sqrt(spp / sqq)), effective_temperature(sqq, spp)


@dataclass(frozen=True)
class StationaryState:
    sigma: np.ndarray
    omega_inf: float
    t_inf: float
    sigma_u_route: Optional[np.ndarray] = None
    route_discrepancy: Optional[float] = None
    u_route_converged: bool = False
    u_window: float = 0.0
    u_tail: Optional[float] = None

    def as_dict(self):
        out = {
            "sigma_inf": self.sigma.tolist(),
            "omega_inf": self.omega_inf,
            "t_inf": self.t_inf,
            "routes": {
                "f_form": self.sigma.tolist(),
                "u_form": None if self.sigma_u_route is None else self.sigma_u_route.tolist(),
                "relative_discrepancy": self.route_discrepancy,
                "u_form_converged": self.u_route_converged,
                "u_window": self.u_window,
                "u_tail": self.u_tail,
            },
        }
        return out


def _require_equilibrating(spec, omega):
    poles = find_poles(spec, omega)
    if poles or spec.is_null:
        raise NotEquilibratingError(
            f"F(z) has {len(poles)} real pole(s); no stationary state", diagnostics=poles)
    return poles


def _f_form(spec, omega, prep, tol):
    lo, hi = spec.support

    def integrand(w):
        rho = (2.0 / np.pi) * f_boundary(spec, omega, w).imag
        e = prep.energy(w)
        return np.vstack([rho * e / w, rho * e * w])

    nodes, wts = adaptive_support_rule(integrand, lo, hi, tol=tol, points=spec.breakpoints)
    sqq, spp = integrand(nodes) @ wts
    return np.array([[sqq, 0.0], [0.0, spp]])


def _u_form(rf, spec, prep):
    lo, hi = spec.support
    w, q = support_rule(lo, hi, n_panels=48, order=8, t_max=rf.t_max, fraction=0.25,
                        points=spec.breakpoints)
    lam = np.empty(w.size, complex)
    for i in range(0, w.size, 256):
        sl = slice(i, i + 256)
        cum = hermite_fourier_cumulative(rf.times, rf.u, rf.udot, w[sl],
                                         t_eval=[rf.t_max])[0]
        lam[sl] = np.conj(cum)
    base = q * spec(w) * np.abs(lam) ** 2 * prep.energy(w)
    return np.array([[np.sum(base / w), 0.0], [0.0, np.sum(base * w)]])


def stationary_covariance(spec, omega, prep, rf=None, tol=1e-12, window=None,
                          max_window=None, decay=1e-6):
    """Stationary covariance from the F-form, cross-checked by the u-form.

    The u-form truncates the half-line transform of u at the end of a time
    window that is doubled until ``max |u|`` over its last 10 % drops below
    ``decay * max |u|`` or the cap is reached. Chain-like baths with square-root
    band edges have power-law tails, so the u-form often stays unconverged; the
    report says so.

    Returns
    -------
    StationaryState
    """
    _require_equilibrating(spec, omega)
    sigma = _f_form(spec, omega, prep, tol)
    omega_inf, t_inf = effective_frequency_temperature(sigma)
    lo, hi = spec.support
    if rf is None:
        scale = max(hi, omega)
        window = window or 100.0 / max(spec.width, 1e-3 * scale)
        max_window = max_window or 8.0 * window
        dt = 0.08 / scale
        while True:
            times = np.arange(int(np.ceil(window / dt)) + 1) * dt
            rf = compute_u_fourier(spec, omega, times)
            if _tail(rf) <= decay or window >= max_window:
                break
            window *= 2.0
    tail = _tail(rf)
    sig_u = _u_form(rf, spec, prep)
    disc = float(np.max(np.abs(sig_u - sigma)) / np.max(np.abs(sigma)))
    return StationaryState(sigma, omega_inf, t_inf, sig_u, disc, bool(tail <= decay),
                           rf.t_max, tail)


def _tail(rf):
    n = max(1, rf.times.size // 10)
    return float(np.max(np.abs(rf.u[-n:])) / np.max(np.abs(rf.u)))


def stationary_state(spec, omega, prep, tol=1e-12):
    """F-form stationary state only (no u-route cross-check)."""
    _require_equilibrating(spec, omega)
    sigma = _f_form(spec, omega, prep, tol)
    return StationaryState(sigma, *effective_frequency_temperature(sigma))


def weak_damping_state(spec, omega, prep):
    """Vanishing-coupling limit: ``Omega_inf = Omega`` and ``T_inf`` from E(Omega)."""
    if float(spec(omega)) <= 0:
        raise ConfigError("weak-damping limit needs gamma(Omega) > 0")
    e = float(prep.energy(omega))
    if e < 0.5 * omega * (1 - ARCOTH_TOL):
        raise InvalidPreparationError("bath energy below the zero-point value at Omega")
    return float(omega), effective_temperature(e / omega**2, e)


@dataclass
class Classification:
    flags: dict
    omega_inf: Optional[float] = None
    t_inf: Optional[float] = None
    sigma_inf: Optional[np.ndarray] = None
    poles: list = field(default_factory=list)
    residual_profile: Optional[dict] = None
    t3_temperature: Optional[float] = None

    def as_dict(self):
        return {
            "flags": self.flags,
            "omega_inf": self.omega_inf,
            "t_inf": self.t_inf,
            "sigma_inf": None if self.sigma_inf is None else self.sigma_inf.tolist(),
            "poles": [p.as_dict() for p in self.poles],
            "residual_profile": self.residual_profile,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)


def _t3_profile(spec, prep, n=33):
    lo, hi = spec.support
    center = 0.5 * (lo + hi)
    e_c = float(prep.energy(center))
    t_fit = effective_temperature(e_c / center**2, e_c)
    w = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    ref = thermal_energy(t_fit, w)
    resid = np.abs(prep.energy(w) - ref) / ref
    return t_fit, {"omega": w.tolist(), "relative_residual": resid.tolist(),
                   "max": float(resid.max())}


def classify(spec, omega, prep, tol2=1e-3, tol3=1e-6):
    """Equilibration and thermalization flags with diagnostics.

    ``E0`` and ``E1E2`` hold iff F has no real poles. ``T1`` holds whenever a
    stationary Gaussian exists. ``T2`` tests equipartition
    ``|Omega_inf^2 - Omega^2| / Omega^2 < tol2``. ``T3`` fits a temperature
    from E at the band centre and requires the coth form across the band to
    relative accuracy ``tol3``. Flags that do not apply are ``None``.
    """
    poles = find_poles(spec, omega)
    t_fit, profile = (None, None)
    if not spec.is_null:
        t_fit, profile = _t3_profile(spec, prep)
    t3 = None if profile is None else bool(profile["max"] < tol3)
    if poles or spec.is_null:
        flags = {"E0": False, "E1E2": False, "T1": None, "T2": None, "T3": None}
        return Classification(flags, poles=poles, residual_profile=profile,
                              t3_temperature=t_fit)
    st = stationary_state(spec, omega, prep)
    t2 = bool(abs(st.omega_inf**2 - omega**2) / omega**2 < tol2)
    flags = {"E0": True, "E1E2": True, "T1": True, "T2": t2, "T3": t3}
    return Classification(flags, st.omega_inf, st.t_inf, st.sigma, poles, profile, t_fit)
