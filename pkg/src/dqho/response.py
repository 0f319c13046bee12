"""Response function u(t) of the damped oscillator and its real-axis poles.

``u`` solves ``u'' = -Omega^2 u + int_0^t K(t - s) u(s) ds`` with ``u(0) = 0``,
``u'(0) = 1``. Its Laplace-type transform is
``F(z) = 1 / (Omega^2 - z^2 + Gamma(z))`` and

    u(t) = (2/pi) int sin(w t) Im F(w + i0) dw + sum_i xi_i sin(Omega_i t) / Omega_i

where the sum runs over real poles ``Omega_i`` of F outside the bath support,
each with weight ``xi_i = 1 / |d F^{-1} / d z^2|``.
"""

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import optimize

from .bath import DiscreteBath, SpectralDensity, positivity_check
from .exceptions import (
    AliasingError,
    ConfigError,
    PoleHitError,
    PositivityError,
    QuadratureError,
    RootFindingError,
    VolterraInstabilityError,
)
from .quadrature import adaptive_support_rule, hermite_fourier_cumulative

__all__ = [
    "Pole",
    "ResponseFunction",
    "VolterraSolution",
    "EquilibrationReport",
    "f_boundary",
    "find_poles",
    "continuum_spectrum",
    "compute_u_fourier",
    "compute_u_volterra",
    "partial_fourier",
    "propagator_matrices",
    "equilibrates",
    "check_time_grid",
]

EDGE_EPS = 1e-12


@dataclass(frozen=True)
class Pole:
    """Isolated real pole of F at frequency ``omega`` with weight ``weight``."""

    omega: float
    weight: float
    side: str = "above"
    marginal: bool = False

    def as_dict(self):
        return {"omega": self.omega, "weight": self.weight}


def f_boundary(spec, omega, z_omega, pole_tol=1e-12):
    """Boundary value ``F(w + i0)`` on real frequencies ``z_omega``."""
    w = np.atleast_1d(np.asarray(z_omega, dtype=float))
    denom = omega**2 - w**2 + spec.boundary(w)
    scale = max(omega**2, spec.support[1] ** 2, 1.0)
    hit = np.abs(denom) < pole_tol * scale
    if np.any(hit):
        raise PoleHitError(float(w[np.argmax(hit)]))
    return 1.0 / denom


def _pole_function(spec, omega):
    def g(w2):
        return omega**2 - w2 + spec.real_outside(w2)
    return g


def find_poles(spec, omega, weights=True, edge_tol=1e-6):
    """Real poles of F outside the bath support.

    ``1/F`` restricted to real ``z^2`` outside the support decreases strictly,
    so each of the two gaps (below and above the band) holds at most one root;
    the sign of ``1/F`` at the gap ends brackets it.

    Parameters
    ----------
    edge_tol : float
        Poles closer than ``edge_tol * width`` (in frequency) to a band edge are
        flagged ``marginal``.

    Returns
    -------
    list of Pole, ascending in frequency
    """
    if omega <= 0:
        raise ConfigError("oscillator frequency must be positive")
    pos = positivity_check(spec, omega)
    if not pos.ok:
        raise PositivityError(
            f"Hamiltonian unbounded below: Omega^2 - int gamma/w = {pos.margin:.6g}")
    lo, hi = spec.support
    g = _pole_function(spec, omega)
    width = max(spec.width, 1e-300)
    found = []

    def solve(a, b, side):
        try:
            w2 = optimize.brentq(g, a, b, xtol=1e-15 * max(b, 1.0), rtol=1e-15, maxiter=500)
        except (ValueError, RuntimeError) as exc:
            raise RootFindingError(f"pole bracketing failed on [{a}, {b}]: {exc}") from None
        w = float(np.sqrt(w2))
        xi = 1.0 / (1.0 - spec.derivative_outside(w2)) if weights else float("nan")
        near = min(abs(w - lo), abs(w - hi)) < edge_tol * width
        found.append(Pole(w, float(xi), side, bool(near and not spec.is_null)))

    if spec.is_null:
        return [Pole(float(omega), 1.0, "isolated", False)]
    if lo > 0:
        top = lo * lo * (1.0 - EDGE_EPS)
        if pos.margin > 0 and g(top) < 0:
            solve(0.0, top, "below")
    bottom = hi * hi * (1.0 + EDGE_EPS)
    if g(bottom) > 0:
        upper = max(2.0 * bottom, 2.0 * omega**2)
        for _ in range(200):
            if g(upper) < 0:
                break
            upper *= 2.0
        else:
            raise RootFindingError("could not bracket the pole above the band")
        solve(bottom, upper, "above")
    return found


@dataclass(frozen=True)
class ContinuumSpectrum:
    """Quadrature nodes and weights ``W_j = w_j (2/pi) Im F(omega_j + i0)``."""

    nodes: np.ndarray
    weights: np.ndarray

    def evaluate(self, t, derivative=0):
        """Continuum part of u (derivative 0, 1 or 2) at times ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w, W = self.nodes, self.weights
        coef = W * w**derivative * (1.0 if derivative != 2 else -1.0)
        trig = np.cos if derivative == 1 else np.sin
        out = np.empty(t.shape)
        chunk = max(1, 4_000_000 // max(w.size, 1))
        for i in range(0, t.size, chunk):
            out[i:i + chunk] = trig(np.multiply.outer(t[i:i + chunk], w)) @ coef
        return out

    @property
    def total_weight(self):
        """Continuum contribution to ``u'(0)``."""
        return float(np.sum(self.weights * self.nodes))


def continuum_spectrum(spec, omega, t_max=0.0, tol=1e-12):
    lo, hi = spec.support
    if spec.is_null:
        return ContinuumSpectrum(np.empty(0), np.empty(0))

    def rho(w):
        f = f_boundary(spec, omega, w)
        r = (2.0 / np.pi) * f.imag
        return np.vstack([r, r * w])

    nodes, wts = adaptive_support_rule(rho, lo, hi, tol=tol, t_max=max(t_max, 1.0),
                                       points=spec.breakpoints)
    return ContinuumSpectrum(nodes, wts * (2.0 / np.pi) * f_boundary(spec, omega, nodes).imag)


def check_time_grid(times, omega_max=None):
    """Validate a uniform grid starting at 0; returns the step."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ConfigError("time grid must be one-dimensional with at least two points")
    if times[0] != 0.0:
        raise ConfigError("time grid must start at t = 0")
    dt = times[1] - times[0]
    if dt <= 0 or not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-12 * dt):
        raise ConfigError("time grid must be uniform and increasing")
    if omega_max is not None and dt > np.pi / (8.0 * omega_max):
        raise AliasingError(
            f"dt={dt:.4g} exceeds pi/(8 omega_max)={np.pi / (8 * omega_max):.4g}")
    return dt


@dataclass
class ResponseFunction:
    """Sampled response function with derivatives.

    ``poles`` and ``spectrum`` are populated by the spectral method, which can
    then evaluate u off-grid exactly; otherwise cubic Hermite interpolation of
    the samples is used.
    """

    times: np.ndarray
    u: np.ndarray
    udot: np.ndarray
    uddot: np.ndarray
    omega: float
    method: str
    poles: list = field(default_factory=list)
    spectrum: Optional[ContinuumSpectrum] = None
    u_continuum: Optional[np.ndarray] = None
    u_poles: Optional[np.ndarray] = None
    f_boundary: Optional[tuple] = None   # (omega grid, F(omega + i0)) across the support

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def t_max(self):
        return float(self.times[-1])

    def evaluate(self, t):
        """(u, u', u'') at arbitrary times in ``[0, t_max]``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-12)):
            raise ConfigError("evaluation time outside the sampled window")
        if self.spectrum is not None:
            out = [self.spectrum.evaluate(t, d) for d in range(3)]
            for p in self.poles:
                out[0] += p.weight * np.sin(p.omega * t) / p.omega
                out[1] += p.weight * np.cos(p.omega * t)
                out[2] -= p.weight * p.omega * np.sin(p.omega * t)
            return tuple(out)
        return (_hermite(self.times, self.u, self.udot, t),
                _hermite(self.times, self.udot, self.uddot, t),
                np.interp(t, self.times, self.uddot))

    def propagator(self, t):
        """Homogeneous propagator ``U(t) = [[u', u], [u'', u']]``, shape (k, 2, 2)."""
        u, du, ddu = self.evaluate(t)
        return np.stack([np.stack([du, u], -1), np.stack([ddu, du], -1)], -2)

    def tail_amplitude(self, fraction=0.1):
        """Largest |u| over the last ``fraction`` of the window."""
        n = max(1, int(np.ceil(fraction * self.times.size)))
        return float(np.max(np.abs(self.u[-n:])))

    def to_csv(self, path, header_lines=()):
        uc = self.u_continuum if self.u_continuum is not None else np.full_like(self.u, np.nan)
        up = self.u_poles if self.u_poles is not None else np.full_like(self.u, np.nan)
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t", "u", "udot", "u_continuum", "u_poles"])
            for row in zip(self.times, self.u, self.udot, uc, up):
                w.writerow([repr(float(v)) for v in row])

    def poles_to_json(self, path):
        with open(path, "w") as fh:
            json.dump([p.as_dict() for p in self.poles], fh, indent=2)


def _hermite(times, f, df, t):
    dt = times[1] - times[0]
    k = np.clip(np.floor(t / dt).astype(int), 0, times.size - 2)
    s = t / dt - k
    return ((2 * s**3 - 3 * s**2 + 1) * f[k] + (s**3 - 2 * s**2 + s) * dt * df[k]
            + (-2 * s**3 + 3 * s**2) * f[k + 1] + (s**3 - s**2) * dt * df[k + 1])


def compute_u_fourier(spec, omega, times, tol=1e-12, sum_rule_tol=1e-6):
    """Response function from the spectral representation.

    Parameters
    ----------
    spec : SpectralDensity
    omega : float
        Bare oscillator frequency.
    times : array
        Uniform grid starting at 0.

    Raises
    ------
    PositivityError
        If ``Omega^2 < int gamma/w``.
    QuadratureError
        If the sum rule ``u'(0) = 1`` is violated by more than ``sum_rule_tol``.
    """
    times = np.asarray(times, dtype=float)
    poles = find_poles(spec, omega)
    omega_max = max([spec.support[1], omega] + [p.omega for p in poles])
    check_time_grid(times, omega_max)
    spectrum = continuum_spectrum(spec, omega, t_max=times[-1], tol=tol)
    total = spectrum.total_weight + sum(p.weight for p in poles)
    if abs(total - 1.0) > sum_rule_tol:
        raise QuadratureError(f"sum rule u'(0) = 1 violated: got {total:.10g}",
                              estimate=abs(total - 1.0))
    uc = spectrum.evaluate(times)
    up = np.zeros_like(times)
    dup = np.zeros_like(times)
    ddup = np.zeros_like(times)
    for p in poles:
        up += p.weight * np.sin(p.omega * times) / p.omega
        dup += p.weight * np.cos(p.omega * times)
        ddup -= p.weight * p.omega * np.sin(p.omega * times)
    f_grid = None
    if not spec.is_null:
        lo, hi = spec.support
        w = lo + (hi - lo) * (np.arange(256) + 0.5) / 256
        f_grid = (w, f_boundary(spec, omega, w))
    return ResponseFunction(
        f_boundary=f_grid,
        times=times, u=uc + up, udot=spectrum.evaluate(times, 1) + dup,
        uddot=spectrum.evaluate(times, 2) + ddup, omega=float(omega), method="fourier",
        poles=poles, spectrum=spectrum, u_continuum=uc, u_poles=up)


@dataclass
class VolterraSolution:
    """Fundamental solutions of the integro-differential equation.

    ``u1`` starts from (1, 0) and ``u2`` from (0, 1). For a constant frequency
    ``u1 = u2'``.
    """

    times: np.ndarray
    u1: np.ndarray
    u1dot: np.ndarray
    u2: np.ndarray
    u2dot: np.ndarray
    u2ddot: np.ndarray
    omega: Union[float, Callable]

    def response(self):
        if callable(self.omega):
            raise ConfigError("a single response function needs a constant frequency")
        return ResponseFunction(self.times, self.u2, self.u2dot, self.u2ddot,
                                float(self.omega), "volterra")


def _kernel_half_grid(kernel, dt, n):
    tau = 0.5 * dt * np.arange(2 * n + 3)
    if isinstance(kernel, DiscreteBath):
        return kernel.damping_kernel(tau)
    if isinstance(kernel, SpectralDensity):
        from .bath import damping_kernel
        return damping_kernel(kernel, tau)
    return np.asarray(kernel(tau), dtype=float)


def compute_u_volterra(kernel, omega, times, omega_max=None, growth_limit=1e6):
    """Direct time stepping of the integro-differential equation.

    Classical RK4 with the memory integral on the trapezoid rule. Since
    ``K(0) = 0`` for any damping kernel the newest-point contribution is known
    at every stage, so the scheme stays explicit.

    Parameters
    ----------
    kernel : callable, SpectralDensity or DiscreteBath
        Memory kernel K(t); a callable must accept an array of times.
    omega : float or callable
        Bare frequency, optionally time dependent.
    times : array
        Uniform grid starting at 0.
    """
    times = np.asarray(times, dtype=float)
    if not callable(omega) and omega <= 0:
        raise ConfigError("oscillator frequency must be positive")
    h = check_time_grid(times, omega_max)
    n = times.size - 1
    kh = _kernel_half_grid(kernel, h, n)
    om2 = (lambda t: omega(t) ** 2) if callable(omega) else (lambda t: omega**2)

    U = np.zeros((n + 1, 2))
    V = np.zeros((n + 1, 2))
    A = np.zeros((n + 1, 2))
    U[0] = [1.0, 0.0]
    V[0] = [0.0, 1.0]
    scale = 1.0 + (om2(0.0) if not callable(omega) else om2(0.0))

    def history(m, s):
        # trapezoid over [0, t_m] of K(t_m + s h/2 - tau) u(tau)
        if m == 0:
            return np.zeros(2)
        k = kh[s:s + 2 * m + 1:2][::-1]
        acc = k @ U[:m + 1]
        acc -= 0.5 * (k[0] * U[0] + k[-1] * U[m])
        return h * acc

    A[0] = -om2(0.0) * U[0]
    for m in range(n):
        t = times[m]
        u, v = U[m], V[m]
        h0, h1, h2 = history(m, 0), history(m, 1), history(m, 2)
        k1u, k1v = v, -om2(t) * u + h0
        ua = u + 0.5 * h * k1u
        k2u = v + 0.5 * h * k1v
        k2v = -om2(t + 0.5 * h) * ua + h1 + 0.25 * h * (kh[1] * u + kh[0] * ua)
        ub = u + 0.5 * h * k2u
        k3u = v + 0.5 * h * k2v
        k3v = -om2(t + 0.5 * h) * ub + h1 + 0.25 * h * (kh[1] * u + kh[0] * ub)
        uc = u + h * k3u
        k4u = v + h * k3v
        k4v = -om2(t + h) * uc + h2 + 0.5 * h * (kh[2] * u + kh[0] * uc)
        U[m + 1] = u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        V[m + 1] = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        A[m] = k1v
        energy = V[m + 1] ** 2 + scale * U[m + 1] ** 2
        if not np.all(np.isfinite(energy)) or np.any(energy > growth_limit * scale):
            raise VolterraInstabilityError(
                f"solution blew up at t={times[m + 1]:.4g}", suggested_dt=0.25 * h)
    A[n] = -om2(times[n]) * U[n] + history(n, 0)
    return VolterraSolution(times, U[:, 0], V[:, 0], U[:, 1], V[:, 1], A[:, 1], omega)


def partial_fourier(rf, t, omegas):
    """Finite-time transforms ``u~(t, w) = int_0^t u(s) e^{i w (t - s)} ds``.

    Returns ``(u_tilde, v_tilde)`` of shape (k, m), ``v_tilde`` built from u'.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(t > rf.t_max * (1 + 1e-12)) or np.any(t < 0):
        raise ConfigError("partial Fourier time outside the sampled window")
    t = np.minimum(t, rf.t_max)
    phase = np.exp(1j * np.multiply.outer(t, omegas))
    cu = hermite_fourier_cumulative(rf.times, rf.u, rf.udot, omegas, t_eval=t)
    cv = hermite_fourier_cumulative(rf.times, rf.udot, rf.uddot, omegas, t_eval=t)
    return phase * cu, phase * cv


def propagator_matrices(rf, t, omegas):
    """``U(t)`` (k, 2, 2) and the bath-transfer blocks ``U(t, w)`` (k, m, 2, 2)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(omegas <= 0):
        raise ConfigError("bath frequencies must be positive")
    ut, vt = partial_fourier(rf, t, omegas)
    blocks = np.stack([np.stack([ut.real, ut.imag / omegas], -1),
                       np.stack([vt.real, vt.imag / omegas], -1)], -2)
    return rf.propagator(t), blocks


@dataclass(frozen=True)
class EquilibrationReport:
    status: str          # "yes", "no" or "marginal"
    poles: list
    tail_amplitude: float
    window: float
    tail_decayed: bool = False

    def __bool__(self):
        return self.status == "yes"


def equilibrates(spec, omega, window=None, decay=1e-3, max_window=None):
    """Classify whether u(t) decays to zero.

    The pole test decides: no real poles gives "yes", real poles give "no",
    and a pole flagged as merging with a band edge gives "marginal". The
    continuum tail ``max |u_c|`` over the last 10 % of a window (doubled up to
    ``max_window`` until it drops below ``decay`` times the maximum) is
    reported as a finite-horizon diagnostic only; power-law tails can keep it
    above the threshold although u -> 0.
    """
    poles = find_poles(spec, omega)
    if any(p.marginal for p in poles):
        return EquilibrationReport("marginal", poles, float("nan"), 0.0)
    if spec.is_null:
        return EquilibrationReport("no", poles, 1.0 / omega, 0.0)
    status = "no" if poles else "yes"
    scale = max([spec.support[1], omega] + [p.omega for p in poles])
    window = window or 200.0 / max(spec.width, 1e-3 * scale)
    max_window = max_window or 16.0 * window
    dt = np.pi / (8.0 * scale)
    while True:
        times = np.arange(int(np.ceil(window / dt)) + 1) * dt
        cont = compute_u_fourier(spec, omega, times).u_continuum
        n = max(1, times.size // 10)
        tail = float(np.max(np.abs(cont[-n:])))
        decayed = tail <= decay * float(np.max(np.abs(cont)))
        if decayed or window >= max_window:
            return EquilibrationReport(status, poles, tail, float(times[-1]), bool(decayed))
        window *= 2.0
