"""Oscillator coupled to the centre of an infinite harmonic chain.

The chain has on-site frequency ``Omega_b`` and nearest-neighbour coupling
``k``; the central oscillator has bare frequency ``Omega`` and couples to its
two neighbours with strength ``k_c``. Dimensionless parameters:

* ``kappa_b = 2 k / Omega_b**2``  (chain band half-width in omega^2 units)
* ``kappa   = 2 k_c / Omega_b**2``
* ``omega_r = Omega / Omega_b``

Times are measured in units of ``1/Omega_b`` and temperatures in units of
``Omega_b`` where a function says "normalized".
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bath import SpectralDensity, arcoth, coth, thermal_energy, BathPreparation
from .exceptions import ConfigError, NotEquilibratingError, PositivityError
from .quadrature import gauss_legendre

__all__ = [
    "ChainParams",
    "chain_gamma",
    "chain_continuation",
    "chain_continuation_z2",
    "chain_spectral_density",
    "positivity_threshold",
    "chain_positivity",
    "NoPoleCondition",
    "no_pole_condition",
    "chain_poles_closed_form",
    "u_chain",
    "quench_preparation",
    "QuenchStationary",
    "quench_stationary",
    "weak_damping_temperature",
    "homogeneous_stationary",
    "parameter_scan",
    "pole_sweep_path",
]


@dataclass(frozen=True)
class ChainParams:
    kappa_b: float
    kappa: float
    omega_r: float
    omega_b: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.kappa_b <= 1.0:
            raise ConfigError(f"kappa_b must lie in (0, 1], got {self.kappa_b}")
        if self.kappa < 0:
            raise ConfigError("kappa must be non-negative")
        if self.omega_r <= 0 or self.omega_b <= 0:
            raise ConfigError("frequencies must be positive")

    @property
    def omega(self):
        """Bare frequency of the central oscillator."""
        return self.omega_r * self.omega_b

    @property
    def amplitude(self):
        return (self.kappa / self.kappa_b) ** 2

    @property
    def band(self):
        """Support of the spectral density in physical frequency units."""
        return (self.omega_b * np.sqrt(1.0 - self.kappa_b), self.omega_b * np.sqrt(1.0 + self.kappa_b))

    @property
    def site_coupling(self):
        """Nearest-neighbour spring constant k of the chain."""
        return 0.5 * self.kappa_b * self.omega_b**2

    @property
    def central_coupling(self):
        return 0.5 * self.kappa * self.omega_b**2


def chain_gamma(p, omega):
    """Spectral density seen by the central oscillator (both half-chains)."""
    omega = np.asarray(omega, dtype=float)
    y = (omega / p.omega_b) ** 2 - 1.0
    rad = np.clip(p.kappa_b**2 - y**2, 0.0, None)
    return (2.0 / np.pi) * p.amplitude * p.omega_b**2 * np.sqrt(rad)


def chain_continuation(p, z):
    """Gamma(z) for Im z >= 0, including the boundary from above."""
    return chain_continuation_z2(p, np.asarray(z, dtype=complex) ** 2)


def chain_continuation_z2(p, z2):
    """Gamma as a function of ``z^2`` (Im z^2 >= 0 for Re z > 0).

    Taking ``z^2`` directly avoids the rounding of squaring a square root,
    which the square-root branch points at the band edges amplify.
    """
    y = np.asarray(z2, dtype=complex) / p.omega_b**2 - 1.0
    return p.amplitude * p.omega_b**2 * (y - np.sqrt(y - p.kappa_b) * np.sqrt(y + p.kappa_b))


def chain_spectral_density(p):
    return SpectralDensity(
        p.band, lambda w: chain_gamma(p, w), gamma_z=lambda z: chain_continuation(p, z),
        description=f"chain kappa_b={p.kappa_b} kappa={p.kappa}")


def positivity_threshold(kappa_b, kappa):
    """Smallest omega_r^2 for which the Hamiltonian is bounded below."""
    return kappa**2 / (1.0 + np.sqrt(1.0 - kappa_b**2))


def chain_positivity(p):
    """(ok, margin) with the margin in omega_r^2 units."""
    margin = p.omega_r**2 - positivity_threshold(p.kappa_b, p.kappa)
    return bool(margin >= 0), float(margin)


class NoPoleCondition(NamedTuple):
    ok: bool
    lower: bool
    upper: bool
    lower_margin: float
    upper_margin: float


def no_pole_condition(p):
    """Analytic test that F(z) has no poles on the real axis.

    ``lower`` excludes a pole below the band, ``upper`` one above it.
    """
    excess = (p.kappa_b**2 - p.kappa**2) / p.kappa_b
    r2 = p.omega_r**2
    lower_margin = r2 - (1.0 - excess)
    upper_margin = (1.0 + excess) - r2
    return NoPoleCondition(bool(lower_margin >= 0 and upper_margin >= 0),
                           bool(lower_margin >= 0), bool(upper_margin >= 0),
                           float(lower_margin), float(upper_margin))


def chain_poles_closed_form(p, tol=1e-9):
    """Real poles from the quadratic obtained by squaring the pole condition.

    Returns normalized pole frequencies ``Omega_i / Omega_b`` in ascending order.
    """
    a, kb = p.amplitude, p.kappa_b
    d = p.omega_r**2 - 1.0
    coeffs = [1.0 - 2.0 * a, 2.0 * d * (a - 1.0), d * d + a * a * kb * kb]
    if abs(coeffs[0]) < 1e-14:
        roots = np.array([-coeffs[2] / coeffs[1]]) if coeffs[1] != 0 else np.empty(0)
    else:
        roots = np.roots(coeffs)
    out = []
    for y in roots:
        if abs(np.imag(y)) > 1e-12:
            continue
        y = float(np.real(y))
        if abs(y) <= kb or y <= -1.0:
            continue
        branch = np.sign(y) * np.sqrt(y * y - kb * kb)
        # unsquared condition: omega_r^2 - 1 - y + a*(y - branch) = 0
        if abs(d - y + a * (y - branch)) < tol * max(1.0, abs(y)):
            out.append(np.sqrt(1.0 + y))
    return np.sort(np.array(out))


def _u_chain_integral(p, t_bar, n_panels=None, order=16):
    """Continuum u(t) in normalized units via the substitution w^2 = 1 + kappa_b sin(theta)."""
    kb, k2, r2 = p.kappa_b, p.kappa**2, p.omega_r**2
    t_bar = np.asarray(t_bar, dtype=float)
    t_max = float(np.max(t_bar)) if t_bar.size else 0.0
    # d omega / d theta <= kb / (2 sqrt(1 - kb)) (and <= 1/sqrt 2 at kb = 1)
    slope = kb / (2.0 * np.sqrt(max(1.0 - kb, 0.125)))
    n = max(n_panels or 256, int(np.ceil(np.pi * slope * t_max / (0.25 * 2 * np.pi))) + 1)
    x, w = gauss_legendre(order)
    edges = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n + 1)
    theta = (edges[:-1, None] + np.diff(edges)[:, None] * x).ravel()
    wt = (np.diff(edges)[:, None] * w).ravel()
    w2 = 1.0 + kb * np.sin(theta)
    wbar = np.sqrt(w2)
    s = kb * np.cos(theta)
    xx, yy = w2 - r2, w2 - 1.0
    den = kb * kb * xx * xx - 2.0 * k2 * xx * yy + k2 * k2
    # (2/pi) Im F d omega = (2 k^2 / pi) s / den * s / (2 wbar) d theta
    weight = wt * (k2 / np.pi) * s * s / (den * wbar)
    u = np.empty_like(t_bar)
    flat = t_bar.ravel()
    chunk = max(1, 4_000_000 // max(weight.size, 1))
    out = u.ravel()
    for i in range(0, flat.size, chunk):
        out[i:i + chunk] = np.sin(np.multiply.outer(flat[i:i + chunk], wbar)) @ weight
    return out.reshape(t_bar.shape)


def u_chain(p, t_bar):
    """Normalized response ``Omega_b u(t_bar / Omega_b)`` for the chain.

    Uses the explicit band integral when the no-pole condition holds and falls
    back to the generic spectral method (continuum plus poles) otherwise.
    """
    ok, _ = chain_positivity(p)
    if not ok:
        raise PositivityError("chain parameters violate the positivity condition")
    t_bar = np.asarray(t_bar, dtype=float)
    if no_pole_condition(p).ok:
        return _u_chain_integral(p, t_bar)
    from .response import compute_u_fourier

    unit = ChainParams(p.kappa_b, p.kappa, p.omega_r, 1.0)
    rf = compute_u_fourier(chain_spectral_density(unit), p.omega_r, t_bar.ravel())
    return rf.u.reshape(t_bar.shape)


def quench_preparation(p, T0):
    """Every chain site thermal at T0 in its local potential Omega_b^2 q^2 / 2."""
    e = float(thermal_energy(T0, p.omega_b))
    return BathPreparation(e / p.omega_b**2, e, description=f"chain quench T0={T0}")


@dataclass(frozen=True)
class QuenchStationary:
    sigma: np.ndarray
    omega_inf: float
    t_inf: float
    energy: float


def _stationary_from_sigma(sqq, spp):
    from .equilibrium import effective_temperature

    omega_inf = np.sqrt(spp / sqq)
    return omega_inf, effective_temperature(sqq, spp)


def quench_stationary(p, T0):
    """Closed-form stationary second moments after a local quench at T0.

    Valid in the no-pole region only; the cross moment vanishes there.
    """
    if not chain_positivity(p)[0]:
        raise PositivityError("chain parameters violate the positivity condition")
    cond = no_pole_condition(p)
    if not cond.ok:
        raise NotEquilibratingError("F(z) has real poles; the oscillator does not equilibrate",
                                    diagnostics=cond)
    e = float(thermal_energy(T0, p.omega_b))
    margin = p.omega_r**2 - positivity_threshold(p.kappa_b, p.kappa)
    sqq = 0.5 / p.omega_b**2 * (1.0 + 1.0 / margin) * e
    spp = 0.5 * (1.0 + p.omega_r**2) * e
    sigma = np.array([[sqq, 0.0], [0.0, spp]])
    omega_inf, t_inf = _stationary_from_sigma(sqq, spp)
    return QuenchStationary(sigma, float(omega_inf), float(t_inf),
                            0.5 * (spp + p.omega**2 * sqq))


def weak_damping_temperature(omega_r, T0):
    """Normalized stationary temperature of the quench for vanishing coupling."""
    omega_r = np.asarray(omega_r, dtype=float)
    x = 0.5 * (omega_r + 1.0 / omega_r) * coth(0.5 / T0) if T0 > 0 else \
        0.5 * (omega_r + 1.0 / omega_r)
    return 0.5 * omega_r / arcoth(x)


def homogeneous_stationary(kappa, T0, omega_b=1.0):
    """Stationary state of a chain site after a homogeneous quench.

    The central oscillator is an ordinary chain site (kappa_b = kappa,
    omega_r = 1) and the whole chain starts thermal at T0.
    Returns ``(sigma, omega_inf, t_inf)`` in physical units.
    """
    kappa = np.asarray(kappa, dtype=float)
    if np.any((kappa < 0) | (kappa > 1)):
        raise ConfigError("kappa must lie in [0, 1]")
    e = thermal_energy(T0, omega_b)
    root = np.sqrt(1.0 - kappa**2)
    with np.errstate(divide="ignore"):
        factor = 0.5 * (1.0 + 1.0 / root)
    sqq = factor * e / omega_b**2
    spp = np.broadcast_to(e, np.shape(kappa)).astype(float)
    c = coth(0.5 * omega_b / T0) if T0 > 0 else 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        omega_inf = omega_b / np.sqrt(factor)
        # 2 sqrt(Sqq Spp) = c sqrt(factor); at kappa = 1 the ratio tends to omega_b c / 2
        t_inf = np.where(np.isfinite(factor),
                         0.5 * omega_inf / arcoth(np.maximum(c * np.sqrt(factor), 1.0)),
                         0.5 * omega_b * c)
    if np.ndim(kappa) == 0:
        sigma = np.array([[float(sqq), 0.0], [0.0, float(spp)]])
        return sigma, float(omega_inf), float(t_inf)
    sigma = np.zeros(np.shape(kappa) + (2, 2))
    sigma[..., 0, 0], sigma[..., 1, 1] = sqq, spp
    return sigma, omega_inf, t_inf


def _scan_point(args):
    kappa_b, omega_r2, kappa = args
    from .response import find_poles

    p = ChainParams(kappa_b, kappa, np.sqrt(omega_r2))
    ok, margin = chain_positivity(p)
    cond = no_pole_condition(p)
    if not ok:
        return kappa_b, omega_r2, -1, margin, cond.lower, cond.upper
    poles = find_poles(chain_spectral_density(p), p.omega, weights=False)
    return kappa_b, omega_r2, len(poles), margin, cond.lower, cond.upper


def parameter_scan(kappa, kappa_b_values, omega_r2_values, jobs=1):
    """Pole count over a (kappa_b, omega_r^2) grid.

    Returns a structured array with fields kappa_b, omega_r2, pole_count
    (-1 where positivity fails), positivity_margin, lower_ineq, upper_ineq.
    Order of rows is independent of ``jobs``.
    """
    tasks = [(float(kb), float(r2), float(kappa))
             for kb in kappa_b_values for r2 in omega_r2_values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_scan_point(t) for t in tasks]
    dtype = [("kappa_b", float), ("omega_r2", float), ("pole_count", int),
             ("positivity_margin", float), ("lower_ineq", bool), ("upper_ineq", bool)]
    return np.array(rows, dtype=dtype)


def pole_sweep_path(n_per_segment=100):
    """Piecewise-linear path through the (kappa_b, omega_r^2) plane.

    Segments: omega_r^2 0 -> 1 at kappa_b = 0.2, then kappa_b 0.2 -> 0.8 at
    omega_r^2 = 1, then omega_r^2 1 -> 2 at kappa_b = 0.8. Returns arrays
    ``(s, kappa_b, omega_r2)`` with s the cumulative path coordinate.
    """
    f = np.linspace(0.0, 1.0, n_per_segment + 1)
    kb = np.concatenate([np.full(n_per_segment, 0.2), 0.2 + 0.6 * f[1:], np.full(n_per_segment, 0.8)])
    r2 = np.concatenate([f[1:], np.ones(n_per_segment), 1.0 + f[1:]])
    seg = np.concatenate([[0.0], np.hypot(np.diff(kb), np.diff(r2))])
    return np.cumsum(seg), kb, r2
