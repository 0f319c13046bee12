"""Bath models: continuum spectral densities, discrete baths, initial preparations.

Units throughout: hbar = 1, all masses = 1.

Continuum linear means and cross-correlations use the flat frequency measure:
a preparation's ``x_q(omega)`` enters the noise drift as
``sqrt(omega*gamma(omega)) * x_q(omega) d omega``, which is what a discretized
bath with ``<Q_nu> = x_q(omega_nu) * sqrt(Delta_nu)`` converges to.
"""

import csv
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate

from .exceptions import (
    ConfigError,
    InvalidPreparationError,
    PositivityError,
    QuadratureError,
)
from .quadrature import integrate_support, support_rule

__all__ = [
    "coth",
    "arcoth",
    "thermal_energy",
    "SpectralDensity",
    "DiscreteBath",
    "DiscreteMoments",
    "BathPreparation",
    "PositivityResult",
    "thermal_preparation",
    "nonthermal_equivalent_preparation",
    "energy_distribution",
    "damping_kernel",
    "discretize",
    "positivity_check",
    "box_spectral_density",
]

HEISENBERG_BOUND = 0.25


def coth(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return 1.0 / np.tanh(x)


def arcoth(x):
    """Inverse hyperbolic cotangent for ``x >= 1``; ``arcoth(1) = inf``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 0.5 * np.log1p(2.0 / (x - 1.0))


def thermal_energy(T, omega):
    """Mean energy ``(omega/2) coth(omega/2T)`` of an oscillator at temperature T.

    ``T = 0`` gives the zero-point energy ``omega/2``.
    """
    T = np.asarray(T, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(T < 0):
        raise ConfigError("temperature must be non-negative")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        # omega/2 + omega/(exp(omega/T) - 1) stays accurate for T -> 0 and T -> inf
        occupation = np.where(T > 0, omega / np.expm1(omega / np.where(T > 0, T, 1.0)), 0.0)
    return 0.5 * omega + occupation


def _as_callable(fun):
    if fun is None:
        return None
    if callable(fun):
        return fun
    value = float(fun)
    return lambda omega: np.full(np.shape(omega), value)


@dataclass(frozen=True)
class SpectralDensity:
    """Continuum bath spectral function gamma(omega) on a finite support.

    Parameters
    ----------
    support : (lo, hi)
        Frequency interval outside of which gamma vanishes. ``lo == hi``
        describes the decoupled oscillator (gamma identically zero).
    gamma : callable
        Vectorised map omega -> gamma(omega) >= 0 on the support.
    gamma_z : callable, optional
        Analytic continuation Gamma(z) for Im z > 0, with
        ``gamma(omega) = -(2/pi) Im Gamma(omega + i0)`` for omega > 0. For
        real input carrying a +0 imaginary part it must return the limit
        from above, which principal-branch sqrt/log expressions in ``z**2``
        do. Without it, boundary values come from principal-value quadrature.
    eta_scale : float
        If positive, boundary values of ``gamma_z`` are taken at a small
        distance above the axis with Richardson extrapolation instead of on
        the axis itself. Only useful for continuations that cannot be
        evaluated on the cut; accuracy degrades to O(sqrt(eta)) at branch
        points.
    breakpoints : tuple
        Frequencies inside the support where gamma has kinks (e.g. the nodes
        of a tabulated density). Support quadratures split their panels there.
    """

    support: tuple
    gamma: Callable
    gamma_z: Optional[Callable] = None
    description: str = ""
    eta_scale: float = 0.0
    breakpoints: tuple = ()

    def __post_init__(self):
        lo, hi = (float(v) for v in self.support)
        if lo < 0 or hi < lo:
            raise ConfigError(f"invalid support interval {self.support}")
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "breakpoints",
                           tuple(float(b) for b in self.breakpoints if lo < b < hi))

    @classmethod
    def null(cls, description="decoupled oscillator"):
        return cls((0.0, 0.0), lambda omega: np.zeros(np.shape(omega)),
                   gamma_z=lambda z: np.zeros(np.shape(z), complex),
                   description=description)

    @classmethod
    def from_csv(cls, path, description=None):
        """Tabulated gamma with header ``omega,gamma``, linearly interpolated.

        The continuation Gamma(z) of the piecewise-linear density is exact, and
        the table nodes become quadrature breakpoints.
        """
        omega, gamma = _read_columns(path, ["omega", "gamma"])
        if np.any(gamma < 0):
            raise ConfigError(f"{path}: gamma must be non-negative")
        return cls((omega[0], omega[-1]),
                   lambda w: np.interp(w, omega, gamma, left=0.0, right=0.0),
                   gamma_z=lambda z: piecewise_linear_continuation(omega, gamma, z),
                   description=description or f"tabulated from {path}",
                   breakpoints=tuple(omega[1:-1]))

    @property
    def is_null(self):
        return self.support[1] <= self.support[0]

    @property
    def width(self):
        return self.support[1] - self.support[0]

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.support
        inside = (omega >= lo) & (omega <= hi)
        if self.is_null:
            return np.zeros(omega.shape)
        vals = np.asarray(self.gamma(np.where(inside, omega, 0.5 * (lo + hi))), dtype=float)
        return np.where(inside, vals, 0.0)

    def _eta(self):
        return self.eta_scale * max(self.support[1], 1.0)

    def continued(self, z):
        """Gamma(z) in the upper half-plane, from gamma_z or quadrature."""
        z = np.asarray(z, dtype=complex)
        if self.gamma_z is not None:
            return np.asarray(self.gamma_z(z), dtype=complex)
        return np.vectorize(self._continued_quad, otypes=[complex])(z)

    def _continued_quad(self, z):
        lo, hi = self.support
        z2 = z * z
        pts = self.breakpoints
        re = integrate_support(lambda w: (w * self(w) / (z2 - w * w)).real, lo, hi, points=pts)
        im = integrate_support(lambda w: (w * self(w) / (z2 - w * w)).imag, lo, hi, points=pts)
        return re + 1j * im

    def boundary(self, omega):
        """Boundary value Gamma(omega + i0) for real omega >= 0."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.is_null:
            return np.zeros(omega.shape, complex)
        if self.gamma_z is not None and self.eta_scale <= 0:
            return np.asarray(self.gamma_z(omega + 0j), dtype=complex)
        if self.gamma_z is not None:
            eta = self._eta()
            g1 = np.asarray(self.gamma_z(omega + 1j * eta), dtype=complex)
            g2 = np.asarray(self.gamma_z(omega + 0.5j * eta), dtype=complex)
            return 2.0 * g2 - g1
        out = np.empty(omega.shape, complex)
        lo, hi = self.support
        inside = (omega > lo) & (omega < hi)
        if np.any(inside):
            out[inside] = self._boundary_pv_inside(omega[inside])
        for i in np.flatnonzero(~inside):
            out[i] = self._boundary_pv(omega[i])
        return out

    def _boundary_pv_inside(self, omega, tol=1e-10):
        """Vectorised principal value via singularity subtraction.

        ``PV int f(w')/(w' - w) = int (f(w') - f(w))/(w' - w) + f(w) log((hi - w)/(w - lo))``
        with ``f(w') = -w' gamma(w') / (w' + w)``; the subtracted integrand is
        regular and goes through a fixed sine-mapped Gauss rule at two
        resolutions. Points where the two disagree fall back to adaptive QAWC.
        """
        lo, hi = self.support
        estimates = []
        for n_panels in (64, 128):
            nodes, wts = support_rule(lo, hi, n_panels=n_panels, order=16,
                                      points=self.breakpoints)
            fn = -nodes * self(nodes)
            fw = -omega * self(omega) / (2.0 * omega)
            diff = nodes[None, :] - omega[:, None]
            num = fn[None, :] / (nodes[None, :] + omega[:, None]) - fw[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(np.abs(diff) > 1e-7 * (hi - lo), num / diff, 0.0)
            estimates.append(q @ wts + fw * np.log((hi - omega) / (omega - lo)))
        re = estimates[1]
        bad = np.abs(estimates[1] - estimates[0]) > tol * np.maximum(1.0, np.abs(re))
        out = re - 0.5j * np.pi * self(omega)
        for i in np.flatnonzero(bad):
            out[i] = self._boundary_pv(omega[i])
        return out

    def _boundary_pv(self, omega):
        lo, hi = self.support
        if lo < omega < hi:
            # w' gamma / (w^2 - w'^2) = -[w' gamma / (w' + w)] / (w' - w)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                re, err = integrate.quad(
                    lambda w: -w * self(w) / (w + omega), lo, hi,
                    weight="cauchy", wvar=omega, epsabs=1e-13, epsrel=1e-12, limit=400)
            if err > 1e-8 * max(1.0, abs(re)):
                raise QuadratureError("principal-value integral did not converge", estimate=err)
            return re - 0.5j * np.pi * float(self(omega))
        re = integrate_support(lambda w: w * self(w) / (omega**2 - w * w), lo, hi,
                               points=self.breakpoints)
        return complex(re, 0.0)

    def real_outside(self, w2):
        """Gamma at real frequency sqrt(w2) outside the support (real valued)."""
        lo, hi = self.support
        if self.is_null:
            return 0.0
        if self.gamma_z is not None:
            return float(self.boundary(np.sqrt(max(w2, 0.0)))[0].real)
        return integrate_support(lambda w: w * self(w) / (w2 - w * w), lo, hi,
                                 points=self.breakpoints)

    def derivative_outside(self, w2):
        """d Gamma / d(z^2) at real z^2 = w2 outside the support."""
        lo, hi = self.support
        if self.is_null:
            return 0.0
        return -integrate_support(lambda w: w * self(w) / (w2 - w * w) ** 2, lo, hi,
                                  tol=1e-13, points=self.breakpoints)


def _xlog(x):
    """``x log x`` for complex ``x`` with the limit 0 at ``x = 0``."""
    out = np.zeros(np.shape(x), complex)
    nz = x != 0
    out[nz] = x[nz] * np.log(x[nz])
    return out


def piecewise_linear_continuation(nodes, values, z):
    """Exact Gamma(z) = int w gamma(w) / (z^2 - w^2) dw for piecewise-linear gamma.

    ``gamma`` interpolates ``values`` linearly between ``nodes`` and vanishes
    outside. With ``log(z - w)`` and ``log(z + w)`` on principal branches the
    result is the continuation for Im z >= 0 and gives the limit from above for
    real z carrying a +0 imaginary part. Slope changes at interior nodes enter
    as ``(z - w) log(z - w)``, which stays finite at a node; a non-zero value at
    an end node gives the genuine logarithmic divergence there.
    """
    x = np.asarray(nodes, dtype=float)
    g = np.asarray(values, dtype=float)
    z = np.asarray(z, dtype=complex)
    beta = np.diff(g) / np.diff(x)
    # slopes and values on both sides of every node, zero outside the support
    b_left, b_right = np.r_[0.0, beta], np.r_[beta, 0.0]
    g_left, g_right = np.r_[0.0, g[1:]], np.r_[g[:-1], 0.0]
    dg, db = g_left - g_right, b_left - b_right
    zc = z.reshape(-1, 1)
    dm, dp = zc - x, zc + x
    with np.errstate(divide="ignore", invalid="ignore"):
        jump = np.where(dg != 0, dg * (np.log(dm) + np.log(dp)), 0.0)
    total = (-0.5 * jump - 0.5 * db * _xlog(dm) + 0.5 * db * _xlog(dp)).sum(axis=1)
    total -= g[-1] - g[0]
    return total.reshape(z.shape)


def box_spectral_density(center, width, height):
    """Flat spectral density of given height on ``center -/+ width/2``.

    Its continuation is ``(h/2) [Log(z^2 - a^2) - Log(z^2 - b^2)]``.
    """
    a, b = center - 0.5 * width, center + 0.5 * width

    def gamma_z(z):
        z2 = np.asarray(z, dtype=complex) ** 2
        with np.errstate(divide="ignore"):
            d = np.log(z2 - a * a) - np.log(z2 - b * b)
        # scale parts separately so a log-divergent edge stays -inf/+inf, not nan
        return 0.5 * height * d.real + 0.5j * height * d.imag

    return SpectralDensity((a, b), lambda w: np.full(np.shape(w), float(height)),
                           gamma_z=gamma_z, description=f"box h={height} on [{a}, {b}]")


def _read_columns(path, names):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header != names:
        raise ConfigError(f"{path}: expected header {','.join(names)}, got {','.join(header)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[0] < 2:
        raise ConfigError(f"{path}: need at least two data rows")
    if np.any(np.diff(data[:, 0]) <= 0):
        raise ConfigError(f"{path}: frequencies must be strictly increasing")
    return tuple(data.T)


@dataclass(frozen=True)
class DiscreteBath:
    frequencies: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        lam = np.atleast_1d(np.asarray(self.couplings, dtype=float))
        if w.shape != lam.shape:
            raise ConfigError("frequencies and couplings must have equal length")
        if np.any(w <= 0):
            raise ConfigError("bath frequencies must be positive")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", lam)

    def __len__(self):
        return self.frequencies.size

    def positivity_sum(self):
        return float(np.sum(self.couplings**2 / self.frequencies**2))

    def positivity_margin(self, omega):
        return omega**2 - self.positivity_sum()

    def damping_kernel(self, t):
        t = np.asarray(t, dtype=float)
        amp = self.couplings**2 / self.frequencies
        return np.sin(np.multiply.outer(t, self.frequencies)) @ amp


@dataclass(frozen=True)
class DiscreteMoments:
    """Initial first and second moments of a discretized bath, mode by mode."""

    sqq: np.ndarray
    spp: np.ndarray
    sqp: np.ndarray
    xq: np.ndarray
    xp: np.ndarray
    sigma2: Optional[np.ndarray] = None   # (N, N, 2, 2) correlated part

    def block(self, nu, mu):
        out = np.zeros((2, 2))
        if nu == mu:
            out += [[self.sqq[nu], self.sqp[nu]], [self.sqp[nu], self.spp[nu]]]
        if self.sigma2 is not None:
            out += self.sigma2[nu, mu]
        return out

    def means(self):
        """Means ordered (Q_1..Q_N, P_1..P_N)."""
        return np.concatenate([self.xq, self.xp])

    def covariance(self):
        """Covariance ordered (Q_1..Q_N, P_1..P_N)."""
        n = self.sqq.size
        cov = np.zeros((2 * n, 2 * n))
        idx = np.arange(n)
        cov[idx, idx] = self.sqq
        cov[n + idx, n + idx] = self.spp
        cov[idx, n + idx] = cov[n + idx, idx] = self.sqp
        if self.sigma2 is not None:
            s2 = self.sigma2
            cov[:n, :n] += s2[:, :, 0, 0]
            cov[:n, n:] += s2[:, :, 0, 1]
            cov[n:, :n] += s2[:, :, 1, 0]
            cov[n:, n:] += s2[:, :, 1, 1]
        return cov


@dataclass(frozen=True)
class BathPreparation:
    """Initial bath state in the continuum description.

    ``sigma1_*`` are the diagonal (per-mode) variances, ``x_q``/``x_p`` the
    linear means and ``sigma2(w1, w2)`` an optional smooth correlated part
    returning ``(..., 2, 2)`` blocks. ``None`` means identically zero.
    """

    sigma1_qq: Callable
    sigma1_pp: Callable
    sigma1_qp: Optional[Callable] = None
    x_q: Optional[Callable] = None
    x_p: Optional[Callable] = None
    sigma2: Optional[Callable] = None
    description: str = ""

    def __post_init__(self):
        for name in ("sigma1_qq", "sigma1_pp", "sigma1_qp", "x_q", "x_p"):
            object.__setattr__(self, name, _as_callable(getattr(self, name)))

    @classmethod
    def from_csv(cls, path, description=None):
        """Tabulated preparation with header ``omega,sqq,spp,sqp,xq,xp``."""
        omega, sqq, spp, sqp, xq, xp = _read_columns(
            path, ["omega", "sqq", "spp", "sqp", "xq", "xp"])

        def interp(col):
            return lambda w: np.interp(w, omega, col)

        prep = cls(interp(sqq), interp(spp), interp(sqp),
                   interp(xq) if np.any(xq) else None,
                   interp(xp) if np.any(xp) else None,
                   description=description or f"tabulated from {path}")
        prep.validate(omega)
        return prep

    @property
    def has_means(self):
        return self.x_q is not None or self.x_p is not None

    def _eval(self, fun, omega):
        omega = np.asarray(omega, dtype=float)
        if fun is None:
            return np.zeros(omega.shape)
        return np.broadcast_to(np.asarray(fun(omega), dtype=float), omega.shape).copy()

    def qq(self, omega):
        return self._eval(self.sigma1_qq, omega)

    def pp(self, omega):
        return self._eval(self.sigma1_pp, omega)

    def qp(self, omega):
        return self._eval(self.sigma1_qp, omega)

    def means(self, omega):
        """(n, 2) array of linear means."""
        return np.stack([self._eval(self.x_q, omega), self._eval(self.x_p, omega)], axis=-1)

    def matrix(self, omega):
        """(n, 2, 2) diagonal second-moment blocks."""
        qq, pp, qp = self.qq(omega), self.pp(omega), self.qp(omega)
        return np.stack([np.stack([qq, qp], -1), np.stack([qp, pp], -1)], -2)

    def energy(self, omega):
        omega = np.asarray(omega, dtype=float)
        return 0.5 * (omega**2 * self.qq(omega) + self.pp(omega))

    def validate(self, omega, tol=1e-12):
        """Check positivity and the uncertainty bound at the given frequencies."""
        qq, pp, qp = self.qq(omega), self.pp(omega), self.qp(omega)
        det = qq * pp - qp**2
        if np.any(qq < 0) or np.any(pp < 0) or np.any(det < HEISENBERG_BOUND - tol):
            bad = np.asarray(omega)[np.argmin(det)] if np.ndim(omega) else omega
            raise InvalidPreparationError(
                f"bath second moments violate the uncertainty bound near omega={float(bad):.6g}")
        return True


def thermal_preparation(T):
    if T < 0:
        raise ConfigError("temperature must be non-negative")
    return BathPreparation(
        lambda w: thermal_energy(T, w) / np.asarray(w, dtype=float) ** 2,
        lambda w: thermal_energy(T, w),
        description=f"thermal T={T}",
    )


def nonthermal_equivalent_preparation(T0):
    """Non-thermal bath with the same energy distribution as a thermal one at T0.

    Position variances carry the thermal excess and momentum variances stay at
    the zero-point value, so equipartition is violated for ``T0 > 0``.
    """
    if T0 <= 0:
        raise ConfigError("T0 must be positive")
    return BathPreparation(
        lambda w: (coth(np.asarray(w) / (2 * T0)) - 0.5) / np.asarray(w),
        lambda w: 0.5 * np.asarray(w, dtype=float),
        description=f"non-thermal, energy-equivalent to T={T0}",
    )


def energy_distribution(prep, omega, spec=None):
    """Frequency-resolved initial bath energy ``(omega^2 Sqq + Spp)/2``."""
    if spec is not None:
        lo, hi = spec.support
        w = np.asarray(omega)
        if np.any((w < lo) | (w > hi)):
            raise ConfigError(f"omega outside bath support [{lo}, {hi}]")
    return prep.energy(omega)


def damping_kernel(spec, t, tol=1e-10):
    """Memory kernel ``K(t) = int gamma(w) sin(w t) dw``; odd in t."""
    t = np.asarray(t, dtype=float)
    if spec.is_null:
        return np.zeros(t.shape)
    lo, hi = spec.support
    t_max = float(np.max(np.abs(t))) if t.size else 0.0
    pts = spec.breakpoints
    w1, q1 = support_rule(lo, hi, n_panels=32, order=16, t_max=t_max, fraction=0.5, points=pts)
    w2, q2 = support_rule(lo, hi, n_panels=64, order=16, t_max=t_max, fraction=0.25,
                          points=pts)
    flat = t.ravel()
    k1 = np.sin(np.multiply.outer(flat, w1)) @ (q1 * spec(w1))
    k2 = np.sin(np.multiply.outer(flat, w2)) @ (q2 * spec(w2))
    err = float(np.max(np.abs(k1 - k2))) if flat.size else 0.0
    if err > tol:
        raise QuadratureError("damping kernel quadrature", estimate=err)
    return k2.reshape(t.shape)


def discretize(spec, prep, n, scheme="uniform-frequency"):
    """Finite bath approximating ``spec`` with ``n`` modes.

    Couplings satisfy ``lambda^2 = omega * gamma-mass of the cell``; for the
    uniform scheme that is ``omega * gamma(omega) * Delta``. Linear means and
    correlated second moments scale with ``sqrt(Delta)``.
    """
    if n < 1:
        raise ConfigError("need at least one bath mode")
    lo, hi = spec.support
    if hi <= lo:
        raise ConfigError("degenerate bath support cannot be discretized")
    if scheme == "uniform-frequency":
        delta = np.full(n, (hi - lo) / n)
        omega = lo + (np.arange(n) + 0.5) * delta
        mass = spec(omega) * delta
    elif scheme == "equal-weight":
        fine, fw = support_rule(lo, hi, n_panels=max(64, 4 * n), order=8)
        order = np.argsort(fine)
        fine, fw = fine[order], fw[order]
        cdf = np.concatenate([[0.0], np.cumsum(fw * spec(fine))])
        grid = np.concatenate([[lo], fine])
        total = cdf[-1]
        if total <= 0:
            raise ConfigError("equal-weight scheme needs a non-zero spectral density")
        edges = np.interp(np.linspace(0, total, n + 1), cdf, grid)
        edges[0], edges[-1] = lo, hi
        omega = np.interp(np.linspace(0, total, 2 * n + 1)[1::2], cdf, grid)
        delta = np.diff(edges)
        mass = np.full(n, total / n)
    else:
        raise ConfigError(f"unknown discretization scheme {scheme!r}")
    bath = DiscreteBath(omega, np.sqrt(omega * mass))
    root = np.sqrt(delta)
    sigma2 = None
    if prep.sigma2 is not None:
        w1, w2 = np.meshgrid(omega, omega, indexing="ij")
        sigma2 = np.asarray(prep.sigma2(w1, w2), dtype=float) * np.multiply.outer(root, root)[..., None, None]
    means = prep.means(omega)
    moments = DiscreteMoments(prep.qq(omega), prep.pp(omega), prep.qp(omega),
                              means[:, 0] * root, means[:, 1] * root, sigma2)
    return bath, moments


class PositivityResult(NamedTuple):
    ok: bool
    margin: float
    integral: float


def positivity_check(spec, omega):
    """Check ``Omega^2 >= int gamma(w)/w dw``; returns the margin and its sign."""
    if omega <= 0:
        raise ConfigError("oscillator frequency must be positive")
    lo, hi = spec.support
    if spec.is_null:
        return PositivityResult(True, omega**2, 0.0)
    if lo == 0.0:
        probe = np.array([1e-6, 1e-8]) * hi
        ratio = spec(probe) / probe
        if ratio[1] > 10.0 * ratio[0] and ratio[1] > 1e3:
            raise PositivityError("gamma(w)/w is not integrable at w = 0")
    try:
        total = integrate_support(lambda w: spec(w) / np.where(w > 0, w, np.inf), lo, hi,
                                  tol=1e-13, points=spec.breakpoints)
    except QuadratureError as exc:
        raise PositivityError(f"positivity integral diverges: {exc}") from None
    margin = omega**2 - total
    return PositivityResult(bool(margin >= 0), float(margin), float(total))

