"""Brute-force reference: the full (N+1)-oscillator system solved exactly.

The quadratic Hamiltonian ``H = p.p/2 + q.K.q/2`` is diagonalised once,
``K = O diag(w^2) O^T``, and phase-space moments evolve with

    q(t) = A q + B p,   p(t) = C q + A p,
    A = O cos(w t) O^T,  B = O sin(w t)/w O^T,  C = -O w sin(w t) O^T.

Index 0 is the central oscillator. For a chain, sites 1..N form one half
chain whose link to the centre carries ``sqrt(2) k_c``: the mirror-symmetric
combination of the two half chains is the only part the centre couples to,
so this reproduces the centre dynamics of the two-sided chain exactly.
"""

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .bath import DiscreteBath, SpectralDensity, discretize, thermal_energy
from .chain import ChainParams
from .exceptions import ConfigError, PositivityError
from .response import ResponseFunction

__all__ = [
    "FiniteSystem",
    "ExactEvolution",
    "build_finite",
    "chain_site_stiffness",
    "evolve_exact",
    "revival_time_estimate",
    "product_covariance",
    "thermal_chain_covariance",
    "find_recurrence",
    "write_comparison_csv",
]


@dataclass(frozen=True)
class FiniteSystem:
    stiffness: np.ndarray
    omega2: np.ndarray
    modes: np.ndarray
    description: str = ""

    @property
    def size(self):
        return self.stiffness.shape[0]

    @property
    def frequencies(self):
        return np.sqrt(np.clip(self.omega2, 0.0, None))

    def residual(self):
        K, O = self.stiffness, self.modes
        return float(np.max(np.abs(K @ O - O * self.omega2)))

    def orthogonality_error(self):
        O = self.modes
        return float(np.max(np.abs(O.T @ O - np.eye(self.size))))

    def central_weights(self):
        """Spectral weight of each normal mode at the central oscillator."""
        return self.modes[0] ** 2

    def evolution_blocks(self, t):
        """Full phase-space propagator (2n, 2n) at time t."""
        w = self.frequencies
        O = self.modes
        c = np.cos(w * t)
        s = np.where(w > 0, np.sin(w * t) / np.where(w > 0, w, 1.0), t)
        A = (O * c) @ O.T
        B = (O * s) @ O.T
        C = -(O * (w * np.sin(w * t))) @ O.T
        return np.block([[A, B], [C, A]])

    def energy(self, mean, cov):
        """Mean total energy of a Gaussian state of the full system."""
        n = self.size
        H = np.block([[self.stiffness, np.zeros((n, n))], [np.zeros((n, n)), np.eye(n)]])
        return 0.5 * (np.trace(H @ cov) + mean @ H @ mean)


def chain_site_stiffness(p, n):
    """Stiffness of the centre plus one half chain of ``n`` sites."""
    K = np.zeros((n + 1, n + 1))
    K[0, 0] = p.omega**2
    idx = np.arange(1, n + 1)
    K[idx, idx] = p.omega_b**2
    if n >= 1:
        K[0, 1] = K[1, 0] = -np.sqrt(2.0) * p.central_coupling
    for i in range(1, n):
        K[i, i + 1] = K[i + 1, i] = -p.site_coupling
    return K


def _diagonalise(K, description, tol=1e-10):
    w2, O = np.linalg.eigh(K)
    scale = max(1.0, float(np.max(np.abs(w2))))
    if w2[0] < -tol * scale:
        raise PositivityError(
            f"negative normal-mode squared frequency {w2[0]:.6g}: Hamiltonian unbounded below")
    w2 = np.where(w2 < 0, 0.0, w2)
    fs = FiniteSystem(K, w2, O, description)
    if fs.residual() > tol * scale:
        raise ConfigError("diagonalization residual above tolerance")
    return fs


def build_finite(source, omega=None, n=None, prep=None, scheme="uniform-frequency"):
    """Assemble and diagonalise a finite system.

    Parameters
    ----------
    source : ChainParams, SpectralDensity or DiscreteBath
        A chain uses ``n`` real-space sites of one half chain. A spectral
        density is discretized into ``n`` modes first.
    omega : float
        Central frequency (taken from the chain parameters for a chain).
    prep : BathPreparation, optional
        Only used with a spectral density, to also return the bath moments.

    Returns
    -------
    FiniteSystem, or ``(FiniteSystem, DiscreteMoments)`` when ``prep`` is given.
    """
    if isinstance(source, ChainParams):
        if n is None or n < 0:
            raise ConfigError("chain oracle needs a site count n >= 0")
        return _diagonalise(chain_site_stiffness(source, n),
                            f"centre + {n}-site half chain")
    moments = None
    if isinstance(source, SpectralDensity):
        if n is None:
            raise ConfigError("discretizing a spectral density needs n")
        if prep is None:
            from .bath import thermal_preparation
            bath, _ = discretize(source, thermal_preparation(0.0), n, scheme)
        else:
            bath, moments = discretize(source, prep, n, scheme)
    elif isinstance(source, DiscreteBath):
        bath = source
    else:
        raise ConfigError(f"cannot build a finite system from {type(source).__name__}")
    if omega is None or omega <= 0:
        raise ConfigError("central frequency must be positive")
    m = len(bath)
    K = np.zeros((m + 1, m + 1))
    K[0, 0] = omega**2
    K[0, 1:] = K[1:, 0] = bath.couplings
    K[np.arange(1, m + 1), np.arange(1, m + 1)] = bath.frequencies**2
    fs = _diagonalise(K, f"centre + {m} bath modes")
    return fs if moments is None else (fs, moments)


def product_covariance(central, bath_qq, bath_pp, bath_qp=None):
    """Full covariance ordered (q_0..q_N, p_0..p_N) for a product state."""
    bath_qq = np.atleast_1d(bath_qq)
    n = bath_qq.size + 1
    cov = np.zeros((2 * n, 2 * n))
    cov[0, 0], cov[0, n], cov[n, 0], cov[n, n] = (central[0, 0], central[0, 1],
                                                  central[1, 0], central[1, 1])
    idx = np.arange(1, n)
    cov[idx, idx] = bath_qq
    cov[n + idx, n + idx] = bath_pp
    if bath_qp is not None:
        cov[idx, n + idx] = cov[n + idx, idx] = bath_qp
    return cov


def thermal_chain_covariance(p, n, central, T0):
    """Central state plus every chain site thermal in its local potential."""
    e = float(thermal_energy(T0, p.omega_b))
    return product_covariance(central, np.full(n, e / p.omega_b**2), np.full(n, e))


@dataclass
class ExactEvolution:
    times: np.ndarray
    X: np.ndarray
    sigma: np.ndarray
    u: np.ndarray
    udot: np.ndarray
    uddot: np.ndarray
    omega: float

    def response(self):
        return ResponseFunction(self.times, self.u, self.udot, self.uddot, self.omega, "oracle")


def evolve_exact(fs, mean=None, cov=None, times=(0.0,)):
    """Exact central moments and response function on a time grid.

    ``mean`` and ``cov`` describe the full system in (q_0..q_N, p_0..p_N)
    order; without them only u is computed (X and sigma are NaN).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = fs.size
    w = fs.frequencies
    O = fs.modes
    o0 = O[0]
    wt = np.multiply.outer(times, w)
    c, s = np.cos(wt), np.sin(wt)
    sinc = np.where(w > 0, s / np.where(w > 0, w, 1.0), times[:, None])
    u = (sinc * o0**2).sum(1)
    udot = (c * o0**2).sum(1)
    uddot = -(s * w * o0**2).sum(1)
    X = np.full((times.size, 2), np.nan)
    S = np.full((times.size, 2, 2), np.nan)
    if cov is not None:
        cov = np.asarray(cov, dtype=float)
        mean = np.zeros(2 * n) if mean is None else np.asarray(mean, dtype=float)
        for k in range(times.size):
            # rows of the propagator for q_0 and p_0
            a = (o0 * c[k]) @ O.T
            b = (o0 * sinc[k]) @ O.T
            cc = -(o0 * w * s[k]) @ O.T
            R = np.vstack([np.concatenate([a, b]), np.concatenate([cc, a])])
            X[k] = R @ mean
            S[k] = R @ cov @ R.T
    omega = float(np.sqrt(fs.stiffness[0, 0]))
    return ExactEvolution(times, X, S, u, udot, uddot, omega)


def revival_time_estimate(fs, weight_tol=1e-3, degenerate_tol=1e-10):
    """Recurrence time scale of the finite system as seen from the centre.

    Returns ``2 pi / g`` with ``g`` the largest gap between adjacent normal
    modes whose central spectral weight exceeds ``weight_tol`` times the
    largest weight, i.e. the earliest rephasing among the modes that shape
    u(t). Degenerate spectra give 0 with a warning; a single mode gives inf.
    """
    w = fs.frequencies
    if w.size < 2:
        return float("inf")
    gaps_all = np.diff(np.sort(w))
    if np.min(gaps_all) <= degenerate_tol * max(float(np.max(w)), 1e-300):
        warnings.warn("degenerate normal modes: no finite recurrence scale", RuntimeWarning)
        return 0.0
    weight = fs.central_weights()
    keep = weight >= weight_tol * weight.max()
    ws = np.sort(w[keep])
    if ws.size < 2:
        return float("inf")
    return float(2.0 * np.pi / np.max(np.diff(ws)))


def find_recurrence(fs, segment, t_search, dt=0.05):
    """Earliest return of u to its initial segment ``[0, segment]``.

    Scans shifts ``tau`` in ``(segment, t_search]`` on a grid of step ``dt``
    and returns ``(tau, deviation)`` for the shift with the smallest maximum
    deviation ``max_s |u(tau + s) - u(s)|``.
    """
    from numpy.lib.stride_tricks import sliding_window_view

    m = int(round(segment / dt)) + 1
    times = np.arange(int(np.ceil((t_search + segment) / dt)) + 1) * dt
    u = evolve_exact(fs, times=times).u
    windows = sliding_window_view(u, m)
    dev = np.max(np.abs(windows - u[:m]), axis=1)
    dev[:m] = np.inf
    k = int(np.argmin(dev))
    return float(times[k]), float(dev[k])


def write_comparison_csv(path, times, u_oracle, u_continuum, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        wr = csv.writer(fh)
        wr.writerow(["t", "u_oracle", "u_continuum", "abs_err"])
        for row in zip(times, u_oracle, u_continuum, np.abs(np.asarray(u_oracle) - u_continuum)):
            wr.writerow([repr(float(v)) for v in row])
