"""Phase-space moment propagation and Gaussian propagating functions.

The reduced central-oscillator dynamics is an affine Gaussian map

    X(t) = U(t) X(0) + I(t),        Sigma(t) = U(t) Sigma(0) U(t)^T + C(t),

with ``U`` from the response function, a noise drift ``I`` from the bath
means and a covariance source ``C`` from the bath second moments.
"""

import csv
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .bath import HEISENBERG_BOUND, DiscreteBath, DiscreteMoments
from .exceptions import (
    ConfigError,
    InvalidPreparationError,
    NumericalError,
    QuadratureError,
    SingularRepresentationError,
)
from .quadrature import support_rule
from .response import propagator_matrices

__all__ = [
    "PhaseMoments",
    "GaussianPropagator",
    "GaussianMixture",
    "PositionParams",
    "noise_drift",
    "covariance_source",
    "gaussian_propagator",
    "propagate_moments",
    "propagate_trajectory",
    "gaussian_wigner",
    "propagating_function_wigner",
    "position_propagator_params",
    "position_propagator",
    "wigner_grid",
    "moments_from_grid",
    "write_moments_csv",
    "write_wigner_csv",
]


@dataclass(frozen=True)
class PhaseMoments:
    """Means ``X = (<Q>, <P>)`` and symmetrized covariance ``Sigma``."""

    X: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).reshape(2)
        S = np.asarray(self.sigma, dtype=float).reshape(2, 2)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "sigma", S)

    @classmethod
    def coherent(cls, omega, q=0.0, p=0.0):
        return cls([q, p], np.diag([0.5 / omega, 0.5 * omega]))

    @classmethod
    def squeezed(cls, omega, r, q=0.0, p=0.0):
        """Minimum-uncertainty state with position variance scaled by ``r``."""
        return cls([q, p], np.diag([0.5 * r / omega, 0.5 * omega / r]))

    @classmethod
    def thermal(cls, omega, T, q=0.0, p=0.0):
        from .bath import thermal_energy

        e = float(thermal_energy(T, omega))
        return cls([q, p], np.diag([e / omega**2, e]))

    @property
    def det(self):
        return float(np.linalg.det(self.sigma))

    def validate(self, tol=1e-10):
        S = self.sigma
        if not np.allclose(S, S.T, atol=1e-12 * max(1.0, np.abs(S).max())):
            raise InvalidPreparationError("covariance matrix is not symmetric")
        if S[0, 0] <= 0 or S[1, 1] <= 0 or self.det < HEISENBERG_BOUND - tol:
            raise InvalidPreparationError(
                f"covariance violates the uncertainty bound (det = {self.det:.6g})")
        return self


@dataclass(frozen=True)
class GaussianPropagator:
    """The triple ``(U, I, C)`` at one time ``t``."""

    t: float
    U: np.ndarray
    I: np.ndarray
    C: np.ndarray

    @property
    def is_delta(self):
        """True where C is (numerically) singular and J_W is a delta distribution."""
        scale = max(1.0, float(np.abs(self.C).max()))
        return self.t == 0.0 or np.linalg.det(self.C) <= 1e-14 * scale**2

    def apply(self, m):
        return PhaseMoments(self.U @ m.X + self.I, self.U @ m.sigma @ self.U.T + self.C)


@dataclass(frozen=True)
class GaussianMixture:
    """Finite positive mixture of Gaussian central states."""

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or len(w) != len(self.components):
            raise ConfigError("mixture weights must be positive, one per component")
        object.__setattr__(self, "weights", w / w.sum())
        object.__setattr__(self, "components", tuple(self.components))

    def propagate(self, gp):
        return GaussianMixture(self.weights, tuple(gp.apply(c) for c in self.components))

    def wigner(self, x):
        return sum(w * gaussian_wigner(c, x) for w, c in zip(self.weights, self.components))

    def moments(self):
        X = sum(w * c.X for w, c in zip(self.weights, self.components))
        S = sum(w * (c.sigma + np.outer(c.X - X, c.X - X))
                for w, c in zip(self.weights, self.components))
        return PhaseMoments(X, S)


def _bath_rule(spec, t_max, n_panels=48, order=8):
    lo, hi = spec.support
    return support_rule(lo, hi, n_panels=n_panels, order=order, t_max=2.0 * t_max,
                        fraction=0.25, points=spec.breakpoints)


def _transfer(rf, times, omegas, chunk=256):
    """Yield (slice, U(t, w) blocks) over chunks of frequencies."""
    for i in range(0, omegas.size, chunk):
        sl = slice(i, i + chunk)
        _, blocks = propagator_matrices(rf, times, omegas[sl])
        yield sl, blocks


def _continuum_sources(rf, spec, prep, times, rule, want_c=True, want_i=True):
    w, q = rule
    amp = np.sqrt(w * spec(w))
    k = times.size
    C = np.zeros((k, 2, 2))
    I = np.zeros((k, 2))
    means = prep.means(w) if (want_i and prep.has_means) else None
    S1 = prep.matrix(w) if want_c else None
    need_blocks = prep.sigma2 is not None and want_c
    blocks_all = np.zeros((k, w.size, 2, 2)) if need_blocks else None
    for sl, B in _transfer(rf, times, w):
        a = q[sl] * amp[sl] ** 2
        if want_c:
            C += np.einsum("j,kjab,jbc,kjdc->kad", a, B, S1[sl], B, optimize=True)
        if means is not None:
            I -= np.einsum("j,kjab,jb->ka", q[sl] * amp[sl], B, means[sl], optimize=True)
        if need_blocks:
            blocks_all[:, sl] = B
    if need_blocks:
        w1, w2 = np.meshgrid(w, w, indexing="ij")
        S2 = np.asarray(prep.sigma2(w1, w2), dtype=float)
        g = q * amp
        C += np.einsum("j,l,kjab,jlbc,kldc->kad", g, g, blocks_all, S2, blocks_all,
                       optimize=True)
    return C, I


def _discrete_sources(rf, bath, moments, times):
    w, lam = bath.frequencies, bath.couplings
    k = times.size
    C = np.zeros((k, 2, 2))
    I = np.zeros((k, 2))
    means = np.stack([moments.xq, moments.xp], -1)
    blocks_all = []
    for sl, B in _transfer(rf, times, w):
        blocks_all.append(B)
    B = np.concatenate(blocks_all, axis=1) if blocks_all else np.zeros((k, 0, 2, 2))
    S1 = np.stack([np.stack([moments.sqq, moments.sqp], -1),
                   np.stack([moments.sqp, moments.spp], -1)], -2)
    C += np.einsum("j,kjab,jbc,kjdc->kad", lam**2, B, S1, B, optimize=True)
    if moments.sigma2 is not None:
        C += np.einsum("j,l,kjab,jlbc,kldc->kad", lam, lam, B, moments.sigma2, B,
                       optimize=True)
    I -= np.einsum("j,kjab,jb->ka", lam, B, means, optimize=True)
    return C, I


def _sources(rf, bath, prep, times, tol, want_c=True, want_i=True):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if isinstance(bath, DiscreteBath):
        if not isinstance(prep, DiscreteMoments):
            raise ConfigError("a discrete bath needs DiscreteMoments as preparation")
        return _discrete_sources(rf, bath, prep, times)
    if bath.is_null:
        return np.zeros((times.size, 2, 2)), np.zeros((times.size, 2))
    t_max = float(times.max())
    coarse = _continuum_sources(rf, bath, prep, times, _bath_rule(bath, t_max, order=6),
                                want_c, want_i)
    fine = _continuum_sources(rf, bath, prep, times, _bath_rule(bath, t_max, order=10),
                              want_c, want_i)
    for a, b in zip(coarse, fine):
        err = float(np.max(np.abs(a - b))) if a.size else 0.0
        if err > tol * (1.0 + float(np.max(np.abs(b)))):
            raise QuadratureError("bath frequency quadrature did not converge", estimate=err)
    return fine


def noise_drift(rf, spec, prep, t, tol=1e-8):
    """Noise drift ``I(t) = -int sqrt(w gamma) U(t, w) x(w) dw``; shape (k, 2)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not isinstance(spec, DiscreteBath) and not prep.has_means:
        return np.zeros((t.size, 2))
    return _sources(rf, spec, prep, t, tol, want_c=False)[1]


def covariance_source(rf, spec, prep, t, tol=1e-8):
    """Covariance source C(t); shape (k, 2, 2), symmetric, C(0) = 0."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    C = _sources(rf, spec, prep, t, tol, want_i=False)[0]
    return _check_psd(0.5 * (C + np.swapaxes(C, -1, -2)))


def _check_psd(C, tol=1e-9):
    ev = np.linalg.eigvalsh(C)
    scale = 1.0 + np.abs(C).max(axis=(-1, -2))
    if np.any(ev[..., 0] < -tol * scale):
        raise NumericalError(f"covariance source is indefinite (min eigenvalue {ev.min():.3g})")
    return C


def gaussian_propagator(rf, spec, prep, t, tol=1e-8):
    """GaussianPropagator objects for each requested time."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    C, I = _sources(rf, spec, prep, t, tol)
    C = _check_psd(0.5 * (C + np.swapaxes(C, -1, -2)))
    U = rf.propagator(t)
    out = []
    for k, tk in enumerate(t):
        if tk == 0.0:
            out.append(GaussianPropagator(0.0, np.eye(2), np.zeros(2), np.zeros((2, 2))))
        else:
            out.append(GaussianPropagator(float(tk), U[k], I[k], C[k]))
    return out


def propagate_trajectory(rf, spec, prep, m0, times, tol=1e-8):
    """Moments along a time grid; returns ``(X (k,2), Sigma (k,2,2))``."""
    m0 = m0.validate()
    times = np.atleast_1d(np.asarray(times, dtype=float))
    gps = gaussian_propagator(rf, spec, prep, times, tol)
    X = np.array([g.U @ m0.X + g.I for g in gps])
    S = np.array([g.U @ m0.sigma @ g.U.T + g.C for g in gps])
    return X, S


def propagate_moments(rf, spec, prep, m0, t, tol=1e-8):
    """Moments at a single time; ``t = 0`` returns ``m0`` unchanged."""
    if t == 0:
        return m0.validate()
    X, S = propagate_trajectory(rf, spec, prep, m0, [t], tol)
    return PhaseMoments(X[0], S[0])


def gaussian_wigner(m, x):
    """Gaussian Wigner function with moments ``m`` at points ``x`` (..., 2)."""
    det = np.linalg.det(m.sigma)
    if det <= 0:
        raise ConfigError("singular covariance has no Gaussian Wigner function")
    d = np.asarray(x, dtype=float) - m.X
    inv = np.linalg.inv(m.sigma)
    quad = np.einsum("...i,ij,...j->...", d, inv, d)
    return np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))


def propagating_function_wigner(gp, x_tilde, x):
    """J_W(x_tilde, x, t): Gaussian in ``x_tilde - U x - I`` with covariance C."""
    if gp.is_delta:
        raise SingularRepresentationError(
            "J_W is a delta distribution here; apply the moment map GaussianPropagator.apply")
    d = np.asarray(x_tilde, dtype=float) - np.einsum("ij,...j->...i", gp.U, x) - gp.I
    inv = np.linalg.inv(gp.C)
    quad = np.einsum("...i,ij,...j->...", d, inv, d)
    return np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(np.linalg.det(gp.C)))


class PositionParams(NamedTuple):
    j1: float
    j2: float
    j3: float
    j4: float
    j5: float
    j6: float
    j7: float
    j8: float
    j9: float


def position_propagator_params(gp, threshold=1e-10):
    """Parameters of the density-matrix propagator in position representation."""
    U, C, I = gp.U, gp.C, gp.I
    uqq, uqp, upq, upp = U[0, 0], U[0, 1], U[1, 0], U[1, 1]
    if abs(uqp) < threshold:
        raise SingularRepresentationError(
            f"position representation singular: U_QP = {uqp:.3g}")
    r = upp / uqp
    return PositionParams(
        j1=-C[0, 0] / (2 * uqp**2),
        j2=-C[0, 1] / uqp + C[0, 0] * upp / uqp**2,
        j3=-0.5 * C[1, 1] - 0.5 * r**2 * C[0, 0] + r * C[0, 1],
        j4=uqq / uqp,
        j5=upq - uqq * upp / uqp,
        j6=-1.0 / uqp,
        j7=r,
        j8=I[0] / uqp,
        j9=I[1] - r * I[0],
    )


def position_propagator(gp, Y, y, X, x):
    """J(Y, y, X, x) with centre/difference coordinates of final and initial points."""
    j = position_propagator_params(gp)
    phase = (j.j4 * x + j.j5 * y) * X + (j.j6 * x + j.j7 * y) * Y + j.j8 * x + j.j9 * y
    return abs(j.j6) / (2 * np.pi) * np.exp(j.j1 * x**2 + j.j2 * x * y + j.j3 * y**2 + 1j * phase)


def wigner_grid(m, n=257, width=6.0):
    """Gaussian Wigner function on an n x n grid spanning +-width standard deviations."""
    sq, sp = np.sqrt(m.sigma[0, 0]), np.sqrt(m.sigma[1, 1])
    q = m.X[0] + np.linspace(-width, width, n) * sq
    p = m.X[1] + np.linspace(-width, width, n) * sp
    Q, P = np.meshgrid(q, p, indexing="ij")
    return q, p, gaussian_wigner(m, np.stack([Q, P], -1))


def moments_from_grid(q, p, W):
    """Normalization, means and covariance of a gridded Wigner function."""
    Q, P = np.meshgrid(q, p, indexing="ij")

    def integ(f):
        return np.trapezoid(np.trapezoid(f, p, axis=1), q)

    norm = integ(W)
    mq, mp = integ(Q * W) / norm, integ(P * W) / norm
    sqq = integ((Q - mq) ** 2 * W) / norm
    spp = integ((P - mp) ** 2 * W) / norm
    sqp = integ((Q - mq) * (P - mp) * W) / norm
    return norm, PhaseMoments([mq, mp], [[sqq, sqp], [sqp, spp]])


def write_moments_csv(path, times, X, S, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["t", "Xq", "Xp", "Sqq", "Sqp", "Spp", "detS"])
        for t, x, s in zip(times, X, S):
            w.writerow([repr(float(v)) for v in
                        (t, x[0], x[1], s[0, 0], s[0, 1], s[1, 1], np.linalg.det(s))])


def write_wigner_csv(path, q, p, W, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["q", "p", "w"])
        for i, qi in enumerate(q):
            for k, pk in enumerate(p):
                w.writerow([repr(float(qi)), repr(float(pk)), repr(float(W[i, k]))])
