"""Quadrature rules shared by the bath, response and propagation modules.

Every integral over a bath support interval goes through the sine map
``omega = c + h*sin(theta)``, which turns square-root (and inverse
square-root) band-edge behaviour into smooth, cosine-weighted integrands.
"""

import warnings

import numpy as np
from scipy import integrate

from .exceptions import QuadratureError

__all__ = [
    "gauss_legendre",
    "support_rule",
    "adaptive_support_rule",
    "integrate_support",
    "hermite_fourier_cumulative",
]

_GL_CACHE = {}


def gauss_legendre(order):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[order]


def _theta_panels_to_rule(edges, lo, hi, order):
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    theta = a + (b - a) * x[None, :]
    wt = (b - a) * w[None, :]
    omega = c + h * np.sin(theta)
    weight = wt * h * np.cos(theta)
    return omega.ravel(), weight.ravel()


def _max_theta_step(lo, hi, t_max, fraction):
    # |d omega / d theta| <= h, so a theta step of dtheta moves omega by <= h*dtheta
    if t_max <= 0:
        return np.pi
    h = 0.5 * (hi - lo)
    return max(fraction * 2.0 * np.pi / t_max / h, 1e-6)


def _theta_breaks(points, lo, hi):
    """Sine-map angles of interior break frequencies."""
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    pts = np.asarray([p for p in (points or ()) if lo < p < hi], dtype=float)
    return np.arcsin((pts - c) / h)


def _merge_edges(edges, points, lo, hi):
    breaks = _theta_breaks(points, lo, hi)
    if breaks.size == 0:
        return edges
    return np.unique(np.concatenate([edges, breaks]))


def support_rule(lo, hi, n_panels=64, order=16, t_max=0.0, fraction=0.25, points=()):
    """Composite Gauss-Legendre rule on ``[lo, hi]`` in the sine-mapped variable.

    Panels are additionally split so that the oscillation ``exp(i*omega*t)``
    with ``t <= t_max`` advances by at most ``fraction`` of a period per panel.

    Returns
    -------
    omega, weight : ndarray
        Nodes and weights with the Jacobian folded in, so that
        ``sum(weight * f(omega))`` approximates ``int_lo^hi f``.

    ``points`` are frequencies where ``f`` has kinks; panels are split there.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    step = min(np.pi / n_panels, _max_theta_step(lo, hi, t_max, fraction))
    n = int(np.ceil(np.pi / step))
    edges = _merge_edges(np.linspace(-0.5 * np.pi, 0.5 * np.pi, n + 1), points, lo, hi)
    return _theta_panels_to_rule(edges, lo, hi, order)


def adaptive_support_rule(
    fun, lo, hi, tol=1e-13, order=10, t_max=0.0, fraction=0.25, max_depth=40,
    initial_panels=32, points=(), max_panels=5000,
):
    """Adaptive composite rule resolving ``fun`` on ``[lo, hi]``.

    ``fun`` maps an array of frequencies to an array of shape ``(k, n)`` or
    ``(n,)``. Panels are bisected until a panel's estimate and the sum over its
    two halves agree to ``tol`` (absolute, per component) or to the rounding
    level of the panel sums. Afterwards panels are split further so
    oscillations up to ``t_max`` stay resolved. Initial panels are split at
    the kink frequencies ``points``. More than ``max_panels`` bisections raise
    QuadratureError instead of refining without bound.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x, w = gauss_legendre(order)

    def panel_estimate(a, b):
        theta = a + (b - a) * x
        om = c + h * np.sin(theta)
        vals = np.atleast_2d(fun(om))
        wt = (b - a) * w * h * np.cos(theta)
        return vals @ wt, np.abs(vals) @ wt

    start = _merge_edges(np.linspace(-0.5 * np.pi, 0.5 * np.pi, initial_panels + 1),
                         points, lo, hi)
    stack = [(a, b, 0) for a, b in zip(start[:-1], start[1:])]
    accepted = []
    splits = 0
    eps = np.finfo(float).eps
    while stack:
        a, b, depth = stack.pop()
        m = 0.5 * (a + b)
        whole, _ = panel_estimate(a, b)
        (left, left_abs), (right, right_abs) = panel_estimate(a, m), panel_estimate(m, b)
        halves = left + right
        err = float(np.max(np.abs(whole - halves)))
        floor = 100.0 * eps * float(np.max(left_abs + right_abs))
        if err <= max(tol, floor):
            accepted.extend([(a, m), (m, b)])
        elif depth >= max_depth:
            raise QuadratureError(
                "adaptive rule did not converge on support", estimate=err)
        elif splits >= max_panels:
            raise QuadratureError(
                f"adaptive rule exceeded {max_panels} bisections on support", estimate=err)
        else:
            splits += 1
            stack.extend([(a, m, depth + 1), (m, b, depth + 1)])

    max_step = _max_theta_step(lo, hi, t_max, fraction)
    edges = []
    for a, b in sorted(accepted):
        k = max(1, int(np.ceil((b - a) / max_step)))
        edges.extend(np.linspace(a, b, k + 1)[:-1])
    edges.append(0.5 * np.pi)
    return _theta_panels_to_rule(np.asarray(edges), lo, hi, order)


def integrate_support(fun, lo, hi, tol=1e-12, points=None, limit=400):
    """Adaptive Gauss-Kronrod integral of a scalar function over ``[lo, hi]``.

    The integral is taken in the sine-mapped variable. ``points`` are
    frequencies where the integrand is known to be sharp (e.g. a resonance).
    """
    if hi <= lo:
        return 0.0
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def g(theta):
        return fun(c + h * np.sin(theta)) * h * np.cos(theta)

    brk = list(_theta_breaks(points, lo, hi)) or None
    if brk is not None:
        limit = max(limit, 4 * (len(brk) + 2))
    with warnings.catch_warnings():
        # convergence is judged from the returned error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            g, -0.5 * np.pi, 0.5 * np.pi, epsabs=tol, epsrel=tol, limit=limit,
            points=brk,
        )
    if not np.isfinite(val) or err > max(1e3 * tol, 1e-8 * abs(val)):
        raise QuadratureError("support integral did not converge", estimate=err)
    return val


def hermite_fourier_cumulative(times, f, df, omegas, t_eval=None, gl_order=4):
    """Cumulative ``int_0^t f(tau) exp(-i omega tau) dtau`` from grid samples.

    ``f`` is interpolated by the piecewise cubic Hermite polynomial through the
    samples ``f`` and their derivatives ``df``; each interval is integrated with
    Gauss-Legendre nodes, which is accurate while ``omega*dt`` stays small.

    Parameters
    ----------
    times : (n,) uniform grid starting at 0
    f, df : (n,) samples and derivative samples
    omegas : (m,) frequencies
    t_eval : (k,) times in ``[0, times[-1]]``; default is the grid itself

    Returns
    -------
    (k, m) complex array
    """
    times = np.asarray(times, dtype=float)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    dt = times[1] - times[0]
    s, g = gauss_legendre(gl_order)
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    f_nodes = (np.outer(f[:-1], h00) + np.outer(dt * df[:-1], h10)
               + np.outer(f[1:], h01) + np.outer(dt * df[1:], h11))
    phase_local = np.exp(-1j * np.outer(s * dt, omegas)) * g[:, None]
    cell = dt * (f_nodes @ phase_local) * np.exp(-1j * np.outer(times[:-1], omegas))
    cum = np.vstack([np.zeros((1, omegas.size), complex), np.cumsum(cell, axis=0)])
    if t_eval is None:
        return cum

    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    k = np.clip(np.floor(t_eval / dt + 1e-9).astype(int), 0, times.size - 1)
    out = cum[k].copy()
    frac = t_eval / dt - k
    partial = frac > 1e-9
    for i in np.flatnonzero(partial):
        j = k[i]
        sl = s * frac[i]
        hv = np.array([2 * sl**3 - 3 * sl**2 + 1, sl**3 - 2 * sl**2 + sl,
                       -2 * sl**3 + 3 * sl**2, sl**3 - sl**2])
        fv = hv.T @ np.array([f[j], dt * df[j], f[j + 1], dt * df[j + 1]])
        tau = times[j] + sl * dt
        out[i] += frac[i] * dt * ((fv * g) @ np.exp(-1j * np.outer(tau, omegas)))
    return out
