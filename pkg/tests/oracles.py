"""Independent reference computations used by the tests.

Nothing here imports the package: each oracle recomputes a quantity from
its defining equation by a different route (ODE integration, high precision
arithmetic, bisection).
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

P1 = dict(N=100.0, beta=0.5, mu_plus_gamma=25.0, sigma=0.02, i0=10.0)


def sis_rhs(t, x, N, beta, mpg, slope=0.0, sigma=0.0):
    """dI/dt = beta I (N - I) - (mu+gamma) I + sigma I (N - I) slope."""
    return (beta + sigma * slope) * x * (N - x) - mpg * x


def rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def adaptive_rk4(f, x0, times, rtol=1e-12, h0=1e-3):
    """Step-doubling RK4 with local extrapolation; returns x at ``times``."""
    out = [x0]
    t, x, h = float(times[0]), float(x0), h0
    for target in times[1:]:
        while t < target:
            h = min(h, target - t)
            full = rk4_step(f, t, x, h)
            half = rk4_step(f, t + h / 2, rk4_step(f, t, x, h / 2), h / 2)
            err = abs(half - full) / 15
            if err <= rtol * max(abs(half), 1e-300) or h < 1e-12:
                t, x = t + h, half + (half - full) / 15
                h *= min(2.0, 0.9 * (rtol * abs(x) / max(err, 1e-300)) ** 0.2)
            else:
                h *= max(0.2, 0.9 * (rtol * abs(half) / err) ** 0.2)
        out.append(x)
    return np.array(out)


def ode_reference(N, beta, mpg, i0, times, rtol=1e-12):
    return adaptive_rk4(lambda t, x: sis_rhs(t, x, N, beta, mpg), i0, np.asarray(times), rtol)


def theta_mp(N, beta, mpg, sigma, y, dps=40):
    """Scale density at high precision."""
    with mp.workdps(dps):
        lin = -2 * (mp.mpf(N) * beta - mpg) / (mp.mpf(sigma) ** 2 * N**2)
        e = 2 * mp.mpf(mpg) / (mp.mpf(sigma) ** 2 * N**2)
        return mp.e ** (lin * y + e * (mp.e**y - 1))


def bisect(fn, a, b, tol=1e-14, max_iter=400):
    """Plain bisection on a sign-changing bracket, in mpmath precision."""
    fa = fn(a)
    for _ in range(max_iter):
        m = (a + b) / 2
        fm = fn(m)
        if fm == 0 or (b - a) / 2 < tol:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return (a + b) / 2


def strat_eta_mp(N, beta, mpg, sigma, x):
    x = mp.mpf(x)
    return (mp.mpf(sigma) ** 2 * x / 2 - beta) * (x - N) - mpg


def ito_eta_mp(N, beta, mpg, sigma, x):
    x = mp.mpf(x)
    return beta * (N - x) - mpg - mp.mpf(sigma) ** 2 / 2 * (N - x) ** 2


def eta_root_mp(eta, N, beta, mpg, sigma):
    with mp.workdps(50):
        r = bisect(lambda x: eta(N, beta, mpg, sigma, x), mp.mpf("1e-30"), mp.mpf(N) - mp.mpf("1e-30"),
                   tol=mp.mpf("1e-40"))
        return float(r)


def wz_mp(N, beta, mpg, sigma, i0, knots, values, dps=40):
    """Polygonal-noise closed form at every knot with mpmath quadrature of
    the exponential over each linear piece."""
    with mp.workdps(dps):
        delta = mp.mpf(N) * beta - mpg
        out, q = [mp.mpf(i0)], mp.mpf(0)
        for k in range(len(knots) - 1):
            t0, t1 = mp.mpf(knots[k]), mp.mpf(knots[k + 1])
            b0, b1 = mp.mpf(values[k]), mp.mpf(values[k + 1])
            slope = (b1 - b0) / (t1 - t0)
            q += mp.quad(lambda s: mp.e ** (delta * s + N * sigma * (b0 + slope * (s - t0))), [t0, t1])
            E = mp.e ** (delta * t1 + N * sigma * b1)
            out.append(i0 * E / (1 + (mp.mpf(i0) / N) * (E - 1) + i0 * (mpg / mp.mpf(N)) * q))
        return np.array([float(v) for v in out])


def stepped_ode(N, beta, mpg, sigma, i0, knots, values, substeps=64):
    """Random ODE driven by the polygonal path, classical RK4 per cell."""
    x = float(i0)
    out = [x]
    for k in range(len(knots) - 1):
        h = (knots[k + 1] - knots[k]) / substeps
        slope = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k])
        f = lambda t, y: sis_rhs(t, y, N, beta, mpg, slope, sigma)
        for j in range(substeps):
            x = rk4_step(f, 0.0, x, h)
        out.append(x)
    return np.array(out)


def gaussian_increments(rng, n, dt):
    return rng.normal(0.0, math.sqrt(dt), n)
