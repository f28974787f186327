r"""Closed-form solutions of the SIS model.

All three stochastic-free/explicit representations share one shape,

.. math::

    I(t) = \frac{i_0 \mathcal{E}(t)}{1 + \frac{i_0}{N}(\mathcal{E}(t) - 1)
           + i_0 \frac{\mu+\gamma}{N} Q(t)},
    \qquad Q(t) = \int_0^t \mathcal{E}(s)\,ds,

with :math:`\mathcal{E}(t) = e^{x(t)}`. Multiplying through by N shows
``N * denominator = a + b`` with ``a = i0 e^x`` and
``b = N - i0 + i0 (mu+gamma) Q``, both positive, so

.. math::  \ln\frac{I}{N - I} = \ln i_0 + x - \ln b .

Evaluating the log-odds and mapping back with a sigmoid keeps every state
strictly inside ]0, N[ and never forms ``e^x`` itself, so horizons where
``x`` reaches thousands are fine.
"""

from __future__ import annotations

import math

import numpy as np

from .noise import BrownianPath, TimeGrid
from .params import SisParams
from .trajectory import (
    Provenance,
    Trajectory,
    from_log_odds,
    make_diag,
    params_hash,
)

__all__ = [
    "log_exprel",
    "deterministic_solution",
    "stratonovich_exact",
    "wong_zakai_exact",
    "time_varying_deterministic",
    "stratonovich_log_odds",
    "wong_zakai_log_odds",
]

_SERIES_CUTOFF = 1e-8


def log_exprel(z):
    """ln((e^z - 1)/z), continuous through z = 0, no overflow for large |z|."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < _SERIES_CUTOFF
    a = np.where(small, 1.0, np.abs(z))  # placeholder keeps log() finite on masked entries
    # (e^z - 1)/z = e^{max(z, 0)} (1 - e^{-|z|}) / |z|
    out = np.maximum(z, 0.0) + np.log(-np.expm1(-a)) - np.log(a)
    # 1 + z/2 + z^2/6 in log form
    return np.where(small, z / 2 + z * z / 24, out)


def _log_b(p: SisParams, log_q):
    """ln(N - i0 + i0 (mu+gamma) Q) from ln Q."""
    lb = np.logaddexp(math.log(p.N - p.i0), math.log(p.i0 * p.mu_plus_gamma) + log_q)
    # denominator >= 1 - i0/N at every knot
    assert np.all(lb >= math.log(p.N - p.i0)), "denominator fell below 1 - i0/N"
    return lb


def _log_odds(p: SisParams, x, log_c):
    """Log-odds at the knots from the exponent ``x`` (n+1, ...) and the
    per-cell log integrals ``log_c`` (n, ...)."""
    log_q = np.empty_like(x)
    log_q[0] = -np.inf
    np.logaddexp.accumulate(log_c, axis=0, out=log_q[1:])
    return math.log(p.i0) + x - _log_b(p, log_q)


def _exponent(p: SisParams, values, dt: float):
    t = (np.arange(values.shape[0]) * dt).reshape((-1,) + (1,) * (values.ndim - 1))
    return p.delta * t + p.N * p.sigma * values


def stratonovich_log_odds(p: SisParams, values, dt: float):
    """Log-odds of the explicit Stratonovich solution at the knots.

    The integral of E over a cell uses a trapezoid rule on the Brownian factor
    with the drift factor integrated exactly::

        int_cell e^{delta s + N sigma B(s)} ds
            ~ (e^{N sigma B_k} + e^{N sigma B_{k+1}})/2 * int_cell e^{delta s} ds

    which reduces to the exact deterministic integral when sigma = 0.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0] - 1
    t = (np.arange(n) * dt).reshape((-1,) + (1,) * (values.ndim - 1))
    nsb = p.N * p.sigma * values
    log_c = (p.delta * t + math.log(dt) + log_exprel(p.delta * dt)
             + np.logaddexp(nsb[:-1], nsb[1:]) - math.log(2.0))
    return _log_odds(p, _exponent(p, values, dt), log_c)


def wong_zakai_log_odds(p: SisParams, values, dt: float):
    """Log-odds of the polygonal-noise solution I^pi at the knots.

    On each cell the exponent is affine with slope ``delta + N sigma B'``,
    so the cell integral of E^pi is ``E^pi(t_k) dt exprel(slope dt)``, exact.
    """
    values = np.asarray(values, dtype=np.float64)
    x = _exponent(p, values, dt)
    slope = p.delta + p.N * p.sigma * (np.diff(values, axis=0) / dt)
    log_c = x[:-1] + math.log(dt) + log_exprel(slope * dt)
    return _log_odds(p, x, log_c)


def _trajectory(p, grid, J, method, seed=None, substeps=None):
    states, log_states, fixed = from_log_odds(J, p.N, p.i0)
    prov = Provenance(method, params_hash(p), seed, grid.dt, substeps)
    return Trajectory(grid, states, prov, make_diag(states, underflow_count=fixed), log_states)


def deterministic_solution(p: SisParams, grid: TimeGrid) -> Trajectory:
    """Pointwise closed form of the deterministic SIS equation (sigma ignored).

    ``I(t) = i0 e^{delta t} / (1 + beta i0 A(t))`` with
    ``A(t) = (e^{delta t} - 1)/delta`` (``A(t) = t`` when delta = 0).
    """
    t = grid.knots
    with np.errstate(divide="ignore"):
        log_a = np.log(t) + log_exprel(p.delta * t)
    log_a[0] = -np.inf
    J = math.log(p.i0) + p.delta * t - _log_b(p, log_a)
    return _trajectory(p, grid, J, "deterministic")


def stratonovich_exact(p: SisParams, path: BrownianPath) -> Trajectory:
    """Explicit solution of the Stratonovich-corrected model on the knots of ``path``."""
    J = stratonovich_log_odds(p, path.values, path.grid.dt)
    return _trajectory(p, path.grid, J, "stratonovich_exact", path.seed)


def wong_zakai_exact(p: SisParams, path: BrownianPath) -> Trajectory:
    """Exact solution of the random ODE driven by the polygonal path B^pi."""
    J = wong_zakai_log_odds(p, path.values, path.grid.dt)
    return _trajectory(p, path.grid, J, "wong_zakai_exact", path.seed)


def time_varying_deterministic(p: SisParams, beta_of_t, grid: TimeGrid) -> Trajectory:
    """Deterministic SIS with a transmission rate constant on each grid cell.

    Evaluates ``I(t) = i0 e^{X(t)} / (1 + int_0^t beta(s) i0 e^{X(s)} ds)``
    with ``X(t) = int_0^t (N beta(s) - (mu+gamma)) ds`` directly, cell integrals
    exact. ``beta_of_t`` is a scalar or a sequence of ``n_cells`` cell values.
    Works in the linear domain; raises OverflowError if X exceeds 700.
    """
    n, dt = grid.n_cells, grid.dt
    b = np.broadcast_to(np.asarray(beta_of_t, dtype=np.float64), (n,))
    rate = p.N * b - p.mu_plus_gamma
    X = np.concatenate([[0.0], np.cumsum(rate * dt)])
    if X.max() > 700:
        raise OverflowError("exponent above 700; use the log-domain evaluators")
    cell = b * p.i0 * np.exp(X[:-1]) * dt * np.exp(log_exprel(rate * dt))
    D = 1.0 + np.concatenate([[0.0], np.cumsum(cell)])
    states = p.i0 * np.exp(X) / D
    states[0] = p.i0
    prov = Provenance("time_varying_deterministic", params_hash(p), None, dt)
    log_states = math.log(p.i0) + X - np.log(D)
    return Trajectory(grid, states, prov, make_diag(states), log_states)
