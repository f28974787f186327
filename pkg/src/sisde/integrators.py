"""Time-stepping schemes for the SIS model variants.

Every stepper consumes the increments of a :class:`~sisde.noise.BrownianPath`
and never draws noise itself. The ``*_kernel`` functions take knot values of
shape ``(n_cells + 1,)`` or ``(n_cells + 1, batch)`` and step all columns
together with elementwise operations only, so a column's result does not
depend on what else is in the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import BrownianPath
from .params import SisParams
from .trajectory import Provenance, Trajectory, from_log_odds, make_diag, params_hash

__all__ = [
    "MODELS",
    "METHODS",
    "SchemeSpec",
    "gray_drift",
    "corrected_drift",
    "diffusion",
    "euler_maruyama",
    "heun_stratonovich",
    "logodds_euler",
    "wz_rk4",
    "simulate",
    "simulate_values",
]

MODELS = ("ito_gray", "ito_corrected", "stratonovich")
METHODS = ("euler_maruyama", "heun_stratonovich", "logodds_euler", "wz_rk4")
_PAIRINGS = {
    "euler_maruyama": ("ito_gray", "ito_corrected"),
    "heun_stratonovich": ("stratonovich",),
    # same law: the corrected Ito form and the Stratonovich form
    "logodds_euler": ("stratonovich", "ito_corrected"),
    # the polygonal random ODE, whose limit is the Stratonovich model
    "wz_rk4": ("stratonovich",),
}
DEFAULT_CLAMP = 1e-12
EXP_CAP = 709.0
DRIFT_CAP = 1e300


@dataclass(frozen=True)
class SchemeSpec:
    method: str
    model: str
    clamp_epsilon: float = DEFAULT_CLAMP
    substeps: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.model not in _PAIRINGS[self.method]:
            raise ValueError(
                f"{self.method} does not apply to model {self.model!r} "
                f"(allowed: {_PAIRINGS[self.method]})")
        if not (self.clamp_epsilon >= 0 and self.clamp_epsilon < 0.5):
            raise ValueError("clamp_epsilon must lie in [0, 0.5)")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("substeps must be a positive integer")


def gray_drift(p: SisParams, x):
    return p.beta * x * (p.N - x) - p.mu_plus_gamma * x


def corrected_drift(p: SisParams, x):
    """Ito drift equivalent to the Stratonovich model: Gray drift plus
    (sigma^2/2) x (N-x) (N-2x)."""
    return gray_drift(p, x) + 0.5 * p.sigma**2 * x * (p.N - x) * (p.N - 2 * x)


def diffusion(p: SisParams, x):
    return p.sigma * x * (p.N - x)


def _clamp(x, lo, hi, counts):
    bad = (x < lo) | (x > hi)
    if np.any(bad):
        counts += bad
        x = np.clip(x, lo, hi)
    return x


def _start(values, x0):
    values = np.asarray(values, dtype=np.float64)
    dB = np.diff(values, axis=0)
    out = np.empty_like(values)
    out[0] = x0
    counts = np.zeros(values.shape[1:], dtype=np.int64)
    return dB, out, counts


def em_kernel(p: SisParams, values, dt: float, model: str = "ito_gray",
              clamp_epsilon: float = DEFAULT_CLAMP):
    """Euler-Maruyama for the Ito forms. Returns ``(states, clamp_counts)``."""
    drift = {"ito_gray": gray_drift, "ito_corrected": corrected_drift}[model]
    dB, out, counts = _start(values, p.i0)
    lo, hi = clamp_epsilon * p.N, (1 - clamp_epsilon) * p.N
    x = out[0].copy()
    for k in range(dB.shape[0]):
        x = x + drift(p, x) * dt + diffusion(p, x) * dB[k]
        x = _clamp(x, lo, hi, counts)
        out[k + 1] = x
    return out, counts


def heun_kernel(p: SisParams, values, dt: float, clamp_epsilon: float = DEFAULT_CLAMP):
    """Stratonovich Heun: Euler predictor, trapezoidal corrector on both
    drift and diffusion. Returns ``(states, clamp_counts)``."""
    dB, out, counts = _start(values, p.i0)
    lo, hi = clamp_epsilon * p.N, (1 - clamp_epsilon) * p.N
    x = out[0].copy()
    for k in range(dB.shape[0]):
        a0, g0 = gray_drift(p, x), diffusion(p, x)
        xp = _clamp(x + a0 * dt + g0 * dB[k], lo, hi, counts)
        x = x + 0.5 * (a0 + gray_drift(p, xp)) * dt + 0.5 * (g0 + diffusion(p, xp)) * dB[k]
        x = _clamp(x, lo, hi, counts)
        out[k + 1] = x
    return out, counts


def logodds_kernel(p: SisParams, values, dt: float):
    """Euler on J = ln(I/(N-I)):
    ``dJ = (delta - (mu+gamma) e^J) dt + sigma N dB`` (additive noise).

    Returns ``(J, cap_counts)``; ``e^J`` is formed from ``min(J, 709)`` and
    the removal increment is bounded by ``1e300`` so that J stays finite
    even when the step size is far beyond the stability limit. Both events
    are counted.
    """
    dB, J, caps = _start(values, math.log(p.i0 / (p.N - p.i0)))
    delta, m, sn = p.delta, p.mu_plus_gamma, p.sigma * p.N
    j = J[0].copy()
    for k in range(dB.shape[0]):
        over = j > EXP_CAP
        if np.any(over):
            caps += over
        with np.errstate(over="ignore"):
            removal = m * np.exp(np.minimum(j, EXP_CAP)) * dt
        huge = removal > DRIFT_CAP
        if np.any(huge):
            caps += huge
            removal = np.minimum(removal, DRIFT_CAP)
        j = j + delta * dt - removal + sn * dB[k]
        J[k + 1] = j
    return J, caps


def rk4_kernel(p: SisParams, values, dt: float, substeps: int = 1,
               clamp_epsilon: float = DEFAULT_CLAMP):
    """Classical RK4 on the polygonal random ODE
    ``dI/dt = (beta + sigma B'(t)) I (N - I) - (mu+gamma) I``,
    ``substeps`` steps per cell. Returns ``(states, clamp_counts)``."""
    values = np.asarray(values, dtype=np.float64)
    slopes = np.diff(values, axis=0) / dt
    _, out, counts = _start(values, p.i0)
    lo, hi = clamp_epsilon * p.N, (1 - clamp_epsilon) * p.N
    h = dt / substeps
    N, m = p.N, p.mu_plus_gamma
    x = out[0].copy()
    for k in range(slopes.shape[0]):
        b = p.beta + p.sigma * slopes[k]

        def f(y):
            return b * y * (N - y) - m * y

        for _ in range(substeps):
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
            x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        x = _clamp(x, lo, hi, counts)
        out[k + 1] = x
    return out, counts


def simulate_values(p: SisParams, values, dt: float, spec: SchemeSpec):
    """Run ``spec`` on knot values (one path or a batch of columns).

    Returns ``(states, log_states_or_None, clamp_counts, fixed_counts)``
    where ``fixed_counts`` counts log-odds caps and interior-rounding fixes.
    """
    if spec.method == "logodds_euler":
        J, caps = logodds_kernel(p, values, dt)
        if J.ndim == 1:
            states, log_states, fixed = from_log_odds(J, p.N, p.i0)
            return states, log_states, np.int64(0), caps + fixed
        cols = [from_log_odds(J[:, j], p.N, p.i0) for j in range(J.shape[1])]
        states = np.stack([c[0] for c in cols], axis=1)
        log_states = np.stack([c[1] for c in cols], axis=1)
        fixed = np.array([c[2] for c in cols]) + caps
        return states, log_states, np.zeros_like(fixed), fixed
    if spec.method == "euler_maruyama":
        states, clamps = em_kernel(p, values, dt, spec.model, spec.clamp_epsilon)
    elif spec.method == "heun_stratonovich":
        states, clamps = heun_kernel(p, values, dt, spec.clamp_epsilon)
    else:
        states, clamps = rk4_kernel(p, values, dt, spec.substeps, spec.clamp_epsilon)
    return states, None, clamps, np.zeros_like(clamps)


def simulate(p: SisParams, path: BrownianPath, spec: SchemeSpec) -> Trajectory:
    states, log_states, clamps, fixed = simulate_values(p, path.values, path.grid.dt, spec)
    prov = Provenance(f"{spec.method}/{spec.model}", params_hash(p), path.seed,
                      path.grid.dt, spec.substeps if spec.method == "wz_rk4" else None)
    if spec.method == "logodds_euler":
        diag = make_diag(states, underflow_count=int(fixed))
    else:
        diag = make_diag(states, clamp_count=int(clamps))
    return Trajectory(path.grid, states, prov, diag, log_states)


def euler_maruyama(p: SisParams, path: BrownianPath, model: str = "ito_gray",
                   clamp_epsilon: float = DEFAULT_CLAMP) -> Trajectory:
    """Euler-Maruyama for ``model`` in {"ito_gray", "ito_corrected"}.

    Steps leaving ``[eps N, (1 - eps) N]`` are clamped and counted in
    ``diag.clamp_count``.
    """
    return simulate(p, path, SchemeSpec("euler_maruyama", model, clamp_epsilon))


def heun_stratonovich(p: SisParams, path: BrownianPath,
                      clamp_epsilon: float = DEFAULT_CLAMP) -> Trajectory:
    return simulate(p, path, SchemeSpec("heun_stratonovich", "stratonovich", clamp_epsilon))


def logodds_euler(p: SisParams, path: BrownianPath) -> Trajectory:
    """Euler on the log-odds of the Stratonovich model; states are strictly
    interior by construction and ``log_states`` is kept for long horizons."""
    return simulate(p, path, SchemeSpec("logodds_euler", "stratonovich"))


def wz_rk4(p: SisParams, path: BrownianPath, substeps: int = 16) -> Trajectory:
    """RK4 check of the polygonal random ODE, ``substeps`` RK4 steps per cell."""
    return simulate(p, path, SchemeSpec("wz_rk4", "stratonovich", substeps=substeps))
