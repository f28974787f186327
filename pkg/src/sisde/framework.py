r"""Scalar SDEs of the form

.. math::  dX = [f(X) - h(X)]\,dt + \sum_i g_i(X)\,dB_i, \qquad X(0) \in ]0, N[,

with grid-checkable structural assumptions, the exponential-rate function

.. math::  \eta(x) = \frac{f(x) - h(x)}{x} - \frac12 \sum_i \frac{g_i(x)^2}{x^2},

its supremum and zero, the resulting extinction/persistence verdict, and a
shared-noise harness for pathwise ordering of two such equations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .noise import BrownianPath
from .params import SisParams

__all__ = [
    "AssumptionViolated",
    "OutOfDomain",
    "NoSignChange",
    "DriftOrderViolated",
    "CoefficientTriple",
    "ValidationReport",
    "EtaProfile",
    "Verdict",
    "Classification",
    "OrderingReport",
    "ito_gray_triple",
    "strat_corrected_triple",
    "deterministic_triple",
    "model_triple",
    "without_removal",
    "scaled",
    "validate_coefficients",
    "boundary_set",
    "eta_eval",
    "eta_generic",
    "eta_sup",
    "eta_root",
    "eta_profile",
    "is_strictly_decreasing",
    "classify",
    "comparison_harness",
    "em_generic",
]

GRID_SIZE = 4096
DEAD_BAND = 1e-12
ROOT_WIDTH = 1e-12
SUP_AGREE = 1e-8
_INVPHI = (math.sqrt(5) - 1) / 2


class AssumptionViolated(ValueError):
    def __init__(self, condition: str, where: float):
        super().__init__(f"{condition} (at x = {where!r})")
        self.condition = condition
        self.where = where


class OutOfDomain(ValueError):
    pass


class NoSignChange(ValueError):
    pass


class DriftOrderViolated(ValueError):
    pass


Scalar = Callable[[float], float]


@dataclass(frozen=True)
class CoefficientTriple:
    """Coefficients ``f``, ``h``, ``g = (g_1, ..., g_m)`` on ``[0, N]``.

    The optional hooks carry exact knowledge for built-in models:
    ``eta_closed`` a simplified eta, ``eta_slope_max`` the supremum of eta'
    over ]0, N[ (for the monotonicity certificate), ``sup_closed`` a callable
    returning ``(sup, location)`` exactly. ``scale`` multiplies f, h and every
    g_i^2 (used for scale-consistency checks). All functions must accept
    numpy arrays.
    """

    f: Scalar
    h: Scalar
    g: tuple
    N: float
    name: str = "custom"
    eta_closed: Optional[Scalar] = field(default=None, compare=False)
    eta_slope_max: Optional[float] = field(default=None, compare=False)
    sup_closed: Optional[Callable[[], tuple]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(self.g))
        if not self.N > 0:
            raise ValueError("N must be positive")

    @property
    def m(self) -> int:
        return len(self.g)

    def drift(self, x):
        return self.f(x) - self.h(x)


def _sis_parts(p: SisParams):
    N, b, m, s = p.N, p.beta, p.mu_plus_gamma, p.sigma

    def h(x):
        return m * np.asarray(x, dtype=np.float64)

    def g(x):
        x = np.asarray(x, dtype=np.float64)
        return s * x * (N - x)

    return N, b, m, s, h, g


def ito_gray_triple(p: SisParams) -> CoefficientTriple:
    """``f = beta x (N-x)``, ``h = (mu+gamma) x``, ``g = sigma x (N-x)``."""
    N, b, m, s, h, g = _sis_parts(p)
    s2 = s * s

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        return b * x * (N - x)

    def eta(x):
        u = N - np.asarray(x, dtype=np.float64)
        return b * u - m - 0.5 * s2 * u * u

    def sup():
        # concave quadratic in x, vertex where N - x = beta / sigma^2
        if s2 > 0 and 0 < N - b / s2 < N:
            x_v = N - b / s2
            return b * b / (2 * s2) - m, x_v
        return b * N - m - 0.5 * s2 * N * N, 0.0

    return CoefficientTriple(f, h, (g,) if s > 0 else (), N, "ito-gray",
                             eta, s2 * N - b, sup)


def strat_corrected_triple(p: SisParams) -> CoefficientTriple:
    """Ito form of the Stratonovich model: ``f`` gains
    ``(sigma^2/2) x (N-x) (N-2x)``."""
    N, b, m, s, h, g = _sis_parts(p)
    s2 = s * s

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        return b * x * (N - x) + 0.5 * s2 * x * (N - x) * (N - 2 * x)

    def eta(x):
        x = np.asarray(x, dtype=np.float64)
        return (0.5 * s2 * x - b) * (x - N) - m

    def sup():
        # convex quadratic: the supremum over ]0, N[ is a boundary limit
        left, right = b * N - m, -m
        return (left, 0.0) if left >= right else (right, N)

    return CoefficientTriple(f, h, (g,) if s > 0 else (), N, "strat-corrected",
                             eta, 0.5 * s2 * N - b, sup)


def deterministic_triple(p: SisParams) -> CoefficientTriple:
    """sigma-free model: ``g`` is empty and eta is linear."""
    N, b, m, _, h, _ = _sis_parts(p)

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        return b * x * (N - x)

    def eta(x):
        return b * (N - np.asarray(x, dtype=np.float64)) - m

    return CoefficientTriple(f, h, (), N, "deterministic", eta, -b,
                             lambda: (b * N - m, 0.0))


_MODELS = {
    "ito-gray": ito_gray_triple,
    "strat-corrected": strat_corrected_triple,
    "deterministic": deterministic_triple,
}


def model_triple(name: str, p: SisParams) -> CoefficientTriple:
    try:
        return _MODELS[name](p)
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(_MODELS)}") from None


def without_removal(c: CoefficientTriple) -> CoefficientTriple:
    """Same ``f`` and ``g`` with ``h = 0``: the upper comparison equation."""
    return CoefficientTriple(c.f, lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
                             c.g, c.N, c.name + "/h=0")


def scaled(c: CoefficientTriple, k: float) -> CoefficientTriple:
    """Multiply ``f``, ``h`` and every ``g_i^2`` by ``k > 0``; eta scales by ``k``."""
    if not k > 0:
        raise ValueError("scale factor must be positive")
    rk = math.sqrt(k)
    g = tuple((lambda gi: (lambda x: rk * gi(x)))(gi) for gi in c.g)
    eta = None if c.eta_closed is None else (lambda x: k * c.eta_closed(x))
    slope = None if c.eta_slope_max is None else k * c.eta_slope_max
    sup = None
    if c.sup_closed is not None:
        def sup():
            v, loc = c.sup_closed()
            return k * v, loc
    return CoefficientTriple(lambda x: k * c.f(x), lambda x: k * c.h(x), g, c.N,
                             f"{c.name}*{k}", eta, slope, sup)


def _interior_grid(N: float, n: int) -> np.ndarray:
    return N * np.arange(1, n + 1) / (n + 1)


@dataclass(frozen=True)
class ValidationReport:
    name: str
    grid_size: int
    min_h_interior: float
    lipschitz_estimate: float


def validate_coefficients(c: CoefficientTriple, grid_size: int = GRID_SIZE) -> ValidationReport:
    """Check the structural assumptions of the existence theorem.

    ``f(0) = f(N) = g_i(0) = g_i(N) = 0`` and ``h(0) = 0`` are checked
    exactly; ``h > 0`` on ``grid_size`` interior points and at N. Local
    Lipschitz continuity is not decidable from samples; the largest
    finite-difference slope of f, h, g_i on [0, N] is reported instead.
    """
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    N = c.N
    for name, fn in [("f", c.f)] + [(f"g_{i + 1}", gi) for i, gi in enumerate(c.g)]:
        for pt in (0.0, N):
            v = float(fn(pt))
            if v != 0.0:
                raise AssumptionViolated(f"{name}({pt!r}) = {v!r} != 0", pt)
    h0 = float(c.h(0.0))
    if h0 != 0.0:
        raise AssumptionViolated(f"h(0) = {h0!r} != 0", 0.0)
    xs = np.append(_interior_grid(N, grid_size), N)
    hv = np.asarray(c.h(xs), dtype=np.float64)
    bad = np.flatnonzero(~(hv > 0))
    if bad.size:
        raise AssumptionViolated("h(x) > 0 fails", float(xs[bad[0]]))
    full = np.concatenate([[0.0], xs])
    lip = 0.0
    for fn in (c.f, c.h) + c.g:
        v = np.asarray(fn(full), dtype=np.float64)
        lip = max(lip, float(np.max(np.abs(np.diff(v) / np.diff(full)))))
    return ValidationReport(c.name, grid_size, float(hv[:-1].min()), lip)


def boundary_set(c: CoefficientTriple) -> tuple:
    """Points of {0, N} where the drift and every diffusion vanish."""
    out = []
    for pt in (0.0, c.N):
        if float(c.drift(pt)) == 0.0 and all(float(gi(pt)) == 0.0 for gi in c.g):
            out.append(pt)
    return tuple(out)


def eta_generic(c: CoefficientTriple, x):
    """eta from the raw coefficients."""
    x = np.asarray(x, dtype=np.float64)
    out = (c.f(x) - c.h(x)) / x
    for gi in c.g:
        out = out - 0.5 * (gi(x) / x) ** 2
    return out


def _check_domain(c, x):
    xa = np.asarray(x, dtype=np.float64)
    if not np.all((xa > 0) & (xa < c.N)):
        raise OutOfDomain(f"eta is evaluated on ]0, {c.N}[ only")
    return xa


def eta_eval(c: CoefficientTriple, x):
    """eta(x) for ``0 < x < N``; the closed form when the model has one."""
    xa = _check_domain(c, x)
    v = c.eta_closed(xa) if c.eta_closed is not None else eta_generic(c, xa)
    return float(v) if np.ndim(v) == 0 else v


def _golden_max(fn, a: float, b: float, tol: float):
    """Maximise a unimodal ``fn`` on ]a, b[ by golden-section search;
    only interior points are evaluated."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    return (c, fc) if fc >= fd else (d, fd)


def _numeric_sup(c: CoefficientTriple, grid_size: int):
    xs = _interior_grid(c.N, grid_size)
    vals = np.asarray(eta_generic(c, xs), dtype=np.float64)
    j = int(np.argmax(vals))
    lo = xs[j - 1] if j > 0 else 0.0
    hi = xs[j + 1] if j + 1 < grid_size else c.N
    x, v = _golden_max(lambda t: float(eta_generic(c, t)), lo, hi, ROOT_WIDTH * c.N)
    if vals[j] > v:
        return float(vals[j]), float(xs[j])
    return float(v), float(x)


def eta_sup(c: CoefficientTriple, grid_size: int = GRID_SIZE):
    """Supremum of eta over ]0, N[ and where it is attained (or approached).

    Numerically: dense grid, then golden-section refinement around the best
    cell down to width ``1e-12 N``. Built-in models return the exact value of
    their quadratic, after checking that the numeric path agrees within
    ``1e-8 (1 + |sup|)``.
    """
    v, x = _numeric_sup(c, grid_size)
    if c.sup_closed is None:
        return v, x
    sv, sx = c.sup_closed()
    if abs(sv - v) > SUP_AGREE * (1 + abs(sv)):
        raise ArithmeticError(
            f"closed-form sup {sv!r} and numeric sup {v!r} disagree for {c.name}")
    return float(sv), float(sx)


def is_strictly_decreasing(c: CoefficientTriple, grid_size: int = GRID_SIZE) -> bool:
    """Certificate that eta is strictly decreasing on ]0, N[.

    Uses the analytic bound on eta' when the model provides one, otherwise
    strict decrease between consecutive values on a dense grid.
    """
    if c.eta_slope_max is not None:
        return c.eta_slope_max <= 0
    vals = np.asarray(eta_generic(c, _interior_grid(c.N, grid_size)))
    return bool(np.all(np.diff(vals) < 0))


def eta_root(c: CoefficientTriple, grid_size: int = GRID_SIZE) -> float:
    """The unique zero of eta in ]0, N[ by bisection.

    Requires sup eta > 0 and a strict-decrease certificate; otherwise
    :class:`NoSignChange`. Stops when the bracket is narrower than
    ``1e-12 N``.
    """
    sup, _ = eta_sup(c, grid_size)
    if not sup > DEAD_BAND or not is_strictly_decreasing(c, grid_size):
        raise NoSignChange(f"eta has no certified sign change (sup = {sup!r})")
    xs = _interior_grid(c.N, grid_size)
    vals = np.asarray(eta_eval(c, xs))
    pos = np.flatnonzero(vals > 0)
    if pos.size == 0:
        lo, hi = 0.0, float(xs[0])
    else:
        j = int(pos[-1])
        lo = float(xs[j])
        hi = float(xs[j + 1]) if j + 1 < grid_size else c.N
    width = ROOT_WIDTH * c.N
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if eta_eval(c, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EtaProfile:
    eta: Callable = field(repr=False)
    sup_value: float
    sup_location: float
    root_xi: Optional[float]
    strictly_decreasing: bool


def eta_profile(c: CoefficientTriple, grid_size: int = GRID_SIZE) -> EtaProfile:
    sup, loc = eta_sup(c, grid_size)
    dec = is_strictly_decreasing(c, grid_size)
    try:
        xi = eta_root(c, grid_size)
    except NoSignChange:
        xi = None
    return EtaProfile(lambda x: eta_eval(c, x), sup, loc, xi, dec)


class Verdict(str, enum.Enum):
    EXTINCT = "extinct"
    PERSISTENT = "persistent"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    xi: Optional[float]
    certificate: dict

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "xi": self.xi, "certificate": self.certificate}


def classify(c: CoefficientTriple, grid_size: int = GRID_SIZE) -> Classification:
    """Extinct iff sup eta < 0; persistent (with xi) iff sup eta > 0 and eta
    is certified strictly decreasing; indeterminate otherwise, including
    ``|sup| <= 1e-12``."""
    prof = eta_profile(c, grid_size)
    cert = {
        "model": c.name,
        "sup_eta": prof.sup_value,
        "sup_location": prof.sup_location,
        "strictly_decreasing": prof.strictly_decreasing,
        "dead_band": DEAD_BAND,
    }
    if prof.sup_value < -DEAD_BAND:
        return Classification(Verdict.EXTINCT, None, cert)
    if prof.sup_value > DEAD_BAND and prof.strictly_decreasing:
        cert["eta_at_xi"] = float(eta_eval(c, prof.root_xi))
        return Classification(Verdict.PERSISTENT, prof.root_xi, cert)
    cert["reason"] = ("sup within dead band" if abs(prof.sup_value) <= DEAD_BAND
                      else "eta not certified strictly decreasing")
    return Classification(Verdict.INDETERMINATE, None, cert)


def em_generic(c: CoefficientTriple, x0: float, paths: Sequence[BrownianPath],
               clamp_epsilon: float = 1e-12):
    """Euler-Maruyama for a coefficient triple driven by ``m`` paths on a
    common grid. Steps outside ``[eps N, (1 - eps) N]`` are clamped and
    counted. Returns ``(states, clamp_count)``."""
    if len(paths) != c.m:
        raise ValueError(f"need {c.m} Brownian paths, got {len(paths)}")
    if c.m:
        grid = paths[0].grid
        if any(pa.grid != grid for pa in paths):
            raise ValueError("all driving paths must share one grid")
        dB = np.stack([pa.increments for pa in paths], axis=1)
    else:
        raise ValueError("em_generic needs at least one driving path for the grid")
    dt = grid.dt
    lo, hi = clamp_epsilon * c.N, (1 - clamp_epsilon) * c.N
    out = np.empty(grid.n_cells + 1)
    out[0] = x = float(x0)
    clamps = 0
    for k in range(grid.n_cells):
        step = float(c.drift(x)) * dt
        for i, gi in enumerate(c.g):
            step += float(gi(x)) * dB[k, i]
        x = x + step
        if x < lo or x > hi:
            clamps += 1
            x = min(max(x, lo), hi)
        out[k + 1] = x
    return out, clamps


@dataclass(frozen=True)
class OrderingReport:
    """Per-path count of steps where the lower solution exceeds the upper
    one by more than ``tolerance``."""

    violations: tuple
    max_excess: float
    tolerance: float
    n_paths: int
    n_steps: int

    @property
    def total_violations(self) -> int:
        return int(sum(self.violations))


def comparison_harness(c_low: CoefficientTriple, c_high: CoefficientTriple,
                       path_sets: Sequence[Sequence[BrownianPath]], z: float,
                       scheme: str = "euler_maruyama",
                       grid_size: int = GRID_SIZE) -> OrderingReport:
    """Simulate both equations from ``z`` with the same noise and count
    ordering violations ``X > Y + 1e-9 N``.

    Preconditions checked on a grid over [0, N]: identical diffusion
    coefficients and ``drift_low <= drift_high``
    (:class:`DriftOrderViolated` otherwise).
    """
    if scheme != "euler_maruyama":
        raise ValueError("generic coefficient triples are stepped with euler_maruyama")
    if c_low.N != c_high.N or c_low.m != c_high.m:
        raise DriftOrderViolated("triples differ in N or number of noises")
    xs = np.linspace(0.0, c_low.N, grid_size + 1)
    for gl, gh in zip(c_low.g, c_high.g):
        if not np.array_equal(np.asarray(gl(xs)), np.asarray(gh(xs))):
            raise DriftOrderViolated("diffusion coefficients differ")
    gap = np.asarray(c_low.drift(xs)) - np.asarray(c_high.drift(xs))
    if np.any(gap > 0):
        j = int(np.argmax(gap))
        raise DriftOrderViolated(f"drift_low > drift_high at x = {xs[j]!r}")
    tol = 1e-9 * c_low.N
    violations, worst, n_steps = [], 0.0, 0
    for paths in path_sets:
        x, _ = em_generic(c_low, z, paths)
        y, _ = em_generic(c_high, z, paths)
        excess = x - y
        violations.append(int(np.count_nonzero(excess > tol)))
        worst = max(worst, float(excess.max()))
        n_steps = len(x) - 1
    return OrderingReport(tuple(violations), worst, tol, len(path_sets), n_steps)
