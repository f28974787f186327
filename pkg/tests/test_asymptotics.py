import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sisde.asymptotics import (BadBand, NonPositiveState, Recurrence, WindowTooShort,
                               adaptive_simpson, crossing_count, lyapunov_estimate,
                               persistence_bracket, recurrence_classify, scale_density,
                               scale_function, scale_spec)
from sisde.exact import deterministic_solution
from sisde.framework import eta_root, model_triple
from sisde.integrators import logodds_kernel
from sisde.noise import TimeGrid, path_seed, sample_values
from sisde.params import SigmaZero, SisParams, deterministic_limit
from sisde.trajectory import BoundaryDiag, Provenance, Trajectory

from oracles import theta_mp


@st.composite
def sis(draw):
    N = draw(st.floats(10.0, 1000.0))
    beta = draw(st.floats(0.001, 1.0))
    mpg = draw(st.floats(0.5, 50.0))
    sigma = draw(st.floats(1e-3, 0.1))
    return SisParams(N, beta, mpg, sigma, N / 2)


def _traj(states, T=1.0):
    states = np.asarray(states, dtype=float)
    g = TimeGrid(T, len(states) - 1)
    return Trajectory(g, states, Provenance("fixture", "-", None, g.dt),
                      BoundaryDiag(states.min(), states.max(), 0, 0, 0))


def test_lyapunov_deterministic_extinct(p_extinct):
    tr = deterministic_solution(p_extinct, TimeGrid(50.0, 5000))
    assert -5.2 <= lyapunov_estimate(tr) <= -4.8


def test_lyapunov_constant():
    assert lyapunov_estimate(_traj(np.full(11, 3.0))) == 0.0


def test_lyapunov_nonpositive():
    with pytest.raises(NonPositiveState):
        lyapunov_estimate(_traj([1.0, 0.0, 1.0]))


def test_lyapunov_burn_in():
    # flat for t <= 50, then ln X falls by 0.1 per unit time
    tr = _traj(np.exp(np.r_[np.zeros(51), -np.arange(1, 51) * 0.1]), T=100.0)
    assert lyapunov_estimate(tr, 0.5) == pytest.approx(-0.1, rel=1e-12)
    assert lyapunov_estimate(tr) == pytest.approx(-0.05, rel=1e-12)
    with pytest.raises(ValueError):
        lyapunov_estimate(tr, 1.0)


def test_scale_density_examples(p1):
    s = scale_spec(p1)
    assert s.linear_coef == -12.5 and s.exp_coef == 12.5
    assert scale_density(p1, 0.0) == 1.0
    ref = float(theta_mp(100, 0.5, 25, 0.02, -1))
    assert scale_density(p1, -1.0) == pytest.approx(ref, rel=1e-12)
    assert round(ref, 2) == 99.33  # 99.3345...
    p0 = SisParams(100.0, 0.25, 25.0, 0.02, 10.0)
    assert scale_density(p0, -60.0) == pytest.approx(math.exp(-12.5), rel=1e-12)
    assert scale_density(p1, 10.0) == math.inf
    with pytest.raises(SigmaZero):
        scale_density(p1.replace(sigma=0.0), 0.0)


@given(sis())
@settings(max_examples=50)
def test_theta_zero_is_one(p):
    assert scale_density(p, 0.0) == 1.0


def test_adaptive_simpson_oracle():
    assert adaptive_simpson(math.exp, 0.0, 2.0, 1e-12) == pytest.approx(math.expm1(2.0), rel=1e-12)
    assert adaptive_simpson(math.sin, 0.0, math.pi, 1e-12) == pytest.approx(2.0, rel=1e-12)


def test_scale_function_examples(p1):
    assert scale_function(p1, 0.0) == 0.0
    assert scale_function(p1, 1.0) > scale_function(p1, 0.5) > 0
    assert scale_function(p1, -0.5) < 0
    with mp.workdps(30):
        ref = mp.quad(lambda y: theta_mp(100, 0.5, 25, 0.02, y), [0, -1])
    assert scale_function(p1, -1.0) == pytest.approx(float(ref), rel=1e-8)
    ratio = scale_function(p1, -40.0) / scale_function(p1, -20.0)
    assert ratio >= math.exp(50) * (1 - 1e-6)


@given(sis(), st.floats(-5.0, 0.5), st.floats(0.01, 1.0))
@settings(max_examples=30, deadline=None)
def test_psi_increasing(p, x1, gap):
    a, b = scale_function(p, x1), scale_function(p, x1 + gap)
    if math.isinf(a) or math.isinf(b):
        assert b >= a
        return
    # strict increase, resolved down to the quadrature tolerance
    tol = 1e-8 * max(abs(a), abs(b))
    assert b > a - tol
    inc = float(mp.quad(lambda y: theta_mp(p.N, p.beta, p.mu_plus_gamma, p.sigma, y), [x1, x1 + gap]))
    if inc > 2 * tol:
        assert b > a


def test_scale_overflow_is_indicator(p1):
    assert scale_function(p1, 100.0) == math.inf
    assert scale_function(p1, -100.0) == -math.inf


def test_recurrence_examples(p1, p_extinct):
    v = recurrence_classify(p1)
    assert v.verdict is Recurrence.RECURRENT and v.psi_left_diverges and v.psi_right_diverges
    v = recurrence_classify(p_extinct)
    assert v.verdict is Recurrence.TRANSIENT and not v.psi_left_diverges and v.psi_right_diverges
    v = recurrence_classify(SisParams(100.0, 0.25, 25.0, 0.02, 10.0))
    assert v.verdict is Recurrence.RECURRENT and v.psi_left_diverges
    with pytest.raises(SigmaZero):
        recurrence_classify(p1.replace(sigma=0.0))


@given(sis())
@settings(max_examples=100, deadline=None)
def test_recurrence_matches_sign_delta(p):
    v = recurrence_classify(p)
    assert (v.verdict is Recurrence.RECURRENT) == (p.delta >= 0)
    assert v.verdict is Recurrence.RECURRENT or not v.psi_left_diverges
    assert v.psi_right_diverges


def test_crossing_fixtures():
    assert crossing_count(_traj(np.linspace(1, 9, 50)), 3.0, 6.0) == 1
    assert crossing_count(_traj(np.linspace(9, 1, 50)), 3.0, 6.0) == 0
    assert crossing_count(_traj([4.0, 5.0, 7.0]), 3.0, 6.0) == 0  # partial: never below low
    k = 7
    saw = np.tile([1.0, 5.0, 9.0, 5.0], k)
    assert crossing_count(_traj(saw), 3.0, 6.0) == k
    two = np.stack([saw, np.full_like(saw, 5.0)], axis=1)
    assert crossing_count(two, 3.0, 6.0).tolist() == [k, 0]
    with pytest.raises(BadBand):
        crossing_count(_traj(saw), 6.0, 3.0)


def test_bracket_fixtures(p1):
    const = _traj(np.full(201, 49.0))
    assert persistence_bracket([const], 49.0).fraction == 0.0
    det = deterministic_solution(p1.replace(sigma=0.0), TimeGrid(50.0, 1000))
    assert persistence_bracket([det], deterministic_limit(p1)).fraction == 0.0
    with pytest.raises(WindowTooShort):
        persistence_bracket([_traj(np.full(101, 1.0))], 1.0)
    wiggle = _traj(49.0 + np.sin(np.arange(401)))
    assert persistence_bracket([wiggle, const], 49.0).fraction == 0.5


def _logodds_states(p, T, cells, n, base):
    g = TimeGrid(T, cells)
    J, _ = logodds_kernel(p, sample_values(g, [path_seed(base, i) for i in range(n)]), g.dt)
    return g, J


def test_lyapunov_bound_extinct(p_extinct):
    T = 100.0
    g, J = _logodds_states(p_extinct, T, int(T * 2**7), 100, 3)
    # ln I = J - ln(1 + e^J) + ln N
    logI = J - np.logaddexp(0.0, J) + math.log(p_extinct.N)
    k = int(0.1 * (len(g.knots) - 1))
    rates = (logI[-1] - logI[k]) / (T - g.knots[k])
    bound = -5.0 + 3 * p_extinct.N * p_extinct.sigma / math.sqrt(T)
    assert np.percentile(rates, 95) <= bound


def test_crossings_concentrate_near_xi(p1):
    xi = eta_root(model_triple("strat-corrected", p1))
    _, J = _logodds_states(p1, 50.0, 50 * 2**8, 50, 4)
    X = p1.N / (1 + np.exp(-J))
    med = lambda c: np.median(crossing_count(X, c - 5, c + 5))
    assert med(xi) > med(xi - 25) and med(xi) > med(xi + 25)
